import json

import numpy as np
import pytest

from qcap.channels import resolve_dim_cap, tensor, identity_channel
from qcap.cli import main
from qcap.errors import SizeCapError

GAUSSIAN_PROBLEM = """{
  "schema": 1,
  "channel": {
    "kind": "gaussian",
    "noise_mean_photons": 1.0,
    "cutoff": 8,
    "buffer": 6,
    "radial_nodes": 12,
    "angular_nodes": 16
  },
  "constraint": {"observable": "number_operator", "energy": 0.2},
  "solver": {"gap_tol": 1e-6, "seed": 0},
  "units": "nats"
}
"""


@pytest.fixture
def gaussian_problem(tmp_path):
    path = tmp_path / "gaussian.json"
    path.write_text(GAUSSIAN_PROBLEM)
    return str(path)


def test_ea_capacity_gaussian(gaussian_problem, capsys):
    assert main(["ea-capacity", "--problem", gaussian_problem]) == 0
    record = json.loads(capsys.readouterr().out)
    assert record["values"]["ea_capacity"] > 0.0
    assert record["values"]["duality_gap"] <= 1e-6


def test_ea_capacity_cutoff_ladder(gaussian_problem, capsys):
    assert main(["ea-capacity", "--problem", gaussian_problem, "--cutoffs", "6,8,10"]) == 0
    record = json.loads(capsys.readouterr().out)
    by_cutoff = record["values"]["capacity_by_cutoff"]
    values = [by_cutoff[k] for k in ("6", "8", "10")]
    assert values[0] <= values[1] + 2e-6 and values[1] <= values[2] + 2e-6
    assert record["values"]["monotone_ok"] is True


def test_cutoff_ladder_requires_gaussian(tmp_path, capsys):
    doc = {
        "schema": 1,
        "channel": {"kind": "identity", "dim": 2},
        "constraint": {
            "observable": [[[0.0, 0.0], [0.0, 0.0]], [[0.0, 0.0], [1.0, 0.0]]],
            "energy": 0.3,
        },
    }
    path = tmp_path / "p.json"
    path.write_text(json.dumps(doc))
    assert main(["ea-capacity", "--problem", str(path), "--cutoffs", "4,8"]) == 2


def test_dim_cap_env_override(monkeypatch):
    monkeypatch.setenv("QCAP_DIM_CAP", "8")
    assert resolve_dim_cap() == 8
    with pytest.raises(SizeCapError):
        tensor(identity_channel(4), identity_channel(4))
    monkeypatch.delenv("QCAP_DIM_CAP")
    assert resolve_dim_cap() == 4096


def test_sweep_deterministic_bytes(gaussian_problem, tmp_path):
    out_a = tmp_path / "a.csv"
    out_b = tmp_path / "b.csv"
    args = ["sweep", "--problem", gaussian_problem, "--energies", "0.05,0.1", "--seed", "3"]
    assert main(args + ["--out", str(out_a)]) == 0
    assert main(args + ["--out", str(out_b)]) == 0
    assert out_a.read_bytes() == out_b.read_bytes()
