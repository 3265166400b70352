"""Problem files and result records for the command-line front end.

A problem is a single JSON document, versioned by a ``schema`` field.
Complex numbers are always two-element [re, im] arrays so matrices
round-trip bit-exactly. Example:

    {
      "schema": 1,
      "channel": {"kind": "identity", "dim": 2},
      "constraint": {"observable": "number_operator", "energy": 0.3},
      "state": {"kind": "maximally_mixed"},
      "solver": {"gap_tol": 1e-6, "seed": 0},
      "units": "nats"
    }

Channel kinds: identity, dephasing, depolarizing, amplitude_damping,
replacement, kraus (explicit operator list), gaussian (classical-noise
spec). The constraint observable is either the string "number_operator"
or an explicit Hermitian matrix.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .channels import KrausChannel, build_standard
from .errors import ProblemFormatError
from .gaussian import GaussianNoiseSpec, gaussian_classical_noise, thermal_state
from .operators import ConstraintObservable, DensityMatrix, maximally_mixed, number_operator, pure_density
from .optimize import ConstraintSpec, SolverOptions

SCHEMA_VERSION = 1
LN2 = math.log(2.0)


def _fail(path: str, message: str) -> ProblemFormatError:
    return ProblemFormatError(f"{path}: {message}")


def _complex_entry(value, path: str) -> complex:
    if not (isinstance(value, (list, tuple)) and len(value) == 2):
        raise _fail(path, f"complex entries must be [re, im] pairs, got {value!r}")
    re, im = value
    if not all(isinstance(x, (int, float)) for x in (re, im)):
        raise _fail(path, f"complex entry parts must be numbers, got {value!r}")
    return complex(re, im)


def parse_complex_matrix(rows, path: str) -> np.ndarray:
    if not isinstance(rows, list) or not rows:
        raise _fail(path, "expected a nonempty list of matrix rows")
    parsed = []
    for i, row in enumerate(rows):
        if not isinstance(row, list):
            raise _fail(f"{path}[{i}]", "expected a list of [re, im] pairs")
        parsed.append([_complex_entry(v, f"{path}[{i}][{j}]") for j, v in enumerate(row)])
    widths = {len(r) for r in parsed}
    if len(widths) != 1:
        raise _fail(path, f"ragged matrix rows with widths {sorted(widths)}")
    return np.array(parsed, dtype=complex)


def encode_complex_matrix(matrix: np.ndarray) -> list:
    return [[[float(v.real), float(v.imag)] for v in row] for row in np.asarray(matrix, dtype=complex)]


@dataclass
class Problem:
    channel: KrausChannel
    constraint: ConstraintSpec
    solver: SolverOptions
    units: str
    state: DensityMatrix | None = None
    info_beta: float = 1.0
    sweep_energies: tuple[float, ...] = ()
    raw: dict = field(default_factory=dict)

    def digest(self) -> str:
        canonical = json.dumps(self.raw, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode()).hexdigest()


def _build_channel(spec, path: str) -> KrausChannel:
    if not isinstance(spec, dict) or "kind" not in spec:
        raise _fail(path, "channel must be an object with a 'kind' field")
    kind = spec["kind"]
    try:
        if kind == "kraus":
            ops = [
                parse_complex_matrix(op, f"{path}.ops[{i}]")
                for i, op in enumerate(spec.get("ops", []))
            ]
            if not ops:
                raise _fail(f"{path}.ops", "explicit Kraus channels need at least one operator")
            return KrausChannel(ops)
        if kind == "gaussian":
            gspec = GaussianNoiseSpec(
                noise_mean_photons=float(spec["noise_mean_photons"]),
                cutoff=int(spec["cutoff"]),
                buffer=int(spec.get("buffer", 8)),
                radial_nodes=int(spec.get("radial_nodes", 24)),
                angular_nodes=int(spec.get("angular_nodes", 32)),
            )
            return gaussian_classical_noise(gspec)
        if kind == "replacement":
            target = parse_complex_matrix(spec["target"], f"{path}.target")
            return build_standard("replacement", target=DensityMatrix(target))
        params = {k: v for k, v in spec.items() if k != "kind"}
        return build_standard(kind, **params)
    except ProblemFormatError:
        raise
    except KeyError as exc:
        raise _fail(path, f"missing channel field {exc}") from exc
    except Exception as exc:
        raise _fail(path, f"invalid channel: {exc}") from exc


def _build_constraint(spec, channel: KrausChannel, path: str) -> ConstraintSpec:
    if not isinstance(spec, dict) or "energy" not in spec:
        raise _fail(path, "constraint must be an object with an 'energy' field")
    obs_spec = spec.get("observable", "number_operator")
    try:
        if obs_spec == "number_operator":
            observable = number_operator(channel.dim_in)
        else:
            observable = ConstraintObservable(
                parse_complex_matrix(obs_spec, f"{path}.observable")
            )
        return ConstraintSpec(observable, float(spec["energy"]))
    except ProblemFormatError:
        raise
    except Exception as exc:
        raise _fail(path, f"invalid constraint: {exc}") from exc


def _build_state(spec, dim: int, path: str) -> DensityMatrix:
    try:
        if isinstance(spec, dict) and "kind" in spec:
            kind = spec["kind"]
            if kind == "maximally_mixed":
                return maximally_mixed(dim)
            if kind == "thermal":
                return thermal_state(float(spec["mean_photons"]), dim)
            if kind == "pure":
                amps = [
                    _complex_entry(v, f"{path}.amplitudes[{i}]")
                    for i, v in enumerate(spec["amplitudes"])
                ]
                return pure_density(np.array(amps))
            raise _fail(path, f"unknown state kind {kind!r}")
        if isinstance(spec, dict) and "matrix" in spec:
            return DensityMatrix(parse_complex_matrix(spec["matrix"], f"{path}.matrix"))
        raise _fail(path, "state must carry a 'kind' or an explicit 'matrix'")
    except ProblemFormatError:
        raise
    except Exception as exc:
        raise _fail(path, f"invalid state: {exc}") from exc


def _build_solver(spec, path: str) -> SolverOptions:
    if spec is None:
        return SolverOptions()
    if not isinstance(spec, dict):
        raise _fail(path, "solver options must be an object")
    defaults = SolverOptions()
    try:
        return SolverOptions(
            max_iters=int(spec.get("max_iters", defaults.max_iters)),
            gap_tol=float(spec.get("gap_tol", defaults.gap_tol)),
            mu_bisect_tol=float(spec.get("mu_bisect_tol", defaults.mu_bisect_tol)),
            restarts=int(spec.get("restarts", defaults.restarts)),
            seed=int(spec.get("seed", defaults.seed)),
        )
    except Exception as exc:
        raise _fail(path, f"invalid solver options: {exc}") from exc


def parse_problem(text: str) -> Problem:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ProblemFormatError(f"not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ProblemFormatError("problem document must be a JSON object")
    if raw.get("schema") != SCHEMA_VERSION:
        raise ProblemFormatError(
            f"schema: expected {SCHEMA_VERSION}, got {raw.get('schema')!r}"
        )
    if "channel" not in raw or "constraint" not in raw:
        raise ProblemFormatError("problem needs 'channel' and 'constraint' sections")
    channel = _build_channel(raw["channel"], "channel")
    constraint = _build_constraint(raw["constraint"], channel, "constraint")
    solver = _build_solver(raw.get("solver"), "solver")
    units = raw.get("units", "nats")
    if units not in ("nats", "bits"):
        raise ProblemFormatError(f"units: expected 'nats' or 'bits', got {units!r}")
    state = None
    if "state" in raw:
        state = _build_state(raw["state"], channel.dim_in, "state")
    energies = raw.get("sweep", {}).get("energies", []) if isinstance(raw.get("sweep"), dict) else []
    if energies and sorted(energies) != list(energies):
        raise ProblemFormatError("sweep.energies must be ascending")
    return Problem(
        channel=channel,
        constraint=constraint,
        solver=solver,
        units=units,
        state=state,
        info_beta=float(raw.get("info_beta", 1.0)),
        sweep_energies=tuple(float(e) for e in energies),
        raw=raw,
    )


def load_problem(path: str) -> Problem:
    try:
        with open(path, "r", encoding="utf-8") as handle:
            text = handle.read()
    except OSError as exc:
        raise ProblemFormatError(f"cannot read problem file {path!r}: {exc}") from exc
    return parse_problem(text)


@dataclass
class ResultRecord:
    """Machine-readable outcome of one CLI command.

    Reproducible: identical inputs and seed give identical records apart
    from ``wall_time_s``.
    """

    command: str
    inputs_digest: str
    values: dict
    units: str
    flags: tuple[str, ...]
    wall_time_s: float
    version: str = __version__

    def to_json(self) -> str:
        payload = {
            "command": self.command,
            "inputs_digest": self.inputs_digest,
            "values": self.values,
            "units": self.units,
            "flags": list(self.flags),
            "wall_time_s": self.wall_time_s,
            "version": self.version,
        }
        return json.dumps(payload, sort_keys=True, indent=2)


def convert_units(value_nats: float, units: str) -> float:
    if units == "bits":
        return value_nats / LN2
    return value_nats
