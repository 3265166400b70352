"""Runnable invariant suites behind ``qcap verify``.

Each suite re-checks the library's structural identities on seeded random
instances and reports measured residuals, so a binary or environment
regression shows up as a named failing check rather than a wrong capacity
number. The ``corrupt`` flag is a harness self-test: it deliberately
inflates one residual to prove failures are reported.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channels import compose, constraint_tensor, random_channel, tensor
from .entropy import (
    Ensemble,
    entropy,
    entropy_upper_bound,
    free_energy_residual,
    mutual_information,
    mutual_information_via_relent,
    relative_entropy,
    thermal_entropy,
)
from .errors import ValidationError
from .gaussian import GaussianNoiseSpec, gaussian_classical_noise, thermal_state
from .operators import (
    ConstraintObservable,
    DensityMatrix,
    expected_value,
    gibbs_state,
    number_operator,
    partial_trace,
    pure_density,
    purify,
    random_density,
    random_hermitian,
    random_pure_vector,
    solve_beta,
    trace_norm,
)
from .optimize import (
    ConstraintSpec,
    SolverOptions,
    linear_oracle,
    maximize_chi,
    maximize_mutual_info,
    mutual_info_gradient,
)

SUITES = ("entropy", "channels", "optimize", "gaussian")


@dataclass(frozen=True)
class CheckResult:
    suite: str
    name: str
    residual: float
    threshold: float

    @property
    def passed(self) -> bool:
        return self.residual <= self.threshold

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] {self.suite}/{self.name}: residual {self.residual:.3e} (tol {self.threshold:.1e})"


def _entropy_suite(seed: int) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    checks = []

    worst = 0.0
    for _ in range(100):
        dim = int(rng.integers(2, 9))
        p = rng.dirichlet(np.ones(3))
        states = [random_density(dim, rng) for _ in range(3)]
        avg = DensityMatrix(sum(pi * s.matrix for pi, s in zip(p, states)))
        slack = entropy(avg) - sum(pi * entropy(s) for pi, s in zip(p, states))
        worst = max(worst, -slack)
    checks.append(CheckResult("entropy", "concavity", worst, 1e-10))

    worst = 0.0
    for _ in range(30):
        dim = int(rng.integers(2, 6))
        rho, sigma = random_density(dim, rng), random_density(dim, rng)
        worst = max(worst, -relative_entropy(rho, sigma))
        worst = max(worst, relative_entropy(rho, rho))
    checks.append(CheckResult("entropy", "relative_entropy_nonneg_zero", worst, 1e-9))

    worst = 0.0
    for _ in range(30):
        dim = int(rng.integers(2, 4))
        k = int(rng.integers(2, 4))
        p = rng.dirichlet(np.ones(k))
        ens = Ensemble(tuple((float(pi), random_density(dim, rng)) for pi in p))
        ch = random_channel(dim, dim, 2, rng)
        outs = [(pi, ch.apply(s)) for pi, s in ens.members]
        avg = DensityMatrix(sum(pi * o.matrix for pi, o in outs))
        direct = entropy(avg) - sum(pi * entropy(o) for pi, o in outs)
        relform = sum(pi * relative_entropy(o, avg) for pi, o in outs)
        worst = max(worst, abs(direct - relform))
    checks.append(CheckResult("entropy", "holevo_two_forms", worst, 1e-8))

    worst = 0.0
    for _ in range(40):
        dim = int(rng.integers(2, 4))
        s = random_density(dim, rng)
        ch = random_channel(dim, dim, int(rng.integers(1, 4)), rng)
        worst = max(
            worst, abs(mutual_information(s, ch) - mutual_information_via_relent(s, ch))
        )
    checks.append(CheckResult("entropy", "mutual_info_route_agreement", worst, 1e-7))

    worst = 0.0
    for _ in range(20):
        s = random_density(2, rng)
        inner = random_channel(2, 2, 2, rng)
        outer = random_channel(2, 2, 2, rng)
        worst = max(
            worst, mutual_information(s, compose(outer, inner)) - mutual_information(s, inner)
        )
    checks.append(CheckResult("entropy", "data_processing", worst, 1e-8))

    f = number_operator(6)
    worst = 0.0
    for _ in range(50):
        s = random_density(6, rng)
        beta = 0.2 + 2.0 * rng.random()
        worst = max(worst, free_energy_residual(s, f, beta))
        bound_slack = entropy(s) - entropy_upper_bound(f, beta, expected_value(s, f))
        worst = max(worst, bound_slack)
    checks.append(CheckResult("entropy", "free_energy_identity", worst, 1e-8))

    worst = 0.0
    for dim in (2, 5, 9, 16):
        s = random_density(dim, rng)
        back = partial_trace(pure_density(purify(s)), (dim, dim), keep=0)
        worst = max(worst, trace_norm(back.matrix - s.matrix))
    checks.append(CheckResult("entropy", "purify_roundtrip", worst, 1e-9))

    worst = 0.0
    for energy in (0.2, 1.0, 2.2):
        beta = solve_beta(f, energy)
        state = gibbs_state(f, beta)
        worst = max(worst, abs(expected_value(state, f) - energy))
        worst = max(worst, free_energy_residual(state, f, beta) / 1.0)
    checks.append(CheckResult("entropy", "gibbs_energy_match", worst, 1e-8))
    return checks


def _channels_suite(seed: int) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    checks = []

    worst = 0.0
    for _ in range(100):
        din = int(rng.integers(2, 9))
        dout = int(rng.integers(2, 9))
        rank = max(int(rng.integers(1, 4)), -(-din // dout))
        ch = random_channel(din, dout, rank, rng)
        s = random_density(din, rng)
        x = random_hermitian(dout, rng)
        lhs = np.trace(ch.apply(s).matrix @ x).real
        rhs = np.trace(s.matrix @ ch.dual_apply(x)).real
        scale = max(1.0, float(np.abs(np.linalg.eigvalsh(x)).max()))
        worst = max(worst, abs(lhs - rhs) / scale)
    checks.append(CheckResult("channels", "duality_pairing", worst, 1e-10))

    worst = 0.0
    for _ in range(20):
        ch = random_channel(3, 3, 3, rng)
        s = pure_density(random_pure_vector(3, rng))
        worst = max(worst, abs(entropy(ch.apply(s)) - entropy(ch.complementary_apply(s))))
    checks.append(CheckResult("channels", "pure_input_isospectral", worst, 1e-8))

    worst = 0.0
    for _ in range(10):
        a = random_channel(2, 2, 2, rng)
        b = random_channel(3, 3, 2, rng)
        rho, sigma = random_density(2, rng), random_density(3, rng)
        out_ab = tensor(a, b).apply(DensityMatrix(np.kron(rho.matrix, sigma.matrix)))
        out_ba = tensor(b, a).apply(DensityMatrix(np.kron(sigma.matrix, rho.matrix)))
        worst = max(
            worst, float(np.abs(np.sort(out_ab.eigenvalues) - np.sort(out_ba.eigenvalues)).max())
        )
    checks.append(CheckResult("channels", "tensor_reorder_isospectral", worst, 1e-10))

    worst = 0.0
    for _ in range(30):
        ch = random_channel(3, 4, 3, rng)
        out = ch.apply(random_density(3, rng))
        worst = max(worst, abs(float(np.trace(out.matrix).real) - 1.0) - ch.tp_defect)
    checks.append(CheckResult("channels", "trace_preservation", worst, 1e-10))

    f = ConstraintObservable(np.diag([0.0, 1.0]))
    f2 = constraint_tensor(f, 2)
    residual = float(np.abs(np.sort(f2.spectrum.eigenvalues) - np.array([0.0, 1.0, 1.0, 2.0])).max())
    checks.append(CheckResult("channels", "constraint_tensor_spectrum", residual, 1e-12))
    return checks


def _optimize_suite(seed: int) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    checks = []
    f = ConstraintObservable(np.diag([0.0, 1.0]))

    worst = 0.0
    step = 1e-5
    for _ in range(5):
        ch = random_channel(2, 2, 2, rng)
        s = DensityMatrix(0.5 * random_density(2, rng).matrix + 0.25 * np.eye(2))
        grad = mutual_info_gradient(s, ch)
        for _ in range(20):
            d = random_hermitian(2, rng)
            d -= np.trace(d).real / 2.0 * np.eye(2)
            plus = mutual_information(DensityMatrix(s.matrix + step * d), ch)
            minus = mutual_information(DensityMatrix(s.matrix - step * d), ch)
            fd = (plus - minus) / (2.0 * step)
            analytic = float(np.tensordot(grad, d.T, axes=2).real)
            worst = max(worst, abs(fd - analytic) / max(1.0, abs(fd)))
    checks.append(CheckResult("optimize", "gradient_finite_difference", worst, 1e-5))

    worst = 0.0
    for _ in range(10):
        g = random_hermitian(5, rng)
        fr = ConstraintObservable(np.diag(np.sort(rng.random(5) * 2.0)))
        energy = fr.f_min + 0.3 * (fr.f_max - fr.f_min)
        res = linear_oracle(g, ConstraintSpec(fr, energy))
        worst = max(worst, res.residual)
        worst = max(worst, expected_value(res.state, fr) - energy)
    checks.append(CheckResult("optimize", "oracle_stationarity", worst, 1e-8))

    worst_gap, worst_slack, worst_order = 0.0, 0.0, 0.0
    opts = SolverOptions(restarts=2)
    for _ in range(5):
        ch = random_channel(2, 2, 2, rng)
        cspec = ConstraintSpec(f, 0.2 + 0.4 * rng.random())
        ea = maximize_mutual_info(ch, cspec, opts)
        chi = maximize_chi(ch, cspec, m=2, opts=opts)
        worst_gap = max(worst_gap, ea.duality_gap)
        worst_slack = max(worst_slack, -ea.constraint_slack, -chi.constraint_slack)
        worst_order = max(worst_order, chi.value - ea.value)
    checks.append(CheckResult("optimize", "certified_gap", worst_gap, 1e-6))
    checks.append(CheckResult("optimize", "optimizer_feasibility", worst_slack, 1e-8))
    checks.append(CheckResult("optimize", "chi_below_ea", worst_order, 1e-6))

    ch = random_channel(2, 2, 2, rng)
    values = [maximize_mutual_info(ch, ConstraintSpec(f, e)).value for e in (0.15, 0.3, 0.45)]
    mono = max(values[0] - values[1], values[1] - values[2])
    concave = 0.5 * (values[0] + values[2]) - values[1]
    checks.append(CheckResult("optimize", "value_monotone_in_energy", mono, 2e-6))
    checks.append(CheckResult("optimize", "value_midpoint_concave", concave, 2e-6))
    return checks


def _gaussian_suite(seed: int) -> list[CheckResult]:
    checks = []
    cutoff = 24  # thermal-entropy oracle needs the g(2) tail resolved

    ch = gaussian_classical_noise(GaussianNoiseSpec(1.0, cutoff))
    checks.append(CheckResult("gaussian", "completeness_after_renorm", ch.tp_defect, 1e-6))

    mean = expected_value(ch.apply(thermal_state(0.0, cutoff)), number_operator(cutoff))
    checks.append(CheckResult("gaussian", "vacuum_output_mean", abs(mean - 1.0), 2e-3))

    out_entropy = entropy(ch.apply(thermal_state(1.0, cutoff)))
    checks.append(
        CheckResult("gaussian", "thermal_output_entropy", abs(out_entropy - thermal_entropy(2.0)), 5e-3)
    )

    low = gaussian_classical_noise(GaussianNoiseSpec(1e-8, 12))
    probe = thermal_state(0.5, 12)
    checks.append(
        CheckResult(
            "gaussian",
            "zero_noise_limit_identity",
            trace_norm(low.apply(probe).matrix - probe.matrix),
            1e-4,
        )
    )

    reference = gaussian_classical_noise(
        GaussianNoiseSpec(1.0, 12, radial_nodes=48, angular_nodes=64)
    )
    probe = thermal_state(0.8, 12)
    ref_out = reference.apply(probe).matrix
    errors = []
    for radial, angular in ((6, 8), (10, 16), (16, 24), (24, 32)):
        step = gaussian_classical_noise(
            GaussianNoiseSpec(1.0, 12, radial_nodes=radial, angular_nodes=angular)
        )
        errors.append(trace_norm(step.apply(probe).matrix - ref_out))
    # distance to the refined reference must not grow along the ladder
    worst = max(max(b - a for a, b in zip(errors, errors[1:])), 0.0)
    checks.append(CheckResult("gaussian", "refinement_ladder_monotone", worst, 1e-12))
    return checks


def run_suite(name: str, seed: int = 0, corrupt: bool = False) -> list[CheckResult]:
    """Run one named suite (or 'all'); returns per-check results."""
    suites = {
        "entropy": _entropy_suite,
        "channels": _channels_suite,
        "optimize": _optimize_suite,
        "gaussian": lambda s: _gaussian_suite(s),
    }
    if name == "all":
        results = []
        for key in SUITES:
            results.extend(suites[key](seed))
    elif name in suites:
        results = suites[name](seed)
    else:
        raise ValidationError(f"unknown suite {name!r}; choose from {SUITES + ('all',)}")
    if corrupt and results:
        first = results[0]
        results[0] = CheckResult(first.suite, first.name, first.residual + 1e6, first.threshold)
    return results
