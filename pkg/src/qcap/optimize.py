"""Constrained capacity solvers.

Two maximizations are exposed:

* ``maximize_mutual_info`` solves sup I(S, Phi) over Tr SF <= E, the
  entanglement-assisted capacity value, by entropic mirror ascent polished
  with Frank-Wolfe steps. The linear oracle yields a per-iterate duality
  gap that upper-bounds the distance to the optimum by concavity, so every
  non-flagged result is certified.
* ``maximize_chi`` is an explicitly heuristic lower-bound engine for the
  one-shot constrained Holevo quantity: alternating Blahut-Arimoto
  probability updates and local pure-state ascent, multi-started. chi is
  not concave in the states, so no certificate is produced.

Harnesses for two-copy additivity, truncation convergence and the
attainment sufficient condition live here as well.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .channels import KrausChannel, constraint_tensor, tensor
from .entropy import Ensemble, entropy, holevo_chi, mutual_information, relative_entropy
from .errors import ConvergenceError, InfeasibleError, ValidationError
from .operators import (
    ConstraintObservable,
    DensityMatrix,
    Spectrum,
    expected_value,
    gibbs_state,
    hermitian_part,
    maximally_mixed,
    solve_beta,
)

TIGHT_TOL = 1e-12
ANCHOR_MIX = 1e-9
ETA_MIN = 1e-3
ETA_MAX = 1.0


@dataclass(frozen=True)
class ConstraintSpec:
    """Linear input constraint Tr SF <= energy."""

    observable: ConstraintObservable
    energy: float

    def __post_init__(self):
        if self.energy < self.observable.f_min - TIGHT_TOL:
            raise InfeasibleError(
                f"energy {self.energy!r} below the spectral floor {self.observable.f_min!r}"
            )

    @property
    def tight_ground(self) -> bool:
        """True when the bound pins the support to F's ground eigenspace."""
        return self.energy <= self.observable.f_min + TIGHT_TOL


@dataclass(frozen=True)
class SolverOptions:
    max_iters: int = 2000
    gap_tol: float = 1e-6
    mu_bisect_tol: float = 1e-10
    restarts: int = 8
    seed: int = 0

    def __post_init__(self):
        if min(self.max_iters, self.restarts) < 1 or min(self.gap_tol, self.mu_bisect_tol) <= 0:
            raise ValidationError(f"solver options must be positive: {self}")


@dataclass
class CapacityResult:
    value: float
    optimizer: DensityMatrix | Ensemble
    duality_gap: float
    iterations: int
    constraint_slack: float
    diagnostics: dict = field(default_factory=dict)
    flags: tuple[str, ...] = ()

    def __post_init__(self):
        if self.duality_gap < -1e-9:
            raise ValidationError(f"negative duality gap {self.duality_gap!r}")
        if self.constraint_slack < -1e-8:
            raise ValidationError(f"constraint violated: slack {self.constraint_slack!r}")

    @property
    def certified(self) -> bool:
        return "HEURISTIC" not in self.flags and "NOT_CERTIFIED" not in self.flags


# ---------------------------------------------------------------------------
# Gradient machinery
# ---------------------------------------------------------------------------

def _log_full(spec: Spectrum) -> np.ndarray:
    w = np.clip(spec.eigenvalues, 1e-300, None)
    return (spec.eigenvectors * np.log(w)) @ spec.eigenvectors.conj().T


def _clamped_log_values(w: np.ndarray) -> np.ndarray:
    # Eigenvalues below the floor are dominated by eigensolver noise; their
    # exact log is unavailable, but clamping keeps the strong repulsion of
    # near-null directions in the gradient (zeroing them instead creates
    # phantom ascent directions that keep the duality gap open).
    floor = max(1e-18, float(w.max()) * 1e-17)
    return np.log(np.maximum(w, floor))


def _log_clamped(spec: Spectrum) -> np.ndarray:
    lw = _clamped_log_values(spec.eigenvalues)
    return (spec.eigenvectors * lw) @ spec.eigenvectors.conj().T


def _dual_complementary_log(channel: KrausChannel, env: DensityMatrix) -> np.ndarray:
    """Phi_E*[log Phi_E[S]] reusing the environment eigenbasis."""
    spec = env.spectrum()
    y = _clamped_log_values(spec.eigenvalues)
    m = channel.num_kraus
    collapsed = (spec.eigenvectors.conj().T @ channel.ops.reshape(m, -1)).reshape(
        m, channel.dim_out, channel.dim_in
    )
    flat = collapsed.reshape(m * channel.dim_out, channel.dim_in)
    weighted = (collapsed * y[:, None, None]).reshape(m * channel.dim_out, channel.dim_in)
    return hermitian_part(flat.conj().T @ weighted)


def _objective_and_gradient(
    state: DensityMatrix, channel: KrausChannel
) -> tuple[float, np.ndarray, np.ndarray]:
    """Returns (I, gradient, log S); gradients assume full-rank iterates."""
    out = channel.apply(state)
    env = channel.complementary_apply(state)
    value = entropy(state) + entropy(out) - entropy(env)
    log_s = _log_full(state.spectrum())
    grad = -log_s - channel.dual_apply(_log_clamped(out.spectrum()))
    grad = grad + _dual_complementary_log(channel, env)
    return value, hermitian_part(grad), log_s


def mutual_info_gradient(state: DensityMatrix, channel: KrausChannel) -> np.ndarray:
    """Analytic gradient of I(S, Phi): -log S - Phi*[log Phi[S]] + Phi_E*[log Phi_E[S]].

    Additive multiples of the identity are immaterial on the trace-one
    slice. Rank-deficient inputs are nudged into the interior first.
    """
    if state.eigenvalues[0] <= 1e-11:
        warnings.warn("rank-deficient state perturbed to full rank for the gradient")
        mixed = (1.0 - 1e-12) * state.matrix + 1e-12 * np.eye(state.dim) / state.dim
        state = DensityMatrix(hermitian_part(mixed))
    return _objective_and_gradient(state, channel)[1]


# ---------------------------------------------------------------------------
# Linear oracle
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LinearOracleResult:
    state: DensityMatrix
    value: float           # Tr G X for the constructed maximizer
    upper_bound: float     # certified Lagrangian bound max Tr G X <= this
    multiplier: float
    residual: float        # upper_bound - value; optimality certificate


def _top_space_cost_range(
    grad: np.ndarray, f_matrix: np.ndarray, mu: float, degen_tol: float
) -> tuple[np.ndarray, np.ndarray, float]:
    """Top eigenspace of G - mu F plus the F-cost range achievable inside it."""
    w, v = np.linalg.eigh(hermitian_part(grad - mu * f_matrix))
    mask = w >= w[-1] - degen_tol
    basis = v[:, mask]
    f_restricted = hermitian_part(basis.conj().T @ f_matrix @ basis)
    fw, fv = np.linalg.eigh(f_restricted)
    return basis @ fv, fw, float(w[-1])


def linear_oracle(
    grad: np.ndarray, cspec: ConstraintSpec, mu_tol: float = 1e-10
) -> LinearOracleResult:
    """Maximize Tr G X over X >= 0, Tr X = 1, Tr XF <= E.

    Returns the top eigenvector of G when feasible; otherwise bisects the
    multiplier mu >= 0 and returns a two-point mixture on the top
    eigenspace of G - mu F hitting Tr XF = E. ``upper_bound`` is the dual
    value lambda_max(G - mu F) + mu E, valid for every mu >= 0, so the
    Frank-Wolfe gap computed from it is a certificate even when the
    bisection is inexact.
    """
    g = hermitian_part(np.asarray(grad, dtype=complex))
    f_matrix = cspec.observable.matrix
    energy = cspec.energy
    scale = max(1.0, float(np.abs(np.linalg.eigvalsh(g)).max()))
    base_tol = 1e-12 * scale
    cost_tol = 1e-9 * max(1.0, abs(energy))

    def build(mu, vecs, costs, lam):
        f_lo, f_hi = float(costs[0]), float(costs[-1])
        upper = lam + mu * energy
        if energy >= f_hi or f_hi - f_lo <= 1e-14:
            x = np.outer(vecs[:, -1], vecs[:, -1].conj())  # best feasible atom
        else:
            t = min(1.0, max(0.0, (f_hi - energy) / (f_hi - f_lo)))
            x = t * np.outer(vecs[:, 0], vecs[:, 0].conj()) + (1.0 - t) * np.outer(
                vecs[:, -1], vecs[:, -1].conj()
            )
        state = DensityMatrix(hermitian_part(x))
        value = float(np.tensordot(state.matrix, g.T, axes=2).real)
        return LinearOracleResult(state, value, upper, mu, max(0.0, upper - value))

    # Ground-pinned constraint: optimize inside F's lowest eigenspace.
    if energy <= cspec.observable.f_min + TIGHT_TOL:
        basis = cspec.observable.ground_basis()
        gw, gv = np.linalg.eigh(hermitian_part(basis.conj().T @ g @ basis))
        x = basis @ gv[:, -1]
        state = DensityMatrix(np.outer(x, x.conj()))
        return LinearOracleResult(state, float(gw[-1]), float(gw[-1]), math.inf, 0.0)

    vecs, costs, lam = _top_space_cost_range(g, f_matrix, 0.0, base_tol)
    if costs[0] <= energy + 1e-12:
        return build(0.0, vecs, costs, lam)

    gap_f = cspec.observable.ground_gap or 1e-6
    hi = 2.0 * (scale + 1.0) / gap_f
    for _ in range(60):
        hi_space = _top_space_cost_range(g, f_matrix, hi, base_tol)
        if hi_space[1][0] <= energy:
            break
        hi *= 2.0
    else:
        raise ConvergenceError(f"oracle multiplier bracket not found in [0, {hi:.3e}]")

    # Invariants: min cost above budget at lo, max cost at or below budget
    # at hi (else the mid evaluation straddles the budget and we are done).
    lo = 0.0
    for _ in range(300):
        if energy - float(hi_space[1][-1]) <= cost_tol:
            return build(hi, *hi_space)
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break  # bracket at machine precision
        mid_space = _top_space_cost_range(g, f_matrix, mid, base_tol)
        if mid_space[1][0] > energy:
            lo = mid
        else:
            hi, hi_space = mid, mid_space
    # Degenerate crossing: widen the eigenspace tolerance until the cost
    # range straddles the budget.
    f_range = max(cspec.observable.f_max - cspec.observable.f_min, 1.0)
    degen = max(base_tol, 4.0 * mu_tol * f_range)
    while degen <= 1e-5 * scale:
        vecs, costs, lam = _top_space_cost_range(g, f_matrix, hi, degen)
        if costs[0] <= energy + 1e-12 and energy <= costs[-1] + 1e-12:
            return build(hi, vecs, costs, lam)
        degen *= 10.0
    raise ConvergenceError(
        f"oracle bisection failed to capture the constraint at mu in [{lo:.6e}, {hi:.6e}]"
    )


# ---------------------------------------------------------------------------
# Entropic projection (mirror step)
# ---------------------------------------------------------------------------

def _state_from_log_weights(log_matrix: np.ndarray) -> DensityMatrix:
    w, v = np.linalg.eigh(hermitian_part(log_matrix))
    p = np.exp(w - w[-1])
    return DensityMatrix._from_eigh(p / p.sum(), v)


def _entropic_projection(
    log_matrix: np.ndarray, cspec: ConstraintSpec | None, mu_tol: float
) -> DensityMatrix:
    """State proportional to exp(log_matrix - mu F) with the smallest
    mu >= 0 that satisfies the constraint; the feasible bisection endpoint
    is returned, so the result never violates Tr SF <= E."""
    if cspec is None:
        return _state_from_log_weights(log_matrix)
    f_matrix = cspec.observable.matrix
    energy = cspec.energy

    def candidate(mu: float) -> tuple[DensityMatrix, float]:
        state = _state_from_log_weights(log_matrix - mu * f_matrix)
        return state, expected_value(state, cspec.observable)

    state, cost = candidate(0.0)
    if cost <= energy:
        return state
    hi = 1.0
    for _ in range(200):
        state_hi, cost_hi = candidate(hi)
        if cost_hi <= energy:
            break
        hi *= 2.0
    else:
        raise ConvergenceError("constraint projection could not bracket the multiplier")
    lo = 0.0
    while hi - lo > mu_tol * max(1.0, hi):
        mid = 0.5 * (lo + hi)
        state_mid, cost_mid = candidate(mid)
        if cost_mid > energy:
            lo = mid
        else:
            hi, state_hi, cost_hi = mid, state_mid, cost_mid
        if energy - cost_hi <= 1e-12 * max(1.0, abs(energy)):
            break
    return state_hi


# ---------------------------------------------------------------------------
# Mutual-information maximization
# ---------------------------------------------------------------------------

def _mix(a: DensityMatrix, b: DensityMatrix, weight: float) -> DensityMatrix:
    return DensityMatrix(hermitian_part((1.0 - weight) * a.matrix + weight * b.matrix))


def _line_search(
    channel: KrausChannel,
    start: DensityMatrix,
    target: DensityMatrix,
    value0: float,
    slope: float,
) -> DensityMatrix:
    """Armijo backtracking along the Frank-Wolfe segment [start, target].

    ``slope`` is the directional derivative Tr G (X - S) at gamma = 0,
    positive whenever the duality gap is open, so a sufficient-increase
    step always exists for the concave objective.
    """
    gamma = 1.0
    best_val, best_state = value0, start
    for _ in range(14):
        cand = _mix(start, target, gamma)
        val = mutual_information(cand, channel)
        if val >= value0 + 0.3 * gamma * slope:
            return cand
        if val > best_val:
            best_val, best_state = val, cand
        gamma *= 0.5
    return best_state


def _anchor_state(channel: KrausChannel, cspec: ConstraintSpec | None) -> DensityMatrix:
    if cspec is None:
        return maximally_mixed(channel.dim_in)
    beta = solve_beta(cspec.observable, cspec.energy)
    if beta == 0.0:
        return maximally_mixed(channel.dim_in)
    return gibbs_state(cspec.observable, beta)


def _solve_mutual_info(
    channel: KrausChannel, cspec: ConstraintSpec | None, opts: SolverOptions
) -> tuple[DensityMatrix, float, float, int, dict]:
    anchor = _anchor_state(channel, cspec)
    state = anchor
    eta = 1.0
    gap = math.inf
    value = -math.inf
    best = None  # (gap, value, state) at the best certificate seen
    gap_stall = 0
    iterations = 0
    for iterations in range(1, opts.max_iters + 1):
        value, grad, log_s = _objective_and_gradient(state, channel)
        if cspec is None:
            w, v = np.linalg.eigh(grad)
            top = v[:, -1]
            oracle = LinearOracleResult(
                DensityMatrix(np.outer(top, top.conj())), float(w[-1]), float(w[-1]), 0.0, 0.0
            )
        else:
            oracle = linear_oracle(grad, cspec, mu_tol=opts.mu_bisect_tol)
        linearized = float(np.tensordot(state.matrix, grad.T, axes=2).real)
        gap = oracle.upper_bound - linearized
        if best is None or gap < best[0]:
            best = (gap, value, state)
        if gap <= opts.gap_tol:
            break
        if gap < best[0] * 1.05:
            gap_stall = 0
        else:
            gap_stall += 1
            if gap_stall >= 15:
                break
        # Entropic mirror step with backtracking. Strict improvements grow
        # the step; near-ties at eta <= 1 are accepted as well, because the
        # multiplicative fixed point keeps sharpening the spectral tails
        # (and hence the certificate) after the value has numerically
        # converged.
        accepted = False
        trial_eta = min(eta, ETA_MAX)
        for _ in range(8):
            trial = _entropic_projection(log_s + trial_eta * grad, cspec, opts.mu_bisect_tol)
            trial_value = mutual_information(trial, channel)
            if trial_value > value + 1e-14:
                state = trial
                eta = min(trial_eta * 1.3, ETA_MAX)
                accepted = True
                break
            if trial_eta <= 1.0 and trial_value >= value - 1e-12:
                state = trial
                eta = trial_eta
                accepted = True
                break
            trial_eta *= 0.5
            if trial_eta < ETA_MIN:
                break
        if not accepted:
            slope = max(oracle.value - linearized, 0.0)
            if slope > opts.gap_tol * 1e-3:
                state = _line_search(channel, state, oracle.state, value, slope)
        state = _mix(state, anchor, ANCHOR_MIX)
    if best is not None and best[0] < gap:
        gap, value, state = best
    diagnostics = {"eta_final": eta, "oracle_residual": gap}
    return state, value, gap, iterations, diagnostics


def maximize_mutual_info(
    channel: KrausChannel, cspec: ConstraintSpec, opts: SolverOptions = SolverOptions()
) -> CapacityResult:
    """sup I(S, Phi) over Tr SF <= E with a Frank-Wolfe gap certificate.

    The returned ``duality_gap`` upper-bounds I_opt - I(S*) by concavity.
    Results that hit the iteration cap with an open gap carry the
    NOT_CERTIFIED flag. The E = f_min boundary restricts the problem to
    F's ground eigenspace, where the constraint is an identity.
    """
    if cspec.tight_ground:
        return _solve_tight_ground(channel, cspec, opts)
    state, value, gap, iterations, diag = _solve_mutual_info(channel, cspec, opts)
    flags = () if gap <= opts.gap_tol else ("NOT_CERTIFIED",)
    slack = cspec.energy - expected_value(state, cspec.observable)
    diag["beta_at_energy"] = solve_beta(cspec.observable, cspec.energy)
    diag["attainment"] = attainment_check(channel, cspec)
    return CapacityResult(
        value=mutual_information(state, channel),
        optimizer=state,
        duality_gap=gap,
        iterations=iterations,
        constraint_slack=slack,
        diagnostics=diag,
        flags=flags,
    )


def _solve_tight_ground(
    channel: KrausChannel, cspec: ConstraintSpec, opts: SolverOptions
) -> CapacityResult:
    basis = cspec.observable.ground_basis()
    g = basis.shape[1]
    if g == 1:
        state = DensityMatrix(np.outer(basis[:, 0], basis[:, 0].conj()))
        return CapacityResult(
            value=mutual_information(state, channel),
            optimizer=state,
            duality_gap=0.0,
            iterations=0,
            constraint_slack=cspec.energy - expected_value(state, cspec.observable),
            diagnostics={"tight_ground": True, "ground_dim": 1},
            flags=(),
        )
    sub_channel = KrausChannel([op @ basis for op in channel.ops])
    sub_state, _, gap, iterations, diag = _solve_mutual_info(sub_channel, None, opts)
    state = DensityMatrix(hermitian_part(basis @ sub_state.matrix @ basis.conj().T))
    diag.update(tight_ground=True, ground_dim=g)
    flags = () if gap <= opts.gap_tol else ("NOT_CERTIFIED",)
    return CapacityResult(
        value=mutual_information(state, channel),
        optimizer=state,
        duality_gap=gap,
        iterations=iterations,
        constraint_slack=cspec.energy - expected_value(state, cspec.observable),
        diagnostics=diag,
        flags=flags,
    )


# ---------------------------------------------------------------------------
# Heuristic constrained Holevo quantity
# ---------------------------------------------------------------------------

_CHI_MAX_ROUNDS = 400
_CHI_STALL = 25
_D_CLAMP = 50.0
_PROB_FLOOR = 1e-16


def _chi_initial_states(
    channel: KrausChannel,
    cspec: ConstraintSpec,
    m: int,
    restart: int,
    rng: np.random.Generator,
) -> list[np.ndarray]:
    """Restart 0 starts from the cheapest eigenvectors of F; later restarts
    draw random vectors shaped by the Gibbs envelope exp(-beta_E F / 2), a
    generic low-cost initialization."""
    d = channel.dim_in
    spec = cspec.observable.spectrum
    if restart == 0:
        return [np.ascontiguousarray(spec.eigenvectors[:, i % d]) for i in range(m)]
    beta = solve_beta(cspec.observable, min(cspec.energy, 0.999 * cspec.observable.mean_eigenvalue))
    if not math.isfinite(beta):
        beta = 1.0 / max(cspec.observable.ground_gap, 1e-6)
    envelope = np.exp(-0.5 * beta * (spec.eigenvalues - spec.eigenvalues[0]))
    states = []
    for _ in range(m):
        raw = rng.standard_normal(d) + 1j * rng.standard_normal(d)
        vec = spec.eigenvectors @ (envelope * (spec.eigenvectors.conj().T @ raw))
        states.append(vec / np.linalg.norm(vec))
    return states


def _chi_value(probs: np.ndarray, outputs: list[DensityMatrix]) -> float:
    avg = DensityMatrix(sum(p * o.matrix for p, o in zip(probs, outputs) if p > 0.0))
    return max(
        0.0,
        entropy(avg) - sum(p * entropy(o) for p, o in zip(probs, outputs) if p > 0.0),
    )


def _chi_prob_step(
    probs: np.ndarray,
    outputs: list[DensityMatrix],
    costs: np.ndarray,
    energy: float,
    mu_tol: float,
) -> tuple[np.ndarray, float]:
    """Constrained Blahut-Arimoto reweighting pi' ~ pi exp(D_i - mu f_i)
    with mu >= 0 bisected so the average cost meets the budget."""
    avg = DensityMatrix(sum(p * o.matrix for p, o in zip(probs, outputs) if p > 0.0))
    scores = np.array(
        [
            min(relative_entropy(o, avg), _D_CLAMP) if p > 0.0 else 0.0
            for p, o in zip(probs, outputs)
        ]
    )
    log_pi = np.log(np.maximum(probs, _PROB_FLOOR))

    def reweight(mu: float) -> np.ndarray:
        logits = log_pi + scores - mu * costs
        logits -= logits.max()
        weights = np.maximum(np.exp(logits), _PROB_FLOOR)
        return weights / weights.sum()

    new = reweight(0.0)
    if float(new @ costs) <= energy:
        return new, 0.0
    if float(costs.min()) > energy:
        raise ConvergenceError(
            "every ensemble member exceeds the cost budget; reweighting cannot recover"
        )
    hi = 1.0
    for _ in range(200):
        if float(reweight(hi) @ costs) <= energy:
            break
        hi *= 2.0
    else:
        raise ConvergenceError("probability reweighting could not meet the cost budget")
    lo = 0.0
    new = reweight(hi)
    while hi - lo > mu_tol * max(1.0, hi):
        mid = 0.5 * (lo + hi)
        cand = reweight(mid)
        if float(cand @ costs) > energy:
            lo = mid
        else:
            hi, new = mid, cand
    return new, hi


def _chi_state_update(
    channel: KrausChannel,
    vector: np.ndarray,
    avg_out: DensityMatrix,
    mu: float,
    f_matrix: np.ndarray,
    inner: int = 3,
) -> np.ndarray:
    """Local ascent on D(Phi[psi]; Phi[S_bar]) - mu <psi|F|psi> by iterating
    the top eigenvector of the linearized objective."""
    log_avg = _log_clamped(avg_out.spectrum())
    phi = vector
    for _ in range(inner):
        out = channel.apply(DensityMatrix(np.outer(phi, phi.conj())))
        m = channel.dual_apply(_log_clamped(out.spectrum()) - log_avg) - mu * f_matrix
        w, v = np.linalg.eigh(hermitian_part(m))
        nxt = v[:, -1]
        if abs(np.vdot(nxt, phi)) > 1.0 - 1e-12:
            phi = nxt
            break
        phi = nxt
    return phi


def maximize_chi(
    channel: KrausChannel,
    cspec: ConstraintSpec,
    m: int,
    opts: SolverOptions = SolverOptions(),
) -> CapacityResult:
    """Heuristic lower bound on the one-shot constrained Holevo quantity.

    Alternates the constrained Blahut-Arimoto probability step with
    sequential pure-state ascent, multi-started over ``opts.restarts``
    seeds; the best feasible ensemble is returned, flagged HEURISTIC.
    chi is not concave in the states, so there is no global certificate
    and ``duality_gap`` is +inf.
    """
    if m < 1:
        raise ValidationError(f"ensemble size must be >= 1, got {m}")
    if cspec.tight_ground:
        return _chi_tight_ground(channel, cspec, m, opts)
    f_matrix = cspec.observable.matrix
    anchor = _anchor_state(channel, cspec)
    if m == 1:
        ensemble = Ensemble(((1.0, anchor),))
        return CapacityResult(
            value=0.0,
            optimizer=ensemble,
            duality_gap=math.inf,
            iterations=0,
            constraint_slack=cspec.energy - ensemble.average_cost(cspec.observable),
            diagnostics={"restarts": 0},
            flags=("HEURISTIC",),
        )

    rng = np.random.default_rng(opts.seed)
    best_chi = -math.inf
    best_members: tuple[tuple[float, DensityMatrix], ...] | None = None
    non_improving = 0
    total_rounds = 0
    for restart in range(opts.restarts):
        best_before = best_chi
        vectors = _chi_initial_states(channel, cspec, m, restart, rng)
        states = [DensityMatrix(np.outer(v, v.conj())) for v in vectors]
        costs = np.array([expected_value(s, cspec.observable) for s in states])
        if float(costs.min()) >= cspec.energy:
            # keep the reweighting step feasible: pin one member to the ground
            vectors[0] = np.ascontiguousarray(cspec.observable.spectrum.eigenvectors[:, 0])
            states[0] = DensityMatrix(np.outer(vectors[0], vectors[0].conj()))
            costs[0] = expected_value(states[0], cspec.observable)
        outputs = [channel.apply(s) for s in states]
        probs = np.full(m, 1.0 / m)
        mu = 0.0
        local_best = -math.inf
        stall = 0
        for _ in range(min(opts.max_iters, _CHI_MAX_ROUNDS)):
            total_rounds += 1
            probs, mu = _chi_prob_step(probs, outputs, costs, cspec.energy, opts.mu_bisect_tol)
            chi = _chi_value(probs, outputs)
            if chi > best_chi + 1e-15:
                best_chi = chi
                best_members = tuple(
                    (float(p), s) for p, s in zip(probs, states) if p > 1e-15
                )
            if chi > local_best + 1e-12:
                local_best = chi
                stall = 0
            else:
                stall += 1
                if stall >= _CHI_STALL:
                    break
            avg_out = DensityMatrix(
                sum(p * o.matrix for p, o in zip(probs, outputs) if p > 0.0)
            )
            merit = chi
            for i in range(m):
                if probs[i] <= 1e-12:
                    continue
                proposal = _chi_state_update(channel, vectors[i], avg_out, mu, f_matrix)
                for damping in (1.0, 0.5, 0.2):
                    blended = (1.0 - damping) * vectors[i] + damping * proposal
                    norm = np.linalg.norm(blended)
                    if norm < 1e-12:
                        continue
                    blended = blended / norm
                    cand_state = DensityMatrix(np.outer(blended, blended.conj()))
                    cand_out = channel.apply(cand_state)
                    cand_cost = expected_value(cand_state, cspec.observable)
                    trial_costs = costs.copy()
                    trial_costs[i] = cand_cost
                    # The next reweighting must be able to restore feasibility:
                    # some member has to stay strictly below the budget.
                    if (
                        float(probs @ trial_costs) > cspec.energy
                        and float(trial_costs.min()) >= cspec.energy
                    ):
                        continue
                    trial_outputs = outputs[:i] + [cand_out] + outputs[i + 1 :]
                    trial_chi = _chi_value(probs, trial_outputs)
                    over = max(0.0, float(probs @ trial_costs) - cspec.energy)
                    if trial_chi - mu * over > merit + 1e-12:
                        vectors[i] = blended
                        states[i] = cand_state
                        outputs[i] = cand_out
                        costs[i] = cand_cost
                        merit = trial_chi - mu * over
                        break
        if restart > 0 and best_chi <= best_before + 1e-15:
            non_improving += 1

    assert best_members is not None
    # Rebalance once more so the reported ensemble is feasible and normalized.
    probs = np.array([p for p, _ in best_members])
    ensemble = Ensemble(tuple((float(p / probs.sum()), s) for p, s in best_members))
    value = holevo_chi(ensemble, channel) if len(best_members) > 1 else 0.0
    return CapacityResult(
        value=value,
        optimizer=ensemble,
        duality_gap=math.inf,
        iterations=total_rounds,
        constraint_slack=cspec.energy - ensemble.average_cost(cspec.observable),
        diagnostics={"restarts": opts.restarts, "non_improving_restarts": non_improving},
        flags=("HEURISTIC",),
    )


def _chi_tight_ground(
    channel: KrausChannel, cspec: ConstraintSpec, m: int, opts: SolverOptions
) -> CapacityResult:
    """E = f_min pins the ensemble to F's ground eigenspace: run the
    alternation there with an inactive constraint and embed back."""
    basis = cspec.observable.ground_basis()
    g = basis.shape[1]
    if g == 1 or m == 1:
        state = DensityMatrix(np.outer(basis[:, 0], basis[:, 0].conj()))
        ensemble = Ensemble(((1.0, state),))
        return CapacityResult(
            value=0.0,
            optimizer=ensemble,
            duality_gap=math.inf,
            iterations=0,
            constraint_slack=cspec.energy - ensemble.average_cost(cspec.observable),
            diagnostics={"tight_ground": True, "ground_dim": g},
            flags=("HEURISTIC",),
        )
    sub_channel = KrausChannel([op @ basis for op in channel.ops])
    inactive = ConstraintSpec(
        ConstraintObservable(np.diag(np.arange(g, dtype=float)).astype(complex)), float(g)
    )
    sub = maximize_chi(sub_channel, inactive, m, opts)
    members = tuple(
        (p, DensityMatrix(hermitian_part(basis @ s.matrix @ basis.conj().T)))
        for p, s in sub.optimizer.members
    )
    ensemble = Ensemble(members)
    sub.diagnostics.update(tight_ground=True, ground_dim=g)
    return CapacityResult(
        value=sub.value,
        optimizer=ensemble,
        duality_gap=math.inf,
        iterations=sub.iterations,
        constraint_slack=cspec.energy - ensemble.average_cost(cspec.observable),
        diagnostics=sub.diagnostics,
        flags=("HEURISTIC",),
    )


# ---------------------------------------------------------------------------
# Harnesses
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TwoCopyReport:
    single_copy: float
    two_copy: float
    product_witness: float
    tolerance: float
    upper_ok: bool     # I_2 <= 2 I_1 + tol
    lower_ok: bool     # I_2 >= 2 I_1 - tol
    gap_single: float
    gap_two: float


def two_copy_check(
    channel: KrausChannel, cspec: ConstraintSpec, opts: SolverOptions = SolverOptions()
) -> TwoCopyReport:
    """Additivity harness: solve (Phi, F, E) and (Phi x Phi, F2, 2E) and
    compare I_2 against 2 I_1 within twice the gap tolerance; the product
    of the single-copy optimizer witnesses the lower bound."""
    single = maximize_mutual_info(channel, cspec, opts)
    doubled = tensor(channel, channel)
    cspec2 = ConstraintSpec(constraint_tensor(cspec.observable, 2), 2.0 * cspec.energy)
    double = maximize_mutual_info(doubled, cspec2, opts)
    product = DensityMatrix(np.kron(single.optimizer.matrix, single.optimizer.matrix))
    witness = mutual_information(product, doubled)
    tol = 2.0 * opts.gap_tol
    return TwoCopyReport(
        single_copy=single.value,
        two_copy=double.value,
        product_witness=witness,
        tolerance=tol,
        upper_ok=double.value <= 2.0 * single.value + tol,
        lower_ok=double.value >= 2.0 * single.value - tol,
        gap_single=single.duality_gap,
        gap_two=double.duality_gap,
    )


@dataclass(frozen=True)
class TruncationPoint:
    cutoff: int
    value: float
    duality_gap: float
    flags: tuple[str, ...]


@dataclass(frozen=True)
class TruncationSeries:
    points: tuple[TruncationPoint, ...]
    increments: tuple[float, ...]
    monotone_ok: bool       # nondecreasing within 2 * gap_tol
    shrinking_ok: bool      # successive increments do not grow
    final_increment: float


def truncation_sweep(
    channel_builder,
    constraint_builder,
    cutoffs,
    opts: SolverOptions = SolverOptions(),
) -> TruncationSeries:
    """Capacity estimates along an ascending ladder of truncation cutoffs."""
    cutoffs = list(cutoffs)
    if cutoffs != sorted(cutoffs) or len(set(cutoffs)) != len(cutoffs):
        raise ValidationError(f"cutoffs must be strictly ascending, got {cutoffs}")
    points = []
    for cutoff in cutoffs:
        result = maximize_mutual_info(channel_builder(cutoff), constraint_builder(cutoff), opts)
        points.append(TruncationPoint(cutoff, result.value, result.duality_gap, result.flags))
    increments = tuple(b.value - a.value for a, b in zip(points, points[1:]))
    tol = 2.0 * opts.gap_tol
    return TruncationSeries(
        points=tuple(points),
        increments=increments,
        monotone_ok=all(d >= -tol for d in increments),
        shrinking_ok=all(b <= a + tol for a, b in zip(increments, increments[1:])),
        final_increment=increments[-1] if increments else 0.0,
    )


@dataclass(frozen=True)
class AttainmentReport:
    beta_condition: bool                      # finite dimension: always true
    ground_gap: float
    multiplicities: tuple[tuple[float, int], ...]
    margin_at_unit: float                     # min-eig(F - Phi*[F])
    best_scale: float
    best_margin: float
    certified: bool


def attainment_check(channel: KrausChannel, cspec: ConstraintSpec) -> AttainmentReport:
    """Search for a scalar c > 0 with Phi*[cF] <= F, the sufficient
    condition for the constrained supremum to be attained. The margin
    c -> min-eig(F - c Phi*[F]) is concave, so a coarse log-grid plus
    ternary refinement locates its maximum."""
    f_matrix = cspec.observable.matrix
    dual_f = channel.dual_apply(f_matrix)

    def margin(c: float) -> float:
        return float(np.linalg.eigvalsh(hermitian_part(f_matrix - c * dual_f))[0])

    unit = margin(1.0)
    grid = np.geomspace(1e-6, 4.0, 60)
    margins = [margin(c) for c in grid]
    best_idx = int(np.argmax(margins))
    lo = grid[max(best_idx - 1, 0)]
    hi = grid[min(best_idx + 1, len(grid) - 1)]
    for _ in range(60):
        m1 = lo + (hi - lo) / 3.0
        m2 = hi - (hi - lo) / 3.0
        if margin(m1) < margin(m2):
            lo = m1
        else:
            hi = m2
    best_c = 0.5 * (lo + hi)
    best_m = margin(best_c)
    if unit >= best_m:
        best_c, best_m = 1.0, unit
    return AttainmentReport(
        beta_condition=True,
        ground_gap=cspec.observable.ground_gap,
        multiplicities=tuple(cspec.observable.multiplicities()),
        margin_at_unit=unit,
        best_scale=best_c,
        best_margin=best_m,
        certified=best_m >= -1e-10,
    )
