"""Entropy functionals: von Neumann entropy, relative entropy, entropy
exchange, quantum mutual information (two independent routes), the Holevo
quantity, and the Gibbs free-energy identity.

All values are in nats. Relative entropy takes values in [0, +inf]; the
extended value is represented by ``math.inf`` (never NaN). Eigenvalues at
or below LOG_FLOOR = 1e-12 contribute 0 * log 0 = 0 to entropies and
define the support test of the relative entropy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channels import KrausChannel, identity_channel, resolve_dim_cap, tensor
from .errors import (
    ConsistencyError,
    DimensionMismatchError,
    SizeCapError,
    ValidationError,
)
from .operators import (
    LOG_FLOOR,
    ConstraintObservable,
    DensityMatrix,
    expected_value,
    gibbs_state,
    pure_density,
    purify,
)

SUPPORT_MASS_TOL = 1e-10
CHI_FORM_TOL = 1e-8


def entropy(state: DensityMatrix) -> float:
    """von Neumann entropy H(S) = -sum w log w in nats."""
    w = state.spectrum().eigenvalues
    w = w[w > LOG_FLOOR]
    return max(0.0, float(-(w * np.log(w)).sum()))


def relative_entropy(rho: DensityMatrix, sigma: DensityMatrix) -> float:
    """H(rho; sigma) = Tr rho (log rho - log sigma), +inf off support.

    Evaluated in sigma's eigenbasis; rho-mass above SUPPORT_MASS_TOL on
    sigma-eigenvectors with eigenvalue <= LOG_FLOOR yields +inf.
    """
    if rho.dim != sigma.dim:
        raise DimensionMismatchError(f"dims differ: {rho.dim} vs {sigma.dim}")
    spec = sigma.spectrum()
    mass = np.einsum("ij,jk,ki->i", spec.eigenvectors.conj().T, rho.matrix, spec.eigenvectors).real
    supported = spec.eigenvalues > LOG_FLOOR
    if float(mass[~supported].sum()) > SUPPORT_MASS_TOL:
        return math.inf
    cross = float((mass[supported] * np.log(spec.eigenvalues[supported])).sum())
    value = -entropy(rho) - cross
    if value < -1e-8:
        raise ConsistencyError(f"relative entropy came out {value:.3e} < 0")
    return max(0.0, value)


def entropy_exchange(state: DensityMatrix, channel: KrausChannel) -> float:
    """H(S; Phi) = H(Phi_E[S]), the entropy pumped into the environment."""
    return entropy(channel.complementary_apply(state))


def mutual_information(state: DensityMatrix, channel: KrausChannel) -> float:
    """I(S, Phi) = H(S) + H(Phi[S]) - H(S; Phi)."""
    return entropy(state) + entropy(channel.apply(state)) - entropy_exchange(state, channel)


def mutual_information_via_relent(
    state: DensityMatrix, channel: KrausChannel, dim_cap: int | None = None
) -> float:
    """I(S, Phi) as the relative entropy of the channel-evolved purification
    to Phi[S] (x) S. Independent witness for ``mutual_information``."""
    cap = resolve_dim_cap(dim_cap)
    if state.dim**2 * channel.dim_out > cap:
        raise SizeCapError(
            f"purified computation needs dim {state.dim ** 2 * channel.dim_out} > cap {cap}"
        )
    psi = purify(state)
    joint = tensor(channel, identity_channel(state.dim), dim_cap=cap).apply(pure_density(psi))
    product = DensityMatrix(np.kron(channel.apply(state).matrix, state.matrix))
    return relative_entropy(joint, product)


@dataclass(frozen=True)
class Ensemble:
    """Finite ensemble of (probability, state) pairs on one input space."""

    members: tuple[tuple[float, DensityMatrix], ...]

    def __post_init__(self):
        if not self.members:
            raise ValidationError("ensemble must be nonempty")
        probs = np.array([p for p, _ in self.members], dtype=float)
        if (probs < -1e-15).any():
            raise ValidationError(f"negative probability {probs.min():.3e}")
        if abs(probs.sum() - 1.0) > 1e-10:
            raise ValidationError(f"probabilities sum to {probs.sum()!r}, not 1")
        dims = {s.dim for _, s in self.members}
        if len(dims) != 1:
            raise ValidationError(f"members live on different dims {sorted(dims)}")

    @property
    def dim(self) -> int:
        return self.members[0][1].dim

    @property
    def probabilities(self) -> np.ndarray:
        return np.array([p for p, _ in self.members], dtype=float)

    @property
    def states(self) -> list[DensityMatrix]:
        return [s for _, s in self.members]

    def average_state(self) -> DensityMatrix:
        avg = sum(p * s.matrix for p, s in self.members)
        return DensityMatrix(avg)

    def average_cost(self, observable: ConstraintObservable) -> float:
        return float(sum(p * expected_value(s, observable) for p, s in self.members if p > 0.0))


def holevo_chi(ensemble: Ensemble, channel: KrausChannel) -> float:
    """chi = H(Phi[S_bar]) - sum_i p_i H(Phi[S_i]).

    Cross-checked against the equivalent average-relative-entropy form
    sum_i p_i H(Phi[S_i]; Phi[S_bar]); disagreement beyond CHI_FORM_TOL
    raises ConsistencyError.
    """
    if ensemble.dim != channel.dim_in:
        raise DimensionMismatchError(f"ensemble dim {ensemble.dim} != channel dim_in {channel.dim_in}")
    outputs = [(p, channel.apply(s)) for p, s in ensemble.members if p > 0.0]
    avg_out = DensityMatrix(sum(p * s.matrix for p, s in outputs))
    direct = entropy(avg_out) - sum(p * entropy(s) for p, s in outputs)
    rel_form = sum(p * relative_entropy(s, avg_out) for p, s in outputs)
    if not math.isfinite(rel_form) or abs(direct - rel_form) > CHI_FORM_TOL:
        raise ConsistencyError(
            f"Holevo quantity forms disagree: direct {direct!r} vs relative-entropy {rel_form!r}"
        )
    return max(0.0, direct)


def log_partition(observable: ConstraintObservable, beta: float) -> float:
    """log Tr exp(-beta F), evaluated by shifted log-sum-exp."""
    if beta <= 0.0:
        raise ValidationError(f"beta must be positive, got {beta!r}")
    w = observable.spectrum.eigenvalues
    shifted = -beta * (w - w[0])
    return float(-beta * w[0] + np.log(np.exp(shifted).sum()))


def free_energy_residual(
    state: DensityMatrix, observable: ConstraintObservable, beta: float
) -> float:
    """|LHS - RHS| of the Gibbs identity
    beta Tr SF - H(S) = H(S; S_beta) - log Tr exp(-beta F).

    Returns +inf if the relative entropy is infinite (only possible when
    S_beta is numerically rank-deficient at extreme beta).
    """
    lhs = beta * expected_value(state, observable) - entropy(state)
    rel = relative_entropy(state, gibbs_state(observable, beta))
    if not math.isfinite(rel):
        return math.inf
    rhs = rel - log_partition(observable, beta)
    return abs(lhs - rhs)


def entropy_upper_bound(observable: ConstraintObservable, beta: float, energy: float) -> float:
    """beta * E + log Tr exp(-beta F): bound on H(S) for any feasible S."""
    return beta * energy + log_partition(observable, beta)


def binary_entropy(p: float) -> float:
    """h(p) in nats."""
    if p <= 0.0 or p >= 1.0:
        return 0.0
    return float(-p * math.log(p) - (1.0 - p) * math.log(1.0 - p))


def thermal_entropy(mean_photons: float) -> float:
    """g(x) = (x+1) log(x+1) - x log x: entropy of a thermal state in nats."""
    x = float(mean_photons)
    if x <= 0.0:
        return 0.0
    return (x + 1.0) * math.log(x + 1.0) - x * math.log(x)
