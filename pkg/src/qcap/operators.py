"""Dense complex linear algebra for states, observables and Gibbs ensembles.

Everything works on explicit numpy arrays: no sparsity, no lazy evaluation.
Density matrices and constraint observables validate their defining
invariants on construction and cache their eigendecompositions, which the
entropy and solver layers reuse. All logarithms are natural; unit
conversion happens only at the CLI boundary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, DimensionMismatchError, ValidationError

# Tolerances pinned once, used everywhere.
TOL_HERM = 1e-10        # max-abs deviation from conjugate symmetry
TOL_TRACE = 1e-10
TOL_EIG_CLIP = 1e-10    # eigenvalues in [-TOL_EIG_CLIP, 0) count as roundoff
EIG_RESIDUAL_TOL = 1e-9
LOG_FLOOR = 1e-12       # eigenvalues below this contribute 0 * log 0 = 0

BETA_BRACKET = (1e-12, 1e6)
BETA_MAX_ITERS = 200


def as_complex_matrix(values) -> np.ndarray:
    """Coerce to a 2-D complex array, rejecting NaN/Inf entries."""
    arr = np.asarray(values, dtype=complex)
    if arr.ndim != 2:
        raise ValidationError(f"expected a matrix, got array of ndim {arr.ndim}")
    if not np.all(np.isfinite(arr)):
        raise ValidationError("matrix entries must be finite")
    return arr


def hermiticity_defect(matrix: np.ndarray) -> float:
    return float(np.abs(matrix - matrix.conj().T).max())


def hermitian_part(matrix: np.ndarray) -> np.ndarray:
    return (matrix + matrix.conj().T) / 2


@dataclass(frozen=True)
class Spectrum:
    """Eigendecomposition of a Hermitian matrix, eigenvalues ascending."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray  # columns


def hermitian_eig(matrix: np.ndarray, check: bool = True) -> Spectrum:
    """Eigendecompose a Hermitian matrix.

    With ``check`` the residual ||H v - w v|| per column must stay below
    EIG_RESIDUAL_TOL * ||H|| and the eigenvector columns must be
    orthonormal to 1e-10, otherwise a ConvergenceError is raised.
    """
    h = as_complex_matrix(matrix)
    if h.shape[0] != h.shape[1]:
        raise DimensionMismatchError(f"matrix must be square, got shape {h.shape}")
    defect = hermiticity_defect(h)
    if defect > TOL_HERM:
        raise ValidationError(f"matrix is not Hermitian: defect {defect:.3e} > {TOL_HERM:.1e}")
    h = hermitian_part(h)
    try:
        w, v = np.linalg.eigh(h)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceError(f"eigensolver failed to converge on dim={h.shape[0]}: {exc}") from exc
    if check:
        scale = max(float(np.abs(w).max()), 1e-30)
        residual = np.linalg.norm(h @ v - v * w, axis=0).max()
        if residual > EIG_RESIDUAL_TOL * scale:
            raise ConvergenceError(
                f"eigen residual {residual:.3e} exceeds {EIG_RESIDUAL_TOL:.1e} * {scale:.3e} "
                f"on dim={h.shape[0]}"
            )
        ortho = np.abs(v.conj().T @ v - np.eye(h.shape[0])).max()
        if ortho > 1e-10:
            raise ConvergenceError(f"eigenvectors not orthonormal: defect {ortho:.3e}")
    return Spectrum(w, v)


class DensityMatrix:
    """Positive semidefinite, unit-trace complex matrix.

    Construction validates Hermiticity, trace and positivity against
    ``tol``; eigenvalues in [-tol, 0) are clipped to zero and the spectrum
    renormalized (the clipped mass is recorded in ``clip_magnitude``).
    Larger violations raise ValidationError naming the broken invariant.
    Instances are immutable and cache their eigendecomposition.
    """

    __slots__ = ("matrix", "dim", "clip_magnitude", "_spec")

    def __init__(self, matrix, tol: float = TOL_EIG_CLIP):
        m = as_complex_matrix(matrix)
        if m.shape[0] != m.shape[1]:
            raise DimensionMismatchError(f"density matrix must be square, got {m.shape}")
        defect = hermiticity_defect(m)
        if defect > tol:
            raise ValidationError(f"not Hermitian: defect {defect:.3e} > tol {tol:.1e}")
        h = hermitian_part(m)
        trace = float(np.trace(h).real)
        if abs(trace - 1.0) > tol:
            raise ValidationError(f"trace deviates from 1 by {abs(trace - 1.0):.3e} > tol {tol:.1e}")
        spec = hermitian_eig(h, check=False)
        w = spec.eigenvalues
        if w[0] < -tol:
            raise ValidationError(f"negative eigenvalue {w[0]:.3e} below -tol {tol:.1e}")
        clipped = float(-w[w < 0.0].sum())
        w = np.maximum(w, 0.0)
        w = w / w.sum()
        v = spec.eigenvectors
        if clipped > 1e-13:
            h = hermitian_part((v * w) @ v.conj().T)
        else:
            # clip mass at roundoff level: renormalizing the trace suffices
            h = h / trace
        h.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "matrix", h)
        object.__setattr__(self, "dim", h.shape[0])
        object.__setattr__(self, "clip_magnitude", clipped)
        object.__setattr__(self, "_spec", Spectrum(w, v))

    def __setattr__(self, name, value):
        raise AttributeError("DensityMatrix is immutable")

    @classmethod
    def _from_eigh(cls, eigenvalues: np.ndarray, eigenvectors: np.ndarray) -> "DensityMatrix":
        """Trusted fast path for callers that already hold a valid spectrum."""
        w = np.maximum(np.asarray(eigenvalues, dtype=float), 0.0)
        w = w / w.sum()
        order = np.argsort(w, kind="stable")
        w = w[order]
        v = np.asarray(eigenvectors, dtype=complex)[:, order]
        h = hermitian_part((v * w) @ v.conj().T)
        obj = cls.__new__(cls)
        h.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(obj, "matrix", h)
        object.__setattr__(obj, "dim", h.shape[0])
        object.__setattr__(obj, "clip_magnitude", 0.0)
        object.__setattr__(obj, "_spec", Spectrum(w, v))
        return obj

    def spectrum(self) -> Spectrum:
        return self._spec

    @property
    def eigenvalues(self) -> np.ndarray:
        return self._spec.eigenvalues

    def __repr__(self) -> str:
        return f"DensityMatrix(dim={self.dim})"


def make_density(matrix, tol: float = TOL_EIG_CLIP) -> DensityMatrix:
    """Validate a raw matrix as a density matrix (see DensityMatrix)."""
    return DensityMatrix(matrix, tol=tol)


def pure_density(amplitudes) -> DensityMatrix:
    """Rank-1 density matrix |psi><psi| from a state vector."""
    psi = np.asarray(amplitudes, dtype=complex).reshape(-1)
    norm = np.linalg.norm(psi)
    if abs(norm - 1.0) > 1e-12:
        raise ValidationError(f"state vector norm deviates from 1 by {abs(norm - 1.0):.3e}")
    psi = psi / norm
    return DensityMatrix(np.outer(psi, psi.conj()))


def maximally_mixed(dim: int) -> DensityMatrix:
    return DensityMatrix(np.eye(dim, dtype=complex) / dim)


def purify(state: DensityMatrix) -> np.ndarray:
    """Purification vector on dim**2: sum_j sqrt(w_j) |e_j> (x) |e_j>.

    Both partial traces of the resulting pure state recover ``state``.
    """
    spec = state.spectrum()
    w = np.maximum(spec.eigenvalues, 0.0)
    v = spec.eigenvectors
    psi = ((v * np.sqrt(w)) @ v.T).reshape(-1)
    return psi / np.linalg.norm(psi)


def partial_trace(state: DensityMatrix, dims: tuple[int, int], keep: int) -> DensityMatrix:
    """Trace out one factor of a bipartite state; ``keep`` is 0 (A) or 1 (B)."""
    da, db = dims
    if da * db != state.dim:
        raise DimensionMismatchError(f"dims {dims} incompatible with total dim {state.dim}")
    if keep not in (0, 1):
        raise ValidationError(f"keep must be 0 or 1, got {keep!r}")
    t = state.matrix.reshape(da, db, da, db)
    reduced = np.einsum("abcb->ac", t) if keep == 0 else np.einsum("abac->bc", t)
    return DensityMatrix(reduced)


def truncate_state(state: DensityMatrix, d: int) -> DensityMatrix:
    """Project onto the d leading eigenvectors and renormalize the spectrum.

    Ties are broken by eigenvalue descending, then by position in the
    ascending eigendecomposition, so the result is deterministic.
    """
    if not 1 <= d <= state.dim:
        raise ValidationError(f"cutoff d={d} outside [1, {state.dim}]")
    spec = state.spectrum()
    order = np.argsort(-spec.eigenvalues, kind="stable")
    top = order[:d]
    mass = float(spec.eigenvalues[top].sum())
    if mass <= LOG_FLOOR:
        raise ValidationError(f"leading {d} eigenvectors carry no mass ({mass:.3e})")
    w = spec.eigenvalues[top] / mass
    v = spec.eigenvectors[:, top]
    return DensityMatrix(hermitian_part((v * w) @ v.conj().T))


def trace_norm(matrix: np.ndarray) -> float:
    """Trace norm of a Hermitian matrix (sum of absolute eigenvalues)."""
    w = np.linalg.eigvalsh(hermitian_part(as_complex_matrix(matrix)))
    return float(np.abs(w).sum())


def trace_distance(a: DensityMatrix, b: DensityMatrix) -> float:
    return 0.5 * trace_norm(a.matrix - b.matrix)


class ConstraintObservable:
    """Positive, nonconstant Hermitian observable with cached spectrum.

    Houses the cost operator whose expectation is bounded in the capacity
    problems (mean photon number, energy, ...).
    """

    __slots__ = ("matrix", "dim", "spectrum")

    def __init__(self, matrix):
        m = as_complex_matrix(matrix)
        if m.shape[0] != m.shape[1]:
            raise DimensionMismatchError(f"observable must be square, got {m.shape}")
        defect = hermiticity_defect(m)
        if defect > TOL_HERM:
            raise ValidationError(f"not Hermitian: defect {defect:.3e}")
        spec = hermitian_eig(m)
        w = spec.eigenvalues
        if w[0] < -TOL_EIG_CLIP:
            raise ValidationError(f"observable must be positive: min eigenvalue {w[0]:.3e}")
        if w[-1] - w[0] <= 1e-12:
            raise ValidationError("observable is constant (spectral spread <= 1e-12)")
        if w[0] < 0.0:
            w = np.maximum(w, 0.0)
            m = hermitian_part((spec.eigenvectors * w) @ spec.eigenvectors.conj().T)
            spec = Spectrum(w, spec.eigenvectors)
        else:
            m = hermitian_part(m)
        m.setflags(write=False)
        spec.eigenvalues.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "dim", m.shape[0])
        object.__setattr__(self, "spectrum", spec)

    def __setattr__(self, name, value):
        raise AttributeError("ConstraintObservable is immutable")

    @property
    def f_min(self) -> float:
        return float(self.spectrum.eigenvalues[0])

    @property
    def f_max(self) -> float:
        return float(self.spectrum.eigenvalues[-1])

    @property
    def mean_eigenvalue(self) -> float:
        return float(self.spectrum.eigenvalues.mean())

    @property
    def ground_gap(self) -> float:
        """Distance from the smallest eigenvalue to the next distinct one."""
        w = self.spectrum.eigenvalues
        above = w[w > w[0] + 1e-12]
        return float(above[0] - w[0]) if above.size else 0.0

    def ground_basis(self, tol: float = 1e-10) -> np.ndarray:
        """Orthonormal columns spanning the lowest eigenspace."""
        w = self.spectrum.eigenvalues
        return self.spectrum.eigenvectors[:, w <= w[0] + tol]

    def multiplicities(self, tol: float = 1e-9) -> list[tuple[float, int]]:
        """Distinct eigenvalues with multiplicities (diagnostics)."""
        out: list[tuple[float, int]] = []
        for val in self.spectrum.eigenvalues:
            if out and abs(val - out[-1][0]) <= tol:
                out[-1] = (out[-1][0], out[-1][1] + 1)
            else:
                out.append((float(val), 1))
        return out

    def __repr__(self) -> str:
        return f"ConstraintObservable(dim={self.dim}, f_min={self.f_min:.6g}, f_max={self.f_max:.6g})"


def number_operator(dim: int) -> ConstraintObservable:
    """diag(0, 1, ..., dim-1): photon number in the truncated Fock space."""
    return ConstraintObservable(np.diag(np.arange(dim, dtype=float)).astype(complex))


def gibbs_state(observable: ConstraintObservable, beta: float) -> DensityMatrix:
    """exp(-beta F) / Tr exp(-beta F), the maximum-entropy state at inverse
    temperature beta. Computed in F's eigenbasis with the spectrum shifted
    by f_min so the partition sum never underflows."""
    if not math.isfinite(beta):
        raise ValidationError("beta must be finite; the tight-ground case is handled by the solver")
    if beta <= 0.0:
        raise ValidationError(f"beta must be positive, got {beta!r}")
    spec = observable.spectrum
    weights = np.exp(-beta * (spec.eigenvalues - spec.eigenvalues[0]))
    z = float(weights.sum())
    if not math.isfinite(z) or z <= 0.0:
        raise ValidationError(f"partition sum degenerate (Z={z!r}); use a smaller beta")
    return DensityMatrix._from_eigh(weights / z, spec.eigenvectors)


def _gibbs_mean(eigenvalues: np.ndarray, beta: float) -> float:
    shifted = eigenvalues - eigenvalues[0]
    weights = np.exp(-beta * shifted)
    return float((eigenvalues * weights).sum() / weights.sum())


def solve_beta(observable: ConstraintObservable, energy: float) -> float:
    """Inverse temperature with Tr S_beta F = energy, by bracketed bisection.

    Tr S_beta F is strictly decreasing in beta, so bisection on
    [1e-12, 1e6] terminates. Returns +inf when energy <= f_min (support is
    then forced into the ground eigenspace) and 0.0 when energy is at or
    above the infinite-temperature mean.
    """
    w = observable.spectrum.eigenvalues
    f_min, mean = float(w[0]), float(w.mean())
    if energy <= f_min:
        return math.inf
    if energy >= mean:
        return 0.0
    tol = 1e-10 * max(1.0, abs(energy))
    lo, hi = BETA_BRACKET
    if _gibbs_mean(w, lo) < energy - tol:
        return 0.0  # already below target at the smallest representable beta
    best, best_err = hi, abs(_gibbs_mean(w, hi) - energy)
    for _ in range(BETA_MAX_ITERS):
        mid = 0.5 * (lo + hi)
        val = _gibbs_mean(w, mid)
        err = abs(val - energy)
        if err < best_err:
            best, best_err = mid, err
        if err <= tol:
            return mid
        if val > energy:
            lo = mid
        else:
            hi = mid
    if best_err <= 1e-8 * max(1.0, abs(energy)):
        return best
    raise ConvergenceError(
        f"beta bisection stalled: residual {best_err:.3e} at beta={best:.6g} "
        f"(bracket {BETA_BRACKET}, {BETA_MAX_ITERS} iterations)"
    )


def expected_value(state: DensityMatrix, observable: ConstraintObservable) -> float:
    """Tr(S F), real by Hermiticity; linear in the state."""
    if state.dim != observable.dim:
        raise DimensionMismatchError(f"state dim {state.dim} != observable dim {observable.dim}")
    return float(np.tensordot(state.matrix, observable.matrix.T, axes=2).real)


def random_density(dim: int, rng: np.random.Generator, rank: int | None = None) -> DensityMatrix:
    """Random density matrix from a Gaussian Wishart factor of given rank."""
    r = dim if rank is None else rank
    g = rng.standard_normal((dim, r)) + 1j * rng.standard_normal((dim, r))
    m = g @ g.conj().T
    return DensityMatrix(m / np.trace(m).real)


def random_pure_vector(dim: int, rng: np.random.Generator) -> np.ndarray:
    psi = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return psi / np.linalg.norm(psi)


def random_hermitian(dim: int, rng: np.random.Generator) -> np.ndarray:
    g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    return hermitian_part(g)
