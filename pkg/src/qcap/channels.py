"""Quantum channels in Kraus form.

A channel is a completely positive trace-preserving map Phi[S] = sum_k
A_k S A_k'. The module provides the dual (Heisenberg) map, the
complementary channel to the environment, tensor products, composition,
standard single-system builders used as fixtures, and Kraus-rank
reduction through the Choi matrix.
"""

from __future__ import annotations

import os

import numpy as np

from .errors import DimensionMismatchError, SizeCapError, ValidationError
from .operators import (
    ConstraintObservable,
    DensityMatrix,
    as_complex_matrix,
    hermitian_eig,
    hermitian_part,
)

TP_TOL = 1e-8
DEFAULT_DIM_CAP = 4096


def resolve_dim_cap(cap: int | None = None) -> int:
    """Configured tensor-product dimension cap; QCAP_DIM_CAP overrides."""
    if cap is not None:
        return int(cap)
    return int(os.environ.get("QCAP_DIM_CAP", DEFAULT_DIM_CAP))


class KrausChannel:
    """Channel defined by a stack of Kraus operators (dim_out x dim_in).

    Completeness sum_k A_k' A_k = I must hold within ``tol`` (max-abs);
    the measured deviation is cached as ``tp_defect``. ``build_defect``
    optionally records the pre-renormalization deficiency of approximate
    constructions (see the Gaussian builder). The environment dimension
    of the complementary channel equals the number of Kraus operators.
    """

    __slots__ = ("ops", "dim_in", "dim_out", "tp_defect", "build_defect")

    def __init__(self, kraus_ops, tol: float = TP_TOL, build_defect: float | None = None):
        mats = [as_complex_matrix(k) for k in kraus_ops]
        if not mats:
            raise ValidationError("a channel needs at least one Kraus operator")
        shape = mats[0].shape
        if any(m.shape != shape for m in mats):
            raise DimensionMismatchError("all Kraus operators must share one shape")
        ops = np.stack(mats)
        dim_out, dim_in = shape
        total = np.einsum("kij,kil->jl", ops.conj(), ops)
        defect = float(np.abs(total - np.eye(dim_in)).max())
        if defect > tol:
            raise ValidationError(
                f"Kraus completeness violated: max-abs defect {defect:.3e} > {tol:.1e}"
            )
        ops.setflags(write=False)
        object.__setattr__(self, "ops", ops)
        object.__setattr__(self, "dim_in", dim_in)
        object.__setattr__(self, "dim_out", dim_out)
        object.__setattr__(self, "tp_defect", defect)
        object.__setattr__(self, "build_defect", build_defect)

    def __setattr__(self, name, value):
        raise AttributeError("KrausChannel is immutable")

    @property
    def num_kraus(self) -> int:
        return self.ops.shape[0]

    def __repr__(self) -> str:
        return (
            f"KrausChannel(dim_in={self.dim_in}, dim_out={self.dim_out}, "
            f"num_kraus={self.num_kraus}, tp_defect={self.tp_defect:.2e})"
        )

    def apply(self, state: DensityMatrix) -> DensityMatrix:
        """Schroedinger map sum_k A_k S A_k', renormalized within tp_defect."""
        if state.dim != self.dim_in:
            raise DimensionMismatchError(f"state dim {state.dim} != dim_in {self.dim_in}")
        out = _kraus_sum(self.ops, state.matrix)
        return _as_output_state(out, self.tp_defect)

    def dual_apply(self, observable: np.ndarray) -> np.ndarray:
        """Heisenberg map sum_k A_k' X A_k on an output observable."""
        x = as_complex_matrix(observable)
        if x.shape != (self.dim_out, self.dim_out):
            raise DimensionMismatchError(f"observable shape {x.shape} != ({self.dim_out},) * 2")
        terms = (self.ops.conj().transpose(0, 2, 1) @ x) @ self.ops
        return hermitian_part(terms.sum(axis=0)) if _is_hermitian(x) else terms.sum(axis=0)

    def complementary_apply(self, state: DensityMatrix) -> DensityMatrix:
        """Environment state (Phi_E[S])_{kl} = Tr(A_k S A_l')."""
        if state.dim != self.dim_in:
            raise DimensionMismatchError(f"state dim {state.dim} != dim_in {self.dim_in}")
        b = (self.ops @ state.matrix).reshape(self.num_kraus, -1)
        a = self.ops.reshape(self.num_kraus, -1)
        env = b @ a.conj().T
        return _as_output_state(env, self.tp_defect)

    def dual_complementary_apply(self, observable: np.ndarray) -> np.ndarray:
        """Adjoint of the complementary channel on an environment observable.

        Phi_E*[Y] = sum_{kl} Y_{lk} A_l' A_k, evaluated through the
        eigenbasis of Y so the cost stays O(m^2 d^2) for m Kraus operators.
        """
        y = as_complex_matrix(observable)
        m = self.num_kraus
        if y.shape != (m, m):
            raise DimensionMismatchError(f"environment observable shape {y.shape} != ({m}, {m})")
        spec = hermitian_eig(y, check=False)
        collapsed = (spec.eigenvectors.conj().T @ self.ops.reshape(m, -1)).reshape(
            m, self.dim_out, self.dim_in
        )
        flat = collapsed.reshape(m * self.dim_out, self.dim_in)
        weighted = (collapsed * spec.eigenvalues[:, None, None]).reshape(
            m * self.dim_out, self.dim_in
        )
        return hermitian_part(flat.conj().T @ weighted)


def _is_hermitian(x: np.ndarray) -> bool:
    return bool(np.abs(x - x.conj().T).max() <= 1e-12 * max(1.0, np.abs(x).max()))


def _kraus_sum(ops: np.ndarray, matrix: np.ndarray) -> np.ndarray:
    b = ops @ matrix
    m, dout, din = b.shape
    left = b.transpose(1, 0, 2).reshape(dout, m * din)
    right = ops.transpose(1, 0, 2).reshape(dout, m * din)
    return left @ right.conj().T


def _as_output_state(matrix: np.ndarray, tp_defect: float) -> DensityMatrix:
    trace = float(np.trace(matrix).real)
    if abs(trace - 1.0) > tp_defect + 1e-6:
        raise ValidationError(
            f"channel output trace {trace!r} outside the defect budget {tp_defect + 1e-6:.2e}"
        )
    return DensityMatrix(hermitian_part(matrix) / trace)


# ---------------------------------------------------------------------------
# Combinators
# ---------------------------------------------------------------------------

def tensor(a: KrausChannel, b: KrausChannel, dim_cap: int | None = None) -> KrausChannel:
    """Parallel composition with Kraus set {A_i (x) B_j}."""
    cap = resolve_dim_cap(dim_cap)
    din, dout = a.dim_in * b.dim_in, a.dim_out * b.dim_out
    if max(din, dout) > cap:
        raise SizeCapError(f"tensor product dimension {max(din, dout)} exceeds cap {cap}")
    ops = [np.kron(x, y) for x in a.ops for y in b.ops]
    return KrausChannel(ops, tol=max(TP_TOL, 2 * (a.tp_defect + b.tp_defect)))


def compose(second: KrausChannel, first: KrausChannel) -> KrausChannel:
    """Serial composition: ``second`` applied after ``first``."""
    if first.dim_out != second.dim_in:
        raise DimensionMismatchError(
            f"cannot compose: first.dim_out {first.dim_out} != second.dim_in {second.dim_in}"
        )
    ops = [x @ y for x in second.ops for y in first.ops]
    return KrausChannel(ops, tol=max(TP_TOL, 2 * (first.tp_defect + second.tp_defect)))


def constraint_tensor(
    observable: ConstraintObservable, n: int, dim_cap: int | None = None
) -> ConstraintObservable:
    """n-fold additive extension F (x) I ... + ... + I (x) ... (x) F."""
    if n < 1:
        raise ValidationError(f"n must be >= 1, got {n}")
    cap = resolve_dim_cap(dim_cap)
    if observable.dim**n > cap:
        raise SizeCapError(f"constraint dimension {observable.dim ** n} exceeds cap {cap}")
    d = observable.dim
    total = np.zeros((d**n, d**n), dtype=complex)
    for k in range(n):
        term = np.eye(1, dtype=complex)
        for j in range(n):
            term = np.kron(term, observable.matrix if j == k else np.eye(d))
        total += term
    return ConstraintObservable(total)


def choi_matrix(channel: KrausChannel) -> np.ndarray:
    """Choi operator sum_k vec(A_k) vec(A_k)' (unnormalized)."""
    flat = channel.ops.reshape(channel.num_kraus, -1)
    return flat.T @ flat.conj()


def reduce_kraus_rank(channel: KrausChannel, tol: float = 1e-12) -> KrausChannel:
    """Minimal Kraus representation via the Choi eigendecomposition.

    Eigenvalues below ``tol`` are dropped (mass at most dim_in * dim_out *
    tol) and completeness is restored exactly by the inverse square root
    of the resulting sum, so entropy-exchange values move by at most the
    dropped mass.
    """
    spec = hermitian_eig(choi_matrix(channel), check=False)
    keep = spec.eigenvalues > tol
    if not keep.any():
        raise ValidationError("Choi matrix numerically zero")
    ops = [
        np.sqrt(w) * vec.reshape(channel.dim_out, channel.dim_in)
        for w, vec in zip(spec.eigenvalues[keep], spec.eigenvectors[:, keep].T)
    ]
    if len(ops) >= channel.num_kraus:
        return channel
    renormed, _ = _renormalize_kraus(np.stack(ops))
    return KrausChannel(renormed, build_defect=channel.build_defect)


def _renormalize_kraus(ops: np.ndarray) -> tuple[np.ndarray, float]:
    """Right-multiply by (sum A'A)^(-1/2); returns (ops, prior defect)."""
    din = ops.shape[2]
    total = np.einsum("kij,kil->jl", ops.conj(), ops)
    defect = float(np.abs(total - np.eye(din)).max())
    spec = hermitian_eig(total, check=False)
    if spec.eigenvalues[0] < 1e-12:
        raise ValidationError(
            f"completeness sum nearly singular (min eigenvalue {spec.eigenvalues[0]:.3e}); "
            "the Kraus family does not resolve the input space"
        )
    inv_sqrt = (spec.eigenvectors / np.sqrt(spec.eigenvalues)) @ spec.eigenvectors.conj().T
    return ops @ inv_sqrt, defect


# ---------------------------------------------------------------------------
# Standard builders (test fixtures and CLI vocabulary)
# ---------------------------------------------------------------------------

def identity_channel(dim: int) -> KrausChannel:
    return KrausChannel([np.eye(dim, dtype=complex)])


def dephasing(p: float) -> KrausChannel:
    """Qubit dephasing {sqrt(1-p) I, sqrt(p) Z}."""
    _check_unit_interval("p", p)
    eye = np.eye(2, dtype=complex)
    z = np.diag([1.0, -1.0]).astype(complex)
    ops = [np.sqrt(1.0 - p) * eye]
    if p > 0.0:
        ops.append(np.sqrt(p) * z)
    return KrausChannel(ops)


def depolarizing(p: float, dim: int = 2) -> KrausChannel:
    """Phi[S] = (1-p) S + p I/dim, via the Heisenberg-Weyl family."""
    _check_unit_interval("p", p)
    ops = [np.sqrt(1.0 - p + p / dim**2) * np.eye(dim, dtype=complex)]
    if p > 0.0:
        shift = np.roll(np.eye(dim, dtype=complex), 1, axis=0)
        clock = np.diag(np.exp(2j * np.pi * np.arange(dim) / dim))
        for a in range(dim):
            for b in range(dim):
                if a == 0 and b == 0:
                    continue
                ops.append(
                    (np.sqrt(p) / dim)
                    * (np.linalg.matrix_power(shift, a) @ np.linalg.matrix_power(clock, b))
                )
    return KrausChannel(ops)


def replacement(target: DensityMatrix) -> KrausChannel:
    """Phi[S] = target for every input, from target's spectral decomposition."""
    spec = target.spectrum()
    keep = spec.eigenvalues > 1e-14
    ops = []
    for q, phi in zip(spec.eigenvalues[keep], spec.eigenvectors[:, keep].T):
        for k in range(target.dim):
            basis = np.zeros(target.dim, dtype=complex)
            basis[k] = 1.0
            ops.append(np.sqrt(q) * np.outer(phi, basis.conj()))
    return KrausChannel(ops)


def amplitude_damping(gamma: float) -> KrausChannel:
    _check_unit_interval("gamma", gamma)
    k0 = np.array([[1.0, 0.0], [0.0, np.sqrt(1.0 - gamma)]], dtype=complex)
    k1 = np.array([[0.0, np.sqrt(gamma)], [0.0, 0.0]], dtype=complex)
    return KrausChannel([k0, k1])


def _check_unit_interval(name: str, value: float) -> None:
    if not 0.0 <= value <= 1.0:
        raise ValidationError(f"{name} must lie in [0, 1], got {value!r}")


def build_standard(kind: str, **params) -> KrausChannel:
    """Dispatch by name: identity, dephasing, depolarizing, replacement,
    amplitude_damping."""
    builders = {
        "identity": lambda: identity_channel(int(params["dim"])),
        "dephasing": lambda: dephasing(float(params["p"])),
        "depolarizing": lambda: depolarizing(float(params["p"]), int(params.get("dim", 2))),
        "replacement": lambda: replacement(params["target"]),
        "amplitude_damping": lambda: amplitude_damping(float(params["gamma"])),
    }
    if kind not in builders:
        raise ValidationError(f"unknown standard channel {kind!r}; choose from {sorted(builders)}")
    return builders[kind]()


def random_channel(
    dim_in: int, dim_out: int, kraus_rank: int, rng: np.random.Generator
) -> KrausChannel:
    """Haar-style random channel from a QR-orthonormalized Stinespring block."""
    if dim_out * kraus_rank < dim_in:
        raise ValidationError("dim_out * kraus_rank must be >= dim_in for an isometry")
    g = rng.standard_normal((dim_out * kraus_rank, dim_in)) + 1j * rng.standard_normal(
        (dim_out * kraus_rank, dim_in)
    )
    q, _ = np.linalg.qr(g)
    return KrausChannel([q[k * dim_out : (k + 1) * dim_out, :] for k in range(kraus_rank)])
