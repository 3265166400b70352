"""Fock-truncated bosonic classical-noise channel a -> a + xi.

xi is a complex Gaussian with zero mean and variance N (the mean photon
number of the noise), so the channel is the noise average of displacement
operators:

    Phi[S] = integral  (pi N)^(-1) exp(-|z|^2 / N)  D(z) S D(z)'  d^2 z.

The integral is discretized in polar coordinates: Gauss-Laguerre in the
radial variable t = |z|^2 / N (exact weights for the exp(-t) density) and
a uniform angular rule, which is spectrally accurate for the periodic
factor. Displacements are exponentiated unitarily in a buffered dimension
cutoff + buffer and only then projected to the cutoff space; truncating
before exponentiation badly violates unitarity. The weighted family
{sqrt(w_m) P D(z_m) P} is then right-multiplied by the inverse square root
of its completeness sum, restoring trace preservation exactly while
perturbing the channel by the order of the truncation deficiency, which is
recorded on the channel as ``build_defect``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial.laguerre import laggauss
from scipy.linalg import expm

from .channels import KrausChannel, _renormalize_kraus, reduce_kraus_rank
from .errors import ValidationError
from .operators import DensityMatrix

OUTPUT_TP_TOL = 1e-6


@dataclass(frozen=True)
class GaussianNoiseSpec:
    """Parameters of the truncated classical-noise channel."""

    noise_mean_photons: float
    cutoff: int
    buffer: int = 8
    radial_nodes: int = 24
    angular_nodes: int = 32

    def __post_init__(self):
        if self.noise_mean_photons <= 0.0:
            raise ValidationError(f"noise mean photon number must be > 0, got {self.noise_mean_photons!r}")
        if self.cutoff < 2:
            raise ValidationError(f"cutoff must be >= 2, got {self.cutoff}")
        if self.buffer < 4:
            raise ValidationError(f"buffer must be >= 4, got {self.buffer}")
        if self.radial_nodes < 1 or self.angular_nodes < 1:
            raise ValidationError("node counts must be positive")


def annihilation_operator(dim: int) -> np.ndarray:
    a = np.zeros((dim, dim), dtype=complex)
    for n in range(1, dim):
        a[n - 1, n] = math.sqrt(n)
    return a


def displacement_operator(alpha: complex, dim: int) -> np.ndarray:
    """Glauber displacement exp(alpha a' - conj(alpha) a) on dim levels."""
    a = annihilation_operator(dim)
    return expm(alpha * a.conj().T - np.conjugate(alpha) * a)


def gaussian_classical_noise(spec: GaussianNoiseSpec, reduce_rank: bool = True) -> KrausChannel:
    """Build the truncated classical-noise channel for ``spec``.

    Raises if the completeness sum of the raw quadrature family is too
    depleted to renormalize (increase buffer and/or node counts).
    """
    work_dim = spec.cutoff + spec.buffer
    a = annihilation_operator(work_dim)
    creation_minus = a.conj().T - a

    t_nodes, t_weights = laggauss(spec.radial_nodes)
    t_weights = t_weights / t_weights.sum()  # exact unit mass of exp(-t) dt
    radii = np.sqrt(spec.noise_mean_photons * t_nodes)

    # One exponentiation per radius; angles act by diagonal phase rotation
    # D(r e^{i theta}) = R(theta) D(r) R(theta)' with R = diag(e^{i theta n}).
    radial_blocks = [expm(r * creation_minus)[: spec.cutoff, : spec.cutoff] for r in radii]
    levels = np.arange(spec.cutoff)
    ops = []
    for u, block in zip(t_weights, radial_blocks):
        for j in range(spec.angular_nodes):
            theta = 2.0 * math.pi * j / spec.angular_nodes
            phase = np.exp(1j * theta * levels)
            ops.append(math.sqrt(u / spec.angular_nodes) * (phase[:, None] * block * phase.conj()[None, :]))

    try:
        renormed, raw_defect = _renormalize_kraus(np.stack(ops))
    except ValidationError as exc:
        raise ValidationError(
            f"classical-noise construction failed for {spec}: {exc}; "
            "increase buffer and/or quadrature nodes"
        ) from exc
    channel = KrausChannel(renormed, build_defect=raw_defect)
    if channel.tp_defect > OUTPUT_TP_TOL:
        raise ValidationError(
            f"renormalized completeness defect {channel.tp_defect:.3e} > {OUTPUT_TP_TOL:.1e}; "
            "increase buffer and/or quadrature nodes"
        )
    if reduce_rank:
        channel = reduce_kraus_rank(channel, tol=1e-13)
    return channel


def thermal_state(mean_photons: float, dim: int) -> DensityMatrix:
    """Truncated geometric (thermal) state with nominal mean photon number.

    The spectrum (x/(x+1))^n is renormalized on the cutoff space, so the
    realized mean is slightly below nominal; the deficit is the truncation
    tail (x/(x+1))^dim scale.
    """
    x = float(mean_photons)
    if x < 0.0:
        raise ValidationError(f"mean photon number must be >= 0, got {x!r}")
    if x == 0.0:
        w = np.zeros(dim)
        w[0] = 1.0
    else:
        w = (x / (x + 1.0)) ** np.arange(dim)
        w = w / w.sum()
    return DensityMatrix(np.diag(w).astype(complex))
