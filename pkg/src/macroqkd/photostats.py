"""Statistics of the photon difference number n for Gaussian pulses.

The difference number in the V/H basis is n = n_V - n_H; in the +45/-45
basis it is n = n_{+45} - n_{-45}, which equals the V/H observable
conjugated by the pi/4 polarization rotation. Means and variances of these
quadratic observables follow from the Gaussian moment formulas

    <n>     = tr(F Sigma) + m^T F m
    var(n)  = 2 tr(F Sigma F Sigma) + (1/2) tr(F Omega F Omega)
              + 4 m^T F Sigma F m

where F is the observable's quadratic form, Sigma the covariance matrix,
m the mean vector and Omega the symplectic form. The commutator term
(1/2) tr(F Omega F Omega) makes var(n) vanish for the vacuum. These
closed forms are validated against the exact Fock-space oracle before use
(see macroqkd.validate).
"""

from __future__ import annotations

import enum
import functools
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erfc

from .gaussian import (
    GaussianState,
    SourceParams,
    alice_source,
    apply_loss,
    rotation_symplectic,
    symplectic_form,
)


class Basis(enum.Enum):
    """Measurement basis for the photon difference number."""

    VH = "VH"
    DIAG = "DIAG"

    def other(self) -> "Basis":
        return Basis.DIAG if self is Basis.VH else Basis.VH


@dataclass(frozen=True)
class DiffMoments:
    """Mean and variance (photons, photons^2) of the difference number."""

    mean: float
    variance: float


@dataclass(frozen=True)
class DetectorModel:
    """Linear photodetector pair measuring the two polarization modes.

    ``noise_equivalent_number`` is the RMS read noise of each detector in
    photon units; both detectors contribute independently to the measured
    difference. Non-unity quantum efficiency is treated as loss upstream.
    """

    noise_equivalent_number: float = 250.0
    quantum_efficiency: float = 1.0

    def __post_init__(self) -> None:
        if self.noise_equivalent_number < 0:
            raise ValueError("noise_equivalent_number must be >= 0")
        if not 0.0 < self.quantum_efficiency <= 1.0:
            raise ValueError("quantum_efficiency must be in (0, 1]")

    @property
    def difference_noise_variance(self) -> float:
        return 2.0 * self.noise_equivalent_number**2


NOISELESS = DetectorModel(noise_equivalent_number=0.0)

_F_VH = 0.5 * np.diag([1.0, 1.0, -1.0, -1.0])
_S_DIAG = rotation_symplectic(math.pi / 4)
_F_DIAG = _S_DIAG.T @ _F_VH @ _S_DIAG
_OMEGA4 = symplectic_form(2)
_OMEGA8 = symplectic_form(4)


def basis_form(basis: Basis) -> np.ndarray:
    """Quadratic form of the difference observable in the given basis."""
    return _F_VH if Basis(basis) is Basis.VH else _F_DIAG


def _quadratic_moments(
    mean: np.ndarray, cov: np.ndarray, f: np.ndarray, omega: np.ndarray
) -> tuple[float, float]:
    fs = f @ cov
    fm = f @ mean
    mu = float(np.trace(fs) + mean @ fm)
    fo = f @ omega
    var = float(2.0 * np.sum(fs.T * fs) + 0.5 * np.sum(fo.T * fo) + 4.0 * fm @ cov @ fm)
    return mu, var


@functools.lru_cache(maxsize=512)
def diff_number_moments(state: GaussianState, basis: Basis) -> DiffMoments:
    """Exact mean and variance of the difference number for a two-mode state.

    Memoized on (state identity, basis): a protocol session measures the
    same handful of immutable pulses over and over.
    """
    if state.num_modes != 2:
        raise ValueError(f"expected a two-mode state, got {state.num_modes} modes")
    mu, var = _quadratic_moments(state.mean, state.cov, basis_form(basis), _OMEGA4)
    return DiffMoments(mu, var)


@functools.lru_cache(maxsize=256)
def joint_diff_moments(
    joint: GaussianState, basis_b: Basis, basis_e: Basis
) -> tuple[float, float, float, float, float]:
    """Joint first and second moments of the two difference observables on a
    four-mode tap state.

    Returns (mean_b, var_b, mean_e, var_e, cov_be) where the B observable
    acts on the first two modes and the E observable on the last two. The
    commutator cross term vanishes because the supports are disjoint.
    """
    if joint.num_modes != 4:
        raise ValueError(f"expected a four-mode state, got {joint.num_modes} modes")
    f_b = np.zeros((8, 8))
    f_b[:4, :4] = basis_form(basis_b)
    f_e = np.zeros((8, 8))
    f_e[4:, 4:] = basis_form(basis_e)
    mean_b, var_b = _quadratic_moments(joint.mean, joint.cov, f_b, _OMEGA8)
    mean_e, var_e = _quadratic_moments(joint.mean, joint.cov, f_e, _OMEGA8)
    sb = f_b @ joint.cov
    se = f_e @ joint.cov
    cov_be = float(
        2.0 * np.trace(sb @ se) + 4.0 * joint.mean @ f_b @ joint.cov @ f_e @ joint.mean
    )
    return mean_b, var_b, mean_e, var_e, cov_be


def decode_bit(raw_n: float) -> int:
    """Sign decoding of a difference-number outcome: n > 0 reads as bit 1,
    n < 0 as bit 0. The measure-zero tie n == 0 decodes as 1."""
    return 1 if raw_n >= 0.0 else 0


def sample_outcome(
    moments: DiffMoments, detector: DetectorModel, rng: np.random.Generator
) -> float:
    """Draw one detected difference-number value.

    The outcome is Normal(mean, variance + detector read-noise variance);
    at the macroscopic photon numbers simulated here the discreteness of n
    is negligible, so no integer rounding is applied.
    """
    if moments.variance < 0:
        raise ValueError("variance must be >= 0")
    sigma = math.sqrt(moments.variance + detector.difference_noise_variance)
    return moments.mean + sigma * rng.standard_normal()


def error_probability(moments: DiffMoments, detector: DetectorModel) -> float:
    """Probability that the sign of the outcome flips the encoded bit."""
    if moments.mean == 0.0:
        return 0.5
    total_var = moments.variance + detector.difference_noise_variance
    if total_var <= 0.0:
        return 0.0
    return 0.5 * float(erfc(abs(moments.mean) / math.sqrt(2.0 * total_var)))


def bob_error_vs_loss(
    params: SourceParams, eta: float, detector: DetectorModel
) -> float:
    """Bob's bit-flip probability after a channel losing a fraction eta."""
    if not 0.0 <= eta < 1.0:
        raise ValueError(f"eta must be in [0, 1) (got {eta})")
    pulse = apply_loss(alice_source(params, 1, Basis.VH), eta)
    return error_probability(diff_number_moments(pulse, Basis.VH), detector)


def eve_tap_probability(params: SourceParams, eta: float) -> float:
    """Probability that Eve, sampling a fraction eta of the pulse and
    knowing the basis, infers the correct bit (noiseless detector)."""
    if not 0.0 <= eta <= 1.0:
        raise ValueError(f"eta must be in [0, 1] (got {eta})")
    pulse = apply_loss(alice_source(params, 1, Basis.VH), 1.0 - eta)
    p_err = error_probability(diff_number_moments(pulse, Basis.VH), NOISELESS)
    return 1.0 - p_err


def distribution_curve(
    state: GaussianState,
    basis: Basis,
    detector: DetectorModel,
    n_grid: np.ndarray,
) -> list[tuple[float, float]]:
    """Gaussian probability density of the detected difference number,
    evaluated on a grid of n values."""
    grid = np.asarray(n_grid, dtype=float)
    if grid.size == 0:
        raise ValueError("n_grid must be non-empty")
    mom = diff_number_moments(state, basis)
    var = mom.variance + detector.difference_noise_variance
    sigma = math.sqrt(var)
    pdf = np.exp(-0.5 * ((grid - mom.mean) / sigma) ** 2) / (sigma * math.sqrt(2 * math.pi))
    return list(zip(grid.tolist(), pdf.tolist()))
