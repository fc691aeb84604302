"""Oracle gate: compare Gaussian-engine moments against the exact Fock oracle.

The ladder sweeps squeeze strength, seed amplitudes, loss and both
measurement bases at photon numbers small enough for the exact oracle,
and checks that the engine's difference-number mean and variance agree to
a relative tolerance. Agreement here certifies the moment formulas at any
scale: they are polynomial identities in the mean vector and covariance
matrix, so correctness does not depend on the photon number.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

from . import fock
from .gaussian import apply_loss, apply_two_mode_squeeze, make_coherent_seed
from .photostats import Basis, diff_number_moments

LADDER_R = (0.2, 0.5, 0.8)
LADDER_ALPHA_SQ = (1.0, 2.0, 4.0)
LADDER_ETA = (0.0, 0.5)
THETA = math.pi / 2
DEFAULT_TOLERANCE = 1e-6
LADDER_TRUNCATION_BOUND = 5e-8
# Relative errors are taken against max(|oracle|, MEAN_FLOOR) so that
# identically-zero means compare by absolute size instead of blowing up.
MEAN_FLOOR = 1e-6


@dataclass(frozen=True)
class ComparisonRow:
    r: float
    alpha_v_sq: float
    alpha_h_sq: float
    eta: float
    basis: str
    quantity: str
    engine_value: float
    oracle_value: float
    relative_error: float
    truncation_deficit: float
    passed: bool


def _pick_cutoff(alpha_v_sq: float, alpha_h_sq: float, r: float) -> int:
    """Cutoff heavy enough for an ~1e-8 norm deficit, capped at the oracle limit.

    Squeezed pulses are super-Poissonian, so the tail is sized from the
    per-mode variance rather than sqrt(mean)."""
    av, ah = math.sqrt(alpha_v_sq), math.sqrt(alpha_h_sq)
    ch, sh = math.cosh(r), math.sinh(r)
    mean_mode = max(
        ch**2 * alpha_v_sq + sh**2 * (alpha_h_sq + 1) + 2 * ch * sh * av * ah,
        ch**2 * alpha_h_sq + sh**2 * (alpha_v_sq + 1) + 2 * ch * sh * av * ah,
    )
    # crude per-mode std bound: amplified coherent noise in the anti-squeezed
    # quadrature plus the Poisson floor
    sigma = math.sqrt(mean_mode) * math.exp(r) + 1.0
    return min(fock.MAX_CUTOFF, int(math.ceil(mean_mode + 9.0 * sigma + 8.0)))


@functools.lru_cache(maxsize=64)
def _ladder_state(r: float, alpha_v_sq: float, alpha_h_sq: float) -> fock.FockState:
    cutoff = _pick_cutoff(alpha_v_sq, alpha_h_sq, r)
    return fock.build_state_exact(
        math.sqrt(alpha_v_sq), 1j * math.sqrt(alpha_h_sq), r, THETA, cutoff,
        truncation_bound=None,
    )


def compare_point(
    r: float,
    alpha_v_sq: float,
    alpha_h_sq: float,
    eta: float,
    basis: Basis,
    tolerance: float = DEFAULT_TOLERANCE,
    variance_perturbation: float = 0.0,
) -> list[ComparisonRow]:
    """Engine-vs-oracle comparison at one ladder point.

    ``variance_perturbation`` is a test-only fault hook: it scales the
    engine variance by (1 + perturbation) so the gate's ability to catch a
    broken formula can itself be tested.
    """
    alpha_v = math.sqrt(alpha_v_sq)
    alpha_h = 1j * math.sqrt(alpha_h_sq)

    state = apply_two_mode_squeeze(make_coherent_seed(alpha_v, alpha_h), r, THETA)
    state = apply_loss(state, eta)
    mom = diff_number_moments(state, basis)
    engine_mean = mom.mean
    engine_var = mom.variance * (1.0 + variance_perturbation)

    # The heaviest ladder point needs the full cutoff-80 space and lands a
    # shade above the default 1e-8 deficit gate; the ladder's own bound is
    # 5e-8, which keeps the induced moment error an order below tolerance.
    fstate = _ladder_state(r, alpha_v_sq, alpha_h_sq)
    deficit = fstate.norm_deficit
    fstate.check_truncation(bound=LADDER_TRUNCATION_BOUND)
    if eta == 0.0:
        dist = fock.exact_diff_distribution(fstate, basis, truncation_bound=LADDER_TRUNCATION_BOUND)
    else:
        dist = fock.exact_loss_distribution(
            fstate, eta, basis, truncation_bound=LADDER_TRUNCATION_BOUND
        )
    oracle_mean, oracle_var = fock.distribution_moments(dist)

    rows = []
    for quantity, engine_value, oracle_value in (
        ("mean", engine_mean, oracle_mean),
        ("variance", engine_var, oracle_var),
    ):
        rel = abs(engine_value - oracle_value) / max(abs(oracle_value), MEAN_FLOOR)
        rows.append(
            ComparisonRow(
                r=r,
                alpha_v_sq=alpha_v_sq,
                alpha_h_sq=alpha_h_sq,
                eta=eta,
                basis=Basis(basis).value,
                quantity=quantity,
                engine_value=engine_value,
                oracle_value=oracle_value,
                relative_error=rel,
                truncation_deficit=deficit,
                passed=rel <= tolerance,
            )
        )
    return rows


def run_ladder(
    tolerance: float = DEFAULT_TOLERANCE,
    variance_perturbation: float = 0.0,
) -> list[ComparisonRow]:
    """Full validation ladder over r x seed amplitudes x loss x basis."""
    rows: list[ComparisonRow] = []
    for r in LADDER_R:
        for av2 in LADDER_ALPHA_SQ:
            for ah2 in LADDER_ALPHA_SQ:
                for eta in LADDER_ETA:
                    for basis in (Basis.VH, Basis.DIAG):
                        rows.extend(
                            compare_point(
                                r, av2, ah2, eta, basis,
                                tolerance=tolerance,
                                variance_perturbation=variance_perturbation,
                            )
                        )
    return rows


def ladder_passed(rows: list[ComparisonRow]) -> bool:
    return all(row.passed for row in rows)


def rows_to_csv(rows: list[ComparisonRow]) -> str:
    header = (
        "r,alpha_v_sq,alpha_h_sq,eta,basis,quantity,"
        "engine_value,oracle_value,relative_error,truncation_deficit,passed"
    )
    lines = [header]
    for row in rows:
        lines.append(
            f"{row.r:.17g},{row.alpha_v_sq:.17g},{row.alpha_h_sq:.17g},"
            f"{row.eta:.17g},{row.basis},{row.quantity},"
            f"{row.engine_value:.17g},{row.oracle_value:.17g},"
            f"{row.relative_error:.17g},{row.truncation_deficit:.17g},"
            f"{'pass' if row.passed else 'FAIL'}"
        )
    return "\n".join(lines) + "\n"
