#!/usr/bin/env python3
"""Run one session per attack and print a comparison table.

All sessions use noiseless detectors so the error rates line up with the
closed-form curves; the superior-channel row runs at 50% original channel
loss, the configuration where Eve's copy is statistically identical to
Bob's and the attack leaves no error-rate signature.
"""

import sys
import time

from macroqkd import AttackConfig, AttackKind, NOISELESS, SourceParams
from macroqkd.protocol import SessionConfig, run_session

SOURCE = SourceParams(gain_G=10.0, n_total_amp=2e6, bit_amplitude_N=2460.0)
PULSES = 100_000
SEED = 20_260_810


def session(kind: AttackKind, channel_loss: float, tap: float | None = None):
    return SessionConfig(
        source=SOURCE,
        channel_loss=channel_loss,
        detector=NOISELESS,
        attack=AttackConfig(kind=kind, tap_fraction=tap),
        num_pulses=PULSES,
        seed=SEED,
    )


def run() -> int:
    rows = [
        ("baseline (no attack)", session(AttackKind.NONE, 0.0)),
        ("intercept-resend", session(AttackKind.INTERCEPT_RESEND, 0.0)),
        ("beamsplitter tap 50%", session(AttackKind.BEAMSPLITTER_TAP, 0.0, tap=0.5)),
        ("dual-basis", session(AttackKind.DUAL_BASIS, 0.0)),
        ("superior channel @ 50% loss", session(AttackKind.SUPERIOR_CHANNEL, 0.5)),
    ]
    print(f"{PULSES} pulses per session, seed {SEED}\n")
    header = f"{'attack':<28} {'sifted':>7} {'est err':>8} {'sys err':>9} {'verdict':>22} {'eve acc':>8} {'bob acc':>8}"
    print(header)
    print("-" * len(header))
    for name, config in rows:
        t0 = time.time()
        rep = run_session(config)
        eve = f"{rep.eve_bit_accuracy:.4f}" if rep.eve_bit_accuracy is not None else "-"
        bob = f"{rep.bob_bit_accuracy:.4f}" if rep.bob_bit_accuracy is not None else "-"
        print(
            f"{name:<28} {rep.sifted_count:>7} {rep.estimated_error_rate:>8.4f} "
            f"{rep.expected_systematic_error:>9.2e} {rep.detection_verdict:>22} "
            f"{eve:>8} {bob:>8}   ({time.time()-t0:.1f}s)"
        )
    return 0


if __name__ == "__main__":
    sys.exit(run())
