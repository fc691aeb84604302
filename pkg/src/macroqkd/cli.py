"""Command-line harness: figure-reproduction sweeps, full protocol runs and
the Fock-oracle validation gate.

Subcommands: fig1, fig2, fig3, run, validate. Exit codes: 0 success,
1 configuration error, 2 validation failure, 3 I/O error. CSV output uses
full double precision (17 significant digits), comma separators and LF
line endings so repeated runs with the same configuration are
byte-identical.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import validate as validate_mod
from .attacks import AttackConfig, AttackKind
from .gaussian import SourceParams, alice_source, apply_loss, source_param_violations
from .photostats import (
    Basis,
    DetectorModel,
    bob_error_vs_loss,
    diff_number_moments,
    distribution_curve,
    eve_tap_probability,
)
from .protocol import RunReport, SessionConfig, run_session, session_violations

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_VALIDATION = 2
EXIT_IO = 3


class ConfigError(ValueError):
    """Invalid command-line configuration; message lists every problem."""


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # argparse defaults to exit code 2
        raise ConfigError(message)


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def _parse_grid(text: str, lo: float, hi: float, name: str) -> np.ndarray:
    try:
        start_s, stop_s, steps_s = text.split(":")
        start, stop, steps = float(start_s), float(stop_s), int(steps_s)
    except ValueError as exc:
        raise ConfigError(f"--grid must be start:stop:steps (got {text!r})") from exc
    if steps < 1:
        raise ConfigError(f"--grid needs at least 1 step (got {steps})")
    if steps > 1 and not stop > start:
        raise ConfigError(f"--grid must be strictly increasing (got {text!r})")
    grid = np.linspace(start, stop, steps)
    if grid[0] < lo or grid[-1] > hi:
        raise ConfigError(f"{name} grid must lie within [{lo}, {hi}] (got {text!r})")
    return grid


def _source_from_args(args: argparse.Namespace) -> SourceParams:
    problems = source_param_violations(args.gain, args.n_total, args.bit_amplitude)
    if problems:
        raise ConfigError("; ".join(problems))
    return SourceParams(
        gain_G=args.gain, n_total_amp=args.n_total, bit_amplitude_N=args.bit_amplitude
    )


def _detector_from_args(args: argparse.Namespace) -> DetectorModel:
    if args.detector_nen < 0:
        raise ConfigError(f"--detector-nen must be >= 0 (got {args.detector_nen})")
    return DetectorModel(noise_equivalent_number=args.detector_nen)


def _write_text(path: str | None, text: str) -> None:
    try:
        if path is None or path == "-":
            sys.stdout.write(text)
        else:
            Path(path).write_text(text, newline="")
    except OSError as exc:
        raise _IOFailure(f"cannot write {path}: {exc}") from exc


class _IOFailure(RuntimeError):
    pass


def _add_source_flags(p: argparse.ArgumentParser, nen_default: float) -> None:
    p.add_argument("--gain", type=float, default=10.0, help="amplifier photon-number gain G")
    p.add_argument("--n-total", type=float, default=2e6, help="mean total photons after amplification")
    p.add_argument("--bit-amplitude", type=float, default=2460.0, help="mean difference number N per bit")
    p.add_argument(
        "--detector-nen",
        type=float,
        default=nen_default,
        help="detector noise-equivalent photon number (per detector)",
    )
    p.add_argument("--out", default=None, help="output path (default stdout)")


def cmd_fig1(args: argparse.Namespace) -> int:
    """Outcome distributions for both bit values and the incorrect basis."""
    params = _source_from_args(args)
    detector = _detector_from_args(args)
    eta = args.loss
    if not 0.0 <= eta < 1.0:
        raise ConfigError(f"--loss must be in [0, 1) (got {eta})")
    pulse1 = apply_loss(alice_source(params, 1, Basis.VH), eta)
    pulse0 = apply_loss(alice_source(params, 0, Basis.VH), eta)
    mom1 = diff_number_moments(pulse1, Basis.VH)
    mom_wrong = diff_number_moments(pulse1, Basis.DIAG)
    if args.grid is not None:
        span = None
        grid = _parse_grid(args.grid, -math.inf, math.inf, "n")
    else:
        sigma_max = math.sqrt(
            max(mom1.variance, mom_wrong.variance) + detector.difference_noise_variance
        )
        span = abs(mom1.mean) + 8.0 * sigma_max
        grid = np.linspace(-span, span, 2001)
    curves = [
        distribution_curve(pulse1, Basis.VH, detector, grid),
        distribution_curve(pulse0, Basis.VH, detector, grid),
        distribution_curve(pulse1, Basis.DIAG, detector, grid),
    ]
    lines = ["n,pdf_correct_bit1,pdf_correct_bit0,pdf_incorrect"]
    for i, n in enumerate(grid):
        lines.append(
            f"{_fmt(n)},{_fmt(curves[0][i][1])},{_fmt(curves[1][i][1])},{_fmt(curves[2][i][1])}"
        )
    _write_text(args.out, "\n".join(lines) + "\n")
    return EXIT_OK


def cmd_fig2(args: argparse.Namespace) -> int:
    """Bob's error rate versus channel loss."""
    params = _source_from_args(args)
    detector = _detector_from_args(args)
    grid = _parse_grid(args.grid, 0.0, 1.0 - 1e-12, "eta")
    lines = ["eta,p_err"]
    for eta in grid:
        lines.append(f"{_fmt(eta)},{_fmt(bob_error_vs_loss(params, float(eta), detector))}")
    _write_text(args.out, "\n".join(lines) + "\n")
    return EXIT_OK


def cmd_fig3(args: argparse.Namespace) -> int:
    """Eve's correct-bit probability versus sampled fraction."""
    params = _source_from_args(args)
    grid = _parse_grid(args.grid, 0.0, 1.0, "eta")
    lines = ["eta,p_eta"]
    for eta in grid:
        lines.append(f"{_fmt(eta)},{_fmt(eve_tap_probability(params, float(eta)))}")
    _write_text(args.out, "\n".join(lines) + "\n")
    return EXIT_OK


def config_to_dict(config: SessionConfig) -> dict:
    return {
        "source": {
            "gain_G": config.source.gain_G,
            "n_total_amp": config.source.n_total_amp,
            "bit_amplitude_N": config.source.bit_amplitude_N,
            "squeeze_phase_theta": config.source.squeeze_phase_theta,
        },
        "channel_loss": config.channel_loss,
        "detector": {
            "noise_equivalent_number": config.detector.noise_equivalent_number,
            "quantum_efficiency": config.detector.quantum_efficiency,
        },
        "attack": {
            "kind": config.attack.kind.value,
            "tap_fraction": config.attack.tap_fraction,
            "eve_detector_nen": config.attack.eve_detector.noise_equivalent_number,
        },
        "num_pulses": config.num_pulses,
        "sample_fraction": config.sample_fraction,
        "detection_sigma_k": config.detection_sigma_k,
        "seed": config.seed,
    }


def config_from_dict(data: dict) -> SessionConfig:
    src = data["source"]
    att = data["attack"]
    return SessionConfig(
        source=SourceParams(
            gain_G=src["gain_G"],
            n_total_amp=src["n_total_amp"],
            bit_amplitude_N=src["bit_amplitude_N"],
            squeeze_phase_theta=src["squeeze_phase_theta"],
        ),
        channel_loss=data["channel_loss"],
        detector=DetectorModel(
            noise_equivalent_number=data["detector"]["noise_equivalent_number"],
            quantum_efficiency=data["detector"]["quantum_efficiency"],
        ),
        attack=AttackConfig(
            kind=AttackKind(att["kind"]),
            tap_fraction=att["tap_fraction"],
            eve_detector=DetectorModel(noise_equivalent_number=att["eve_detector_nen"]),
        ),
        num_pulses=data["num_pulses"],
        sample_fraction=data["sample_fraction"],
        detection_sigma_k=data["detection_sigma_k"],
        seed=data["seed"],
    )


def report_text(config: SessionConfig, report: RunReport, fmt: str) -> str:
    payload = {
        "config": config_to_dict(config),
        "report": dataclasses.asdict(report),
    }
    if fmt == "report":
        return json.dumps(payload, sort_keys=True, indent=2) + "\n"
    lines = ["key,value"]

    def flatten(prefix: str, obj: object) -> None:
        if isinstance(obj, dict):
            for k in sorted(obj):
                flatten(f"{prefix}.{k}" if prefix else str(k), obj[k])
        else:
            val = _fmt(obj) if isinstance(obj, float) else str(obj)
            lines.append(f"{prefix},{val}")

    flatten("", payload)
    return "\n".join(lines) + "\n"


def cmd_run(args: argparse.Namespace) -> int:
    """Run a full session and write the replayable report."""
    params = _source_from_args(args)
    detector = _detector_from_args(args)
    try:
        kind = AttackKind(args.attack)
    except ValueError:
        raise ConfigError(
            f"--attack must be one of {[k.value for k in AttackKind]} (got {args.attack!r})"
        ) from None
    tap = args.tap_fraction if kind is AttackKind.BEAMSPLITTER_TAP else None
    problems = session_violations(
        args.loss, args.pulses, args.sample_fraction, args.detect_k, args.seed
    )
    if kind is AttackKind.BEAMSPLITTER_TAP and (
        args.tap_fraction is None or not 0.0 < args.tap_fraction < 1.0
    ):
        problems.append(f"--tap-fraction must be in (0, 1) for beamsplitter_tap (got {args.tap_fraction})")
    if problems:
        raise ConfigError("; ".join(problems))
    config = SessionConfig(
        source=params,
        channel_loss=args.loss,
        detector=detector,
        attack=AttackConfig(kind=kind, tap_fraction=tap),
        num_pulses=args.pulses,
        sample_fraction=args.sample_fraction,
        detection_sigma_k=args.detect_k,
        seed=args.seed,
    )
    report = run_session(config)
    _write_text(args.out, report_text(config, report, args.format))
    return EXIT_OK


def cmd_validate(args: argparse.Namespace) -> int:
    """Run the Fock-oracle comparison ladder; non-zero exit on any failure."""
    rows = validate_mod.run_ladder(tolerance=args.tol)
    _write_text(args.out, validate_mod.rows_to_csv(rows))
    if not validate_mod.ladder_passed(rows):
        failed = sum(1 for r in rows if not r.passed)
        print(f"validation FAILED: {failed}/{len(rows)} comparisons out of tolerance", file=sys.stderr)
        return EXIT_VALIDATION
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="macroqkd", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p1 = sub.add_parser("fig1", help="outcome distributions at fixed loss")
    _add_source_flags(p1, nen_default=0.0)
    p1.add_argument("--loss", type=float, default=0.0, help="channel loss fraction eta")
    p1.add_argument("--grid", default=None, help="n grid as start:stop:steps (default auto)")
    p1.set_defaults(func=cmd_fig1)

    p2 = sub.add_parser("fig2", help="error rate versus loss")
    _add_source_flags(p2, nen_default=0.0)
    p2.add_argument("--grid", default="0:0.9:91", help="eta grid as start:stop:steps")
    p2.set_defaults(func=cmd_fig2)

    p3 = sub.add_parser("fig3", help="Eve's tap probability versus sampled fraction")
    _add_source_flags(p3, nen_default=0.0)
    p3.add_argument("--grid", default="0:1:101", help="eta grid as start:stop:steps")
    p3.set_defaults(func=cmd_fig3)

    pr = sub.add_parser("run", help="run a full QKD session")
    _add_source_flags(pr, nen_default=250.0)
    pr.add_argument("--loss", type=float, default=0.0, help="channel loss fraction eta")
    pr.add_argument("--attack", default="none", help="none, intercept_resend, beamsplitter_tap, dual_basis or superior_channel")
    pr.add_argument("--tap-fraction", type=float, default=None, help="Eve's sampled fraction (beamsplitter_tap)")
    pr.add_argument("--pulses", type=int, default=10_000, help="number of pulses to send")
    pr.add_argument("--sample-fraction", type=float, default=0.1, help="fraction of sifted bits disclosed")
    pr.add_argument("--detect-k", type=float, default=5.0, help="detection threshold in sigmas")
    pr.add_argument("--seed", type=int, default=0, help="session seed")
    pr.add_argument("--format", choices=("csv", "report"), default="report")
    pr.set_defaults(func=cmd_run)

    pv = sub.add_parser("validate", help="Gaussian engine vs exact Fock oracle")
    pv.add_argument("--tol", type=float, default=validate_mod.DEFAULT_TOLERANCE, help="relative tolerance")
    pv.add_argument("--out", default=None, help="output path for the CSV table")
    pv.set_defaults(func=cmd_validate)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except _IOFailure as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
