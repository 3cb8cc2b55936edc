"""Command-line harness.

Subcommands mirror the experiment pipelines: `fig3` (verification fidelity +
reduced purities), `fig4` (correlation decoding), `fig5` (concurrence vs
phase), `equiv` (masker / walk / optics cross-check, nonzero exit on breach),
and `angles` (waveplate angle solutions for preparation and measurement).

Option precedence: command-line flags override the --config file, which
overrides built-in defaults.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import experiments, optics
from .experiments import ExperimentConfig

_CONFIG_KEYS = {
    "seed": int,
    "shots_per_setting": int,
    "qsv_tests": int,
    "noise_p": float,
    "phi_grid_deg": lambda v: tuple(float(x) for x in v),
    "analytic": bool,
    "output_path": str,
}


def _load_config_file(path: str) -> dict:
    doc = json.loads(Path(path).read_text())
    if not isinstance(doc, dict):
        raise SystemExit(f"config file {path} must hold a JSON object")
    unknown = set(doc) - set(_CONFIG_KEYS) - {"experiment"}
    if unknown:
        raise SystemExit(f"config file {path} has unknown keys: {sorted(unknown)}")
    return {k: _CONFIG_KEYS[k](v) for k, v in doc.items() if k in _CONFIG_KEYS}


def _build_config(args: argparse.Namespace) -> ExperimentConfig:
    values: dict = {}
    if args.config:
        values.update(_load_config_file(args.config))
    if args.seed is not None:
        values["seed"] = args.seed
    if args.shots is not None:
        values["shots_per_setting"] = args.shots
    if args.qsv_tests is not None:
        values["qsv_tests"] = args.qsv_tests
    if args.noise_p is not None:
        values["noise_p"] = args.noise_p
    if getattr(args, "phi_grid", None):
        values["phi_grid_deg"] = tuple(float(x) for x in args.phi_grid.split(","))
    if args.analytic:
        values["analytic"] = True
    if args.out is not None:
        values["output_path"] = args.out
    return ExperimentConfig(experiment=args.command, **values)


def _emit(report: dict, config: ExperimentConfig) -> None:
    if config.output_path:
        paths = experiments.write_report(report, config.output_path)
        for p in paths:
            print(f"wrote {p}")
    else:
        sys.stdout.write(experiments.report_json(report))


def _cmd_fig3(args) -> int:
    config = _build_config(args)
    _emit(experiments.run_fig3(config), config)
    return 0


def _cmd_fig4(args) -> int:
    config = _build_config(args)
    _emit(experiments.run_fig4(config, probe=args.probe), config)
    return 0


def _cmd_fig5(args) -> int:
    config = _build_config(args)
    _emit(experiments.run_fig5(config), config)
    return 0


def _cmd_equiv(args) -> int:
    config = _build_config(args)
    report = experiments.run_equivalence(config, n_inputs=args.n_inputs)
    _emit(report, config)
    if not report["pass"]:
        print(f"equivalence FAILED: max infidelity {report['max_infidelity']:.3e} "
              f"exceeds {report['threshold']:.1e}", file=sys.stderr)
        return 2
    return 0


def _parse_state(text: str):
    parts = [float(x) for x in text.split(",")]
    if len(parts) != 4:
        raise SystemExit("state must be four comma-separated real amplitudes")
    import numpy as np

    v = np.asarray(parts)
    norm = np.linalg.norm(v)
    if norm == 0:
        raise SystemExit("state must be nonzero")
    return v / norm


def _cmd_angles(args) -> int:
    did_something = False
    if args.state:
        a = _parse_state(args.state)
        angles = optics.solve_prep_angles(a)
        print(f"preparation target a = ({', '.join(f'{x:.6f}' for x in a)})")
        print(f"  H1 = {angles.h1:.6f} deg")
        print(f"  H2 = {angles.h2:.6f} deg")
        print(f"  H3 = {angles.h3:.6f} deg")
        did_something = True
    if args.phi is not None:
        angles = optics.phase_prep_angles(args.phi)
        print(f"phase probe phi = {args.phi:.6f} deg -> (|0> + e^(i phi)|1>)/sqrt(2)")
        print(f"  H1 = {angles.h1:.6f} deg")
        print(f"  Q1 = 45.000000 deg (inserted on the -3 rail)")
        print(f"  H2 = {angles.h2:.6f} deg")
        did_something = True
    setting = None
    label = None
    if args.setting:
        label = args.setting.upper()
        if len(label) != 2 or any(c not in "XYZ" for c in label):
            raise SystemExit("setting must be a Pauli pair like XX, XY, ..., ZZ")
        setting = optics.pauli_meas_setting(label[0], label[1])
    elif args.basis:
        parts = [float(x) for x in args.basis.split(",")]
        if len(parts) != 4:
            raise SystemExit("basis must be gamma,zeta,alpha,beta in radians")
        setting = optics.MeasSetting(*parts)
        label = "custom basis"
    if setting is not None:
        compiled = optics.compile_measurement(setting, seed=args.seed or 0)
        print(f"measurement setting {label} "
              f"(gamma={setting.gamma:.6f}, zeta={setting.zeta:.6f}, "
              f"alpha={setting.alpha:.6f}, beta={setting.beta:.6f} rad)")
        print(f"  Q2 = {compiled.q2:.6f} deg")
        print(f"  H4 = {compiled.h4:.6f} deg")
        print(f"  Q3 = {compiled.q3:.6f} deg")
        print(f"  H5 = {compiled.h5:.6f} deg")
        print(f"  solver residual = {compiled.residual:.3e}")
        did_something = True
    if not did_something:
        raise SystemExit("angles: give at least one of --state, --phi, --setting")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="realmask",
        description="Masking of the real ququart: simulation and estimation pipelines.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p: argparse.ArgumentParser):
        p.add_argument("--seed", type=int, default=None, help="master seed (default 20404)")
        p.add_argument("--shots", type=int, default=None, help="shots per measurement setting")
        p.add_argument("--qsv-tests", type=int, default=None, help="verification tests per probe")
        p.add_argument("--noise-p", type=float, default=None, help="depolarizing noise strength")
        p.add_argument("--analytic", action="store_true", help="infinite-shot mode (no sampling)")
        p.add_argument("--out", type=str, default=None, help="output directory for CSV/JSON reports")
        p.add_argument("--config", type=str, default=None, help="JSON config file (flags override it)")

    p3 = sub.add_parser("fig3", help="verification fidelity and reduced purities for the four probes")
    add_common(p3)
    p3.set_defaults(func=_cmd_fig3)

    p4 = sub.add_parser("fig4", help="correlation decoding of a masked probe")
    add_common(p4)
    p4.add_argument("--probe", type=int, default=4, choices=(1, 2, 3, 4))
    p4.set_defaults(func=_cmd_fig4)

    p5 = sub.add_parser("fig5", help="concurrence of the masked phase probes")
    add_common(p5)
    p5.add_argument("--phi-grid", type=str, default=None,
                    help="comma-separated phases in degrees (default 0,15,...,90)")
    p5.set_defaults(func=_cmd_fig5)

    pe = sub.add_parser("equiv", help="masker / walk / optics equivalence check")
    add_common(pe)
    pe.add_argument("--n-inputs", type=int, default=100)
    pe.set_defaults(func=_cmd_equiv)

    pa = sub.add_parser("angles", help="waveplate angle solutions")
    pa.add_argument("--state", type=str, default=None,
                    help="four comma-separated real amplitudes (normalized automatically)")
    pa.add_argument("--phi", type=float, default=None, help="phase-probe phase in degrees")
    pa.add_argument("--setting", type=str, default=None, help="Pauli pair, e.g. XY")
    pa.add_argument("--basis", type=str, default=None,
                    help="raw product-basis parameters gamma,zeta,alpha,beta (radians)")
    pa.add_argument("--seed", type=int, default=0, help="seed for the angle solver restarts")
    pa.set_defaults(func=_cmd_angles)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
