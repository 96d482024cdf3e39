"""Command line interface: ``robinstab <command> [options]``.

Exit codes: 0 success, 1 invalid input or configuration, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .config import RunConfig, load_config
from .errors import ConfigError, NumericalError, ValidationError
from .experiments import make_design, make_scenario, run_sweep
from .model import Actuation
from .sim import reconstruct, simulate
from .spectral import compute_spectrum

log = logging.getLogger("robinstab")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(f"{self.prog}: {message}")


def _common(p):
    p.add_argument("--config", type=Path, help="JSON run configuration")
    p.add_argument("--out", type=Path, help="output directory")
    p.add_argument("--seed", type=int, help="sweep seed")
    p.add_argument("--modes", type=int, help="number of simulated modes")
    p.add_argument("--dt", type=float, help="time step [s]")
    p.add_argument("--horizon", type=float, help="simulated time [s]")
    p.add_argument("--actuation", choices=[a.value for a in Actuation])
    p.add_argument("--kappa", type=float, help="target decay rate; designs poles for it")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="robinstab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, help_ in [
        ("spectrum", "eigenvalues and eigenfunction norms"),
        ("design", "truncated model, gain and rate certificates as JSON"),
        ("simulate", "closed-loop run; writes trajectory and field CSVs"),
        ("verify-iss", "randomized-delay batch fit of the fading-memory ISS bound"),
        ("reproduce-paper", "benchmark pipeline: eigenvalues, two runs, CSVs and SVGs"),
    ]:
        _common(sub.add_parser(name, help=help_))
    return parser


def resolve_config(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    overrides = {
        ("simulation", "modes"): args.modes,
        ("simulation", "dt"): args.dt,
        ("simulation", "horizon"): args.horizon,
        ("sweep", "seed"): args.seed,
        ("design", "actuation"): args.actuation,
        ("design", "kappa"): args.kappa,
        ("output", "dir"): None if args.out is None else str(args.out),
    }
    for (section, key), value in overrides.items():
        if value is not None:
            cfg = cfg.replace(section, **{key: value})
    sim = cfg.simulation
    if sim.modes < 1:
        raise ConfigError(f"--modes: must be >= 1, got {sim.modes}")
    if not sim.dt > 0 or not sim.horizon > 0:
        raise ConfigError("--dt and --horizon must be > 0")
    if cfg.design.kappa is not None and not cfg.design.kappa > 0:
        raise ConfigError(f"--kappa: must be > 0, got {cfg.design.kappa}")
    if cfg.sweep.seed < 0:
        raise ConfigError(f"--seed: must be >= 0, got {cfg.sweep.seed}")
    return cfg


def _out_dir(cfg: RunConfig, required: bool) -> Path | None:
    if cfg.output.dir is None and not required:
        return None
    path = Path(cfg.output.dir or "out")
    path.mkdir(parents=True, exist_ok=True)
    return path


def _dump(obj, path: Path | None = None):
    text = json.dumps(obj, indent=2)
    if path is not None:
        path.write_text(text + "\n")
    return text


def _write_spectrum_csv(spectrum, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["n", "r", "lambda", "norm_phi"])
        for p in spectrum.pairs:
            w.writerow([p.n, f"{p.r:.12g}", f"{p.lam:.12g}", f"{p.norm_phi:.12g}"])


# ------------------------------------------------------------------ commands

def cmd_spectrum(cfg: RunConfig, explicit_modes: bool) -> dict:
    count = cfg.simulation.modes if explicit_modes else 10
    spectrum = compute_spectrum(cfg.plant, count)
    out = _out_dir(cfg, False)
    if out is not None:
        _write_spectrum_csv(spectrum, out / "spectrum.csv")
    return {"params": cfg.plant.to_dict(), "pairs": [p.to_dict() for p in spectrum.pairs]}


def cmd_design(cfg: RunConfig) -> dict:
    model, design = make_design(cfg)
    report = {**design.to_dict(), "model": model.to_dict()}
    out = _out_dir(cfg, False)
    if out is not None:
        _dump(report, out / "design.json")
    return report


def _field_grid(cfg):
    return np.linspace(0.0, 1.0, cfg.output.field_points)


def cmd_simulate(cfg: RunConfig) -> dict:
    spectrum = compute_spectrum(cfg.plant, max(cfg.simulation.modes, 3))
    _, design = make_design(cfg, spectrum)
    scenario = make_scenario(cfg, design, spectrum)
    traj = simulate(scenario)
    out = _out_dir(cfg, True)
    stride = cfg.simulation.stride
    traj.to_csv(out / "trajectory.csv", stride)
    traj.field_to_csv(out / "field.csv", scenario.get_spectrum(), _field_grid(cfg), stride)
    summary = {"design": design.to_dict(), "final_norm": float(traj.state_norm[-1]),
               "max_norm": float(traj.state_norm.max()),
               "history_sup_norm": traj.history_sup_norm,
               "files": ["trajectory.csv", "field.csv"]}
    _dump(summary, out / "summary.json")
    return summary


def cmd_verify_iss(cfg: RunConfig) -> tuple[dict, int]:
    spectrum = compute_spectrum(cfg.plant, max(cfg.simulation.modes, 3))
    _, design = make_design(cfg, spectrum)
    base = make_scenario(cfg, design, spectrum)
    sw = cfg.sweep
    result = run_sweep(base, sw.runs, sw.holdout, sw.seed, None, sw.amplitude_max,
                       (sw.omega_min, sw.omega_max))
    report = {**result.to_dict(), "seed": sw.seed, "design": design.to_dict()}
    out = _out_dir(cfg, False)
    if out is not None:
        _dump(report, out / "iss.json")
    return report, 0 if result.holdout_ok else 2


def cmd_reproduce(cfg: RunConfig) -> dict:
    from .report import plot_field, plot_norm_and_inputs

    out = _out_dir(cfg, True)
    spectrum = compute_spectrum(cfg.plant, max(cfg.simulation.modes, 3))
    _write_spectrum_csv(spectrum.ensure(10) if len(spectrum) < 10 else spectrum,
                        out / "eigenvalues.csv")
    table = [{"n": p.n, "lambda": p.lam} for p in spectrum.pairs[:3]]
    for row in table:
        print(f"lambda_{row['n']} = {row['lambda']:.4f}")

    grid = _field_grid(cfg)
    stride = cfg.simulation.stride
    trajs, designs = {}, {}
    for act in (Actuation.BOTH, Actuation.LEFT):
        c = cfg.replace("design", actuation=act.value)
        model, design = make_design(c, spectrum)
        scenario = make_scenario(c, design, spectrum)
        traj = simulate(scenario)
        tag = "two_input" if act is Actuation.BOTH else "single_input"
        traj.to_csv(out / f"trajectory_{tag}.csv", stride)
        traj.field_to_csv(out / f"field_{tag}.csv", scenario.get_spectrum(), grid, stride)
        _dump({**design.to_dict(), "model": model.to_dict()}, out / f"design_{tag}.json")
        idx = np.arange(0, len(traj.times), max(stride, len(traj.times) // 400))
        plot_field(traj.times[idx], grid, reconstruct(traj, scenario.get_spectrum(), grid, idx),
                   out / f"field_{tag}.svg", title=f"y(t, x), {tag.replace('_', ' ')}")
        label = "u1, u2" if act is Actuation.BOTH else "u1 only"
        trajs[label] = traj
        designs[tag] = design.to_dict()
    plot_norm_and_inputs(trajs, out / "norm_inputs.svg")
    summary = {"eigenvalues": table, "N0": designs["two_input"]["N0"], "designs": designs}
    _dump(summary, out / "summary.json")
    return summary


def run_cli(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(message)s")
        cfg = resolve_config(args)
        code = 0
        if args.command == "spectrum":
            result = cmd_spectrum(cfg, args.modes is not None)
        elif args.command == "design":
            result = cmd_design(cfg)
        elif args.command == "simulate":
            result = cmd_simulate(cfg)
        elif args.command == "verify-iss":
            result, code = cmd_verify_iss(cfg)
        else:
            result = cmd_reproduce(cfg)
        print(_dump(result))
        return code
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main():
    sys.exit(run_cli())
