"""Turn a ``RunConfig`` into designs, scenarios and randomized-delay batches."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import RunConfig, build_delay, build_disturbance, build_history
from .control import ControllerDesign, design_for_decay_rate, synthesize
from .iss import IssFit, verify_iss
from .model import build_model, select_mode_count
from .sim import Scenario, SinusoidalDelay, Trajectory, simulate
from .spectral import Spectrum, compute_spectrum

DEFAULT_SLOWEST_POLE = -3.5
DEFAULT_POLE_SPACING = 0.5


def default_poles(n0: int) -> np.ndarray:
    """-3.5, -4.0, ... : one real pole per controlled mode."""
    return DEFAULT_SLOWEST_POLE - DEFAULT_POLE_SPACING * np.arange(n0)


def make_design(cfg: RunConfig, spectrum: Spectrum | None = None):
    """``(model_dict, design)`` for the design section of ``cfg``."""
    params, d = cfg.plant, cfg.design
    spectrum = compute_spectrum(params, max(cfg.simulation.modes, 3)) if spectrum is None \
        else spectrum
    if d.kappa is not None:
        n0, _, design = design_for_decay_rate(params, spectrum, d.kappa, actuation=d.actuation)
        model = build_model(spectrum, params, n0, d.actuation)
        return model, design
    n0 = d.N0 if d.N0 is not None else select_mode_count(spectrum, params.c)
    model = build_model(spectrum, params, n0, d.actuation)
    mu = default_poles(n0) if d.poles is None else np.array(d.poles, dtype=complex)
    return model, synthesize(model, mu)


def make_scenario(cfg: RunConfig, design: ControllerDesign, spectrum: Spectrum | None = None,
                  delay=None) -> Scenario:
    sim = cfg.simulation
    return Scenario(cfg.plant, design,
                    build_delay(cfg.scenario.delay) if delay is None else delay,
                    build_history(cfg.scenario.history),
                    build_disturbance(cfg.scenario.disturbance),
                    n_modes=sim.modes, horizon=sim.horizon, dt=sim.dt, spectrum=spectrum)


def random_delays(rng: np.random.Generator, count: int, mean: float = 2.0,
                  amplitude_max: float = 1.5, omega_range=(0.5, 2.0)):
    """h(t) = mean + A sin(omega t + psi), A, omega, psi uniform."""
    out = []
    for _ in range(count):
        out.append(SinusoidalDelay(mean, float(rng.uniform(0.0, amplitude_max)),
                                   float(rng.uniform(*omega_range)),
                                   float(rng.uniform(0.0, 2 * math.pi))))
    return out


@dataclass
class SweepResult:
    fit: IssFit
    batch: list
    holdout: list
    holdout_violations: list

    @property
    def holdout_ok(self) -> bool:
        return all(v <= 0 for v in self.holdout_violations)

    def to_dict(self) -> dict:
        return {**self.fit.to_dict(), "runs": len(self.batch), "holdout": len(self.holdout),
                "holdout_violations": self.holdout_violations,
                "holdout_ok": self.holdout_ok}


def run_sweep(base: Scenario, runs: int, holdout: int, seed: int, kappa: float | None = None,
              amplitude_max: float = 1.5, omega_range=(0.5, 2.0)) -> SweepResult:
    """Fit one (C0, C1) on ``runs`` random delays and test it on ``holdout`` more.

    ``kappa`` defaults to the certified rate of the design.
    """
    rng = np.random.default_rng(seed)
    mean = float(base.delay_fn.mean) if isinstance(base.delay_fn, SinusoidalDelay) else 2.0
    delays = random_delays(rng, runs + holdout, mean, amplitude_max, omega_range)
    trajs: list[Trajectory] = [simulate(base.with_(delay_fn=h)) for h in delays]
    batch, held = trajs[:runs], trajs[runs:]
    fit = verify_iss(batch, base.design.kappa if kappa is None else kappa)
    return SweepResult(fit, batch, held, [fit.violation(t) for t in held])
