"""Closed-loop simulation of the delayed reaction-diffusion equation.

``simulate`` integrates the modal equations

    x_n' = lambda_n x_n + c (x_n(t - h(t)) - x_n(t)) + b_n u(t) + <d(t), e_n>,
    u = K (x_1, ..., x_N0),

over ``n_modes`` modes. ``fd_oracle`` integrates a finite-difference
discretization of the PDE itself (Robin boundaries through ghost nodes) and
serves as an independent cross-check.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .control import ControllerDesign
from .dde import LinearDelaySystem, eval_vectorized, history_nodes, integrate
from .errors import DelayOutOfBounds, ValidationError
from .model import input_matrix
from .spectral import PlantParams, Spectrum, compute_spectrum, gauss_legendre, benchmark_params, \
    projection_matrix

QUAD_NODES = 256


# ------------------------------------------------------------ scenario pieces

@dataclass(frozen=True)
class Separable:
    """Field f(t, x) = time_fn(t) * shape_fn(x); projections are cached."""
    time_fn: Callable
    shape_fn: Callable
    time_deriv: Optional[Callable] = None

    def __call__(self, t, x):
        t = np.asarray(t, dtype=float)
        x = np.asarray(x, dtype=float)
        return eval_vectorized(self.time_fn, t) * np.asarray(self.shape_fn(x), dtype=float)

    def scaled(self, factor: float) -> "Separable":
        tf, td = self.time_fn, self.time_deriv
        return Separable(lambda t: factor * eval_vectorized(tf, np.asarray(t, dtype=float)),
                         self.shape_fn,
                         None if td is None else
                         (lambda t: factor * eval_vectorized(td, np.asarray(t, dtype=float))))


@dataclass(frozen=True)
class SinusoidalDelay:
    mean: float = 2.0
    amplitude: float = 1.5
    omega: float = 1.0
    phase: float = 0.0

    def __call__(self, t):
        return self.mean + self.amplitude * np.sin(self.omega * np.asarray(t, dtype=float)
                                                    + self.phase)

    @property
    def bounds(self):
        return self.mean - abs(self.amplitude), self.mean + abs(self.amplitude)


@dataclass(frozen=True)
class PulsedDisturbance:
    """Time profile d0(t): silent, then a Gaussian pulse, then a persistent signal.

    d0 = 0 for t < on; pulse_amplitude * exp(-(t - pulse_center)^2 / pulse_width)
    for on <= t < off; offset + amplitude * sin(freq t) for t >= off.
    """
    on: float = 8.0
    off: float = 20.0
    pulse_amplitude: float = 5.0
    pulse_center: float = 10.0
    pulse_width: float = 0.5
    offset: float = 1.0
    amplitude: float = 0.5
    freq: float = 3.0

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        pulse = self.pulse_amplitude * np.exp(-(t - self.pulse_center) ** 2 / self.pulse_width)
        late = self.offset + self.amplitude * np.sin(self.freq * t)
        return np.where(t < self.on, 0.0, np.where(t < self.off, pulse, late))


def benchmark_history_shape(x):
    x = np.asarray(x, dtype=float)
    return (1 - 2 * x) / 2 + 20 * x * (1 - x) * (x - 0.6)


def benchmark_history() -> Separable:
    return Separable(lambda t: (1 - np.asarray(t, dtype=float)) ** 2, benchmark_history_shape,
                     lambda t: -2 * (1 - np.asarray(t, dtype=float)))


def disturbance_shape(x):
    return 1 - np.asarray(x, dtype=float)


def benchmark_disturbance(profile: PulsedDisturbance | None = None) -> Separable:
    return Separable(PulsedDisturbance() if profile is None else profile, disturbance_shape)


@dataclass
class Scenario:
    params: PlantParams
    design: ControllerDesign
    delay_fn: Callable = field(default_factory=SinusoidalDelay)
    history_fn: Callable = field(default_factory=benchmark_history)
    disturbance_fn: Optional[Callable] = None
    n_modes: int = 30
    horizon: float = 40.0
    dt: float = 1e-3
    spectrum: Optional[Spectrum] = None

    def validate(self):
        if self.dt <= 0:
            raise ValidationError(f"dt: must be > 0, got {self.dt}")
        if self.horizon < self.dt:
            raise ValidationError(f"horizon: must be >= dt, got {self.horizon}")
        if self.n_modes < self.design.N0:
            raise ValidationError(f"n_modes={self.n_modes} is below N0={self.design.N0}")
        if self.dt >= self.params.h_m:
            raise ValidationError("dt must be smaller than the minimal delay h_m")
        # Range of h checked on a dense sample; the integrator rechecks every stage.
        ts = np.linspace(0.0, self.horizon, 10001)
        check_delay(eval_vectorized(self.delay_fn, ts), self.params)

    @property
    def n_steps(self) -> int:
        return int(math.ceil(self.horizon / self.dt - 1e-9))

    def get_spectrum(self) -> Spectrum:
        if self.spectrum is not None and self.spectrum.params == self.params:
            return self.spectrum.ensure(max(self.n_modes, self.design.N0 + 1))
        return compute_spectrum(self.params, max(self.n_modes, self.design.N0 + 1))

    def with_(self, **kw) -> "Scenario":
        d = {k: getattr(self, k) for k in self.__dataclass_fields__}
        d.update(kw)
        return Scenario(**d)


def rk4_substeps(system: LinearDelaySystem, ds: float, safety: float = 2.5) -> int:
    """RK4 steps per storage interval keeping dt * spectral radius below ``safety``."""
    rho = np.abs(np.linalg.eigvals(system.matrix())).max() + abs(system.c)
    return max(1, int(math.ceil(ds * rho / safety)))


def check_delay(h: np.ndarray, params: PlantParams):
    tol = 1e-12 * params.h_M
    lo, hi = float(np.min(h)), float(np.max(h))
    if lo < params.h_m - tol or hi > params.h_M + tol:
        raise DelayOutOfBounds(
            f"h(t) ranges over [{lo:.6g}, {hi:.6g}], outside [h_m, h_M] = "
            f"[{params.h_m:.6g}, {params.h_M:.6g}]")


def paper_scenario(design: ControllerDesign | None = None, actuation="both",
                   disturbance: bool = True) -> Scenario:
    """Reaction-diffusion benchmark with h(t) = 2 + 1.5 sin t, 30 modes, T = 40 s.

    Without ``design`` the two-pole design mu = (-3.5, -4) on N0 = 2 modes
    is synthesized for the requested actuation.
    """
    from .control import synthesize
    from .model import build_model

    params = benchmark_params()
    spectrum = compute_spectrum(params, 30)
    if design is None:
        design = synthesize(build_model(spectrum, params, 2, actuation), [-3.5, -4.0])
    return Scenario(params, design, SinusoidalDelay(2.0, 1.5), benchmark_history(),
                    benchmark_disturbance() if disturbance else None,
                    n_modes=30, horizon=40.0, dt=1e-3, spectrum=spectrum)


# ----------------------------------------------------------------- trajectory

@dataclass
class Trajectory:
    times: np.ndarray
    modal_states: np.ndarray      # (n_t, n_modes)
    inputs: np.ndarray            # (n_t, 2)
    state_norm: np.ndarray
    delay_trace: np.ndarray
    disturbance_norm: np.ndarray
    history_sup_norm: float
    K: np.ndarray
    N0: int

    def to_csv(self, path, stride: int = 1):
        n = self.modal_states.shape[1]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "h", "u1", "u2", "norm"] + [f"x{i + 1}" for i in range(n)])
            for k in range(0, len(self.times), stride):
                row = [self.times[k], self.delay_trace[k], *self.inputs[k],
                       self.state_norm[k], *self.modal_states[k]]
                w.writerow([_fmt(v) for v in row])

    def field_to_csv(self, path, spectrum: Spectrum, x_grid, stride: int = 1):
        idx = np.arange(0, len(self.times), stride)
        y = reconstruct(self, spectrum, x_grid, idx)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "x", "y"])
            for a, k in enumerate(idx):
                for j, xv in enumerate(x_grid):
                    w.writerow([_fmt(self.times[k]), _fmt(xv), _fmt(y[a, j])])


def _fmt(v) -> str:
    return f"{float(v):.12g}"


def _project_history(history_fn, nodes, P, xq, dt):
    if isinstance(history_fn, Separable):
        coef = P @ np.asarray(history_fn.shape_fn(xq), dtype=float)
        tv = eval_vectorized(history_fn.time_fn, nodes)
        vals = tv[:, None] * coef[None, :]
        if history_fn.time_deriv is not None:
            derivs = eval_vectorized(history_fn.time_deriv, nodes)[:, None] * coef[None, :]
            return vals, derivs
    else:
        vals = _sample_field(history_fn, nodes, xq) @ P.T
    order = 2 if len(nodes) >= 3 else 1
    return vals, np.gradient(vals, dt, axis=0, edge_order=order)


def _sample_field(fn, t, x, chunk: int = 4096):
    """``fn(t_i, x_j)`` as an array of shape (len(t), len(x))."""
    t = np.asarray(t, dtype=float).ravel()
    out = np.empty((len(t), len(x)))
    for s in range(0, len(t), chunk):
        tc = t[s:s + chunk]
        try:
            block = np.broadcast_to(np.asarray(fn(tc[:, None], x[None, :]), dtype=float),
                                    (len(tc), len(x)))
        except (TypeError, ValueError):
            block = np.array([np.broadcast_to(np.asarray(fn(float(ti), x), dtype=float), x.shape)
                              for ti in tc])
        out[s:s + chunk] = block
    return out


def _history_sup_norm(history_fn, nodes, params, xq, wq):
    nodes = np.maximum(nodes, -params.h_M)
    vals = _sample_field(history_fn, nodes, xq)
    return float(np.sqrt((vals ** 2) @ wq).max())


def _disturbance_norm(dist, times, xq, wq):
    if dist is None:
        return np.zeros_like(times)
    if isinstance(dist, Separable):
        g = float(np.sqrt(wq @ np.asarray(dist.shape_fn(xq), dtype=float) ** 2))
        return np.abs(eval_vectorized(dist.time_fn, times)) * g
    return np.sqrt((_sample_field(dist, times, xq) ** 2) @ wq)


def simulate(scenario: Scenario) -> Trajectory:
    scenario.validate()
    params, design = scenario.params, scenario.design
    n, N0, dt = scenario.n_modes, design.N0, scenario.dt
    spectrum = scenario.get_spectrum()
    lam = spectrum.lam[:n]
    B = input_matrix(spectrum, n)
    K = np.asarray(design.K, dtype=float)
    Vt = np.zeros((2, n))
    Vt[:, :N0] = K
    system = LinearDelaySystem.diagonal(lam - params.c, params.c, U=B, Vt=Vt)

    xq, P = projection_matrix(spectrum, n, QUAD_NODES)
    _, wq = gauss_legendre(QUAD_NODES)
    nodes = history_nodes(params.h_M, dt)
    hist, hist_d = _project_history(scenario.history_fn, nodes, P, xq, dt)

    dist = scenario.disturbance_fn
    if dist is None:
        coef_fn, basis = None, None
    elif isinstance(dist, Separable):
        basis = (P @ np.asarray(dist.shape_fn(xq), dtype=float))[None, :]
        coef_fn = lambda t: eval_vectorized(dist.time_fn, t)[..., None]  # noqa: E731
    else:
        basis = np.eye(n)
        coef_fn = lambda t: (_sample_field(dist, t.ravel(), xq) @ P.T).reshape(t.shape + (n,))  # noqa: E731

    delay = scenario.delay_fn

    def checked_delay(t):
        h = eval_vectorized(delay, t)
        check_delay(h, params)
        return h

    sol = integrate(system, hist, hist_d, checked_delay, dt, scenario.n_steps,
                    rk4_substeps(system, dt), forcing_coef=coef_fn, forcing_basis=basis)
    states = sol.states
    inputs = states[:, :N0] @ K.T
    return Trajectory(
        times=sol.times,
        modal_states=states,
        inputs=inputs,
        state_norm=np.sqrt(np.sum(states ** 2, axis=1)),
        delay_trace=eval_vectorized(delay, sol.times),
        disturbance_norm=_disturbance_norm(dist, sol.times, xq, wq),
        history_sup_norm=_history_sup_norm(scenario.history_fn, nodes, params, xq, wq),
        K=K, N0=N0)


def reconstruct(trajectory: Trajectory, spectrum: Spectrum, x_grid, time_index=None):
    """Field y(t, x) as the partial modal sum, shape (n_t, len(x_grid))."""
    x_grid = np.asarray(x_grid, dtype=float)
    if np.any((x_grid < 0) | (x_grid > 1)):
        raise ValidationError("x_grid must lie in [0, 1]")
    states = trajectory.modal_states if time_index is None else \
        trajectory.modal_states[np.asarray(time_index)]
    n = states.shape[1]
    return states @ spectrum.ensure(n).basis(x_grid, n)


# ------------------------------------------------------------ finite differences

@dataclass
class FieldTrajectory:
    times: np.ndarray
    x: np.ndarray
    field: np.ndarray        # (n_t, M + 1)
    inputs: np.ndarray
    state_norm: np.ndarray
    delay_trace: np.ndarray
    substeps: int


def trapezoid_weights(M: int) -> np.ndarray:
    w = np.full(M + 1, 1.0 / M)
    w[[0, -1]] *= 0.5
    return w


def fd_system(params: PlantParams, M: int, K=None, spectrum: Spectrum | None = None,
              N0: int = 0) -> LinearDelaySystem:
    """Second-order central differences with ghost-node Robin boundaries."""
    if M < 2:
        raise ValidationError("M must be >= 2")
    a, b = params.a, params.b
    dx = 1.0 / M
    s1, s2 = math.sin(params.theta1), math.sin(params.theta2)
    diag = np.full(M + 1, -2 * a / dx ** 2 + b)
    lower = np.full(M, a / dx ** 2)
    upper = np.full(M, a / dx ** 2)
    upper[0] = 2 * a / dx ** 2
    lower[-1] = 2 * a / dx ** 2
    diag[0] -= 2 * a * math.cos(params.theta1) / (dx * s1)
    diag[-1] -= 2 * a * math.cos(params.theta2) / (dx * s2)
    if K is None or N0 == 0:
        U = np.zeros((M + 1, 0))
        Vt = np.zeros((0, M + 1))
    else:
        U = np.zeros((M + 1, 2))
        U[0, 0] = 2 * a / (dx * s1)
        U[-1, 1] = 2 * a / (dx * s2)
        x = np.linspace(0.0, 1.0, M + 1)
        W = spectrum.ensure(N0).basis(x, N0) * trapezoid_weights(M)[None, :]
        Vt = np.asarray(K, dtype=float) @ W
    return LinearDelaySystem(lower, diag, upper, U, Vt, params.c)


def fd_oracle(scenario: Scenario, M: int = 256, store_dt: float | None = None,
              safety: float = 2.5) -> FieldTrajectory:
    """Finite-difference solution of the closed loop on M + 1 nodes.

    The storage step defaults to the scenario dt; RK4 substeps are chosen from
    the spectral radius of the semi-discrete operator.
    """
    scenario.validate()
    if M < 64:
        raise ValidationError(f"M must be >= 64, got {M}")
    params, design = scenario.params, scenario.design
    spectrum = scenario.get_spectrum()
    K = np.asarray(design.K, dtype=float)
    system = fd_system(params, M, K, spectrum, design.N0)
    ds = scenario.dt if store_dt is None else store_dt
    substeps = rk4_substeps(system, ds, safety)
    n_store = int(math.ceil(scenario.horizon / ds - 1e-9))

    x = np.linspace(0.0, 1.0, M + 1)
    nodes = history_nodes(params.h_M, ds)
    hist_fn = scenario.history_fn
    hist = _sample_field(hist_fn, nodes, x)
    if isinstance(hist_fn, Separable) and hist_fn.time_deriv is not None:
        hist_d = eval_vectorized(hist_fn.time_deriv, nodes)[:, None] * \
            np.asarray(hist_fn.shape_fn(x), dtype=float)[None, :]
    else:
        hist_d = np.gradient(hist, ds, axis=0, edge_order=2 if len(nodes) >= 3 else 1)

    dist = scenario.disturbance_fn
    if dist is None:
        coef_fn, basis = None, None
    elif isinstance(dist, Separable):
        basis = np.asarray(dist.shape_fn(x), dtype=float)[None, :]
        coef_fn = lambda t: eval_vectorized(dist.time_fn, t)[..., None]  # noqa: E731
    else:
        raise ValidationError("fd_oracle supports only separable disturbances")

    def checked_delay(t):
        h = eval_vectorized(scenario.delay_fn, t)
        check_delay(h, params)
        return h

    sol = integrate(system, hist, hist_d, checked_delay, ds, n_store, substeps,
                    forcing_coef=coef_fn, forcing_basis=basis)
    w = trapezoid_weights(M)
    W = spectrum.ensure(design.N0).basis(x, design.N0) * w[None, :]
    inputs = sol.states @ W.T @ K.T
    return FieldTrajectory(sol.times, x, sol.states, inputs,
                           np.sqrt((sol.states ** 2) @ w),
                           eval_vectorized(scenario.delay_fn, sol.times), substeps)
