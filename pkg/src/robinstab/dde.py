"""Fixed-step RK4 for linear delay systems with a dense cubic Hermite history.

The systems handled here have the form

    x'(t) = T x + U (Vt x) + c x(t - h(t)) + coef(t) @ G

with ``T`` tridiagonal and ``U @ Vt`` low rank. The modal closed loop
(diagonal T, U = B, Vt = K P) and the finite-difference semi-discretization
(Laplacian T, boundary coupling U, projection Vt) both fit.

The solution is stored on a uniform grid of spacing ``ds``; each storage
interval is split into ``substeps`` RK4 steps. Node values and node
derivatives feed the Hermite interpolant used for every delayed lookup.
At t = 0 separate left/right derivatives are kept, so a history whose slope
does not match the dynamics does not pollute the interpolant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .errors import DelayOutOfBounds, NonFiniteState

GUARD = 1e12


@dataclass
class LinearDelaySystem:
    lower: np.ndarray
    diag: np.ndarray
    upper: np.ndarray
    U: np.ndarray
    Vt: np.ndarray
    c: float

    @classmethod
    def diagonal(cls, diag, c, U=None, Vt=None):
        diag = np.asarray(diag, dtype=float)
        n = len(diag)
        U = np.zeros((n, 0)) if U is None else np.asarray(U, dtype=float)
        Vt = np.zeros((U.shape[1], n)) if Vt is None else np.asarray(Vt, dtype=float)
        return cls(np.zeros(max(n - 1, 0)), diag, np.zeros(max(n - 1, 0)), U, Vt, float(c))

    @property
    def size(self) -> int:
        return len(self.diag)

    def matrix(self) -> np.ndarray:
        """Dense x -> T x + U Vt x (for eigen-analysis)."""
        n = self.size
        T = np.diag(self.diag)
        if n > 1:
            T += np.diag(self.lower, -1) + np.diag(self.upper, 1)
        return T + self.U @ self.Vt


def stage_times(ds: float, substeps: int, n_store: int) -> np.ndarray:
    """``(n_steps, 3)`` times t, t + dt/2, t + dt of every RK4 step."""
    dt = ds / substeps
    t = np.arange(n_store * substeps) * dt
    return np.stack([t, t + 0.5 * dt, t + dt], axis=1)


def eval_vectorized(fn, t: np.ndarray) -> np.ndarray:
    """Evaluate a scalar function of time on an array, with a loop fallback."""
    try:
        out = np.asarray(fn(t), dtype=float)
        if out.shape == t.shape:
            return out
        if out.ndim == 0:
            return np.full(t.shape, float(out))
    except (TypeError, ValueError):
        pass
    flat = np.array([float(fn(float(s))) for s in t.ravel()])
    return flat.reshape(t.shape)


@njit(cache=True)
def _apply(lower, diag, upper, U, Vt, x, out):
    n = x.shape[0]
    for i in range(n):
        out[i] = diag[i] * x[i]
    for i in range(n - 1):
        out[i] += upper[i] * x[i + 1]
        out[i + 1] += lower[i] * x[i]
    q = U.shape[1]
    for k in range(q):
        s = 0.0
        for j in range(n):
            s += Vt[k, j] * x[j]
        for i in range(n):
            out[i] += U[i, k] * s


@njit(cache=True)
def _hermite(X, DXL, DXR, j, th, ds, out):
    th2 = th * th
    th3 = th2 * th
    h00 = 2 * th3 - 3 * th2 + 1
    h10 = th3 - 2 * th2 + th
    h01 = -2 * th3 + 3 * th2
    h11 = th3 - th2
    for i in range(out.shape[0]):
        out[i] = (h00 * X[j, i] + h10 * ds * DXR[j, i]
                  + h01 * X[j + 1, i] + h11 * ds * DXL[j + 1, i])


@njit(cache=True)
def _rhs(lower, diag, upper, U, Vt, c, G, coef_row, x, xd, out):
    _apply(lower, diag, upper, U, Vt, x, out)
    n = x.shape[0]
    for i in range(n):
        out[i] += c * xd[i]
    for k in range(G.shape[0]):
        w = coef_row[k]
        if w != 0.0:
            for i in range(n):
                out[i] += w * G[k, i]


@njit(cache=True)
def _rk4_kernel(lower, diag, upper, U, Vt, c, G, coef, coef_end, jidx, theta, j_end,
                th_end, X, DXL, DXR, J, substeps, n_store, ds, guard):
    n = diag.shape[0]
    dt = ds / substeps
    x = X[J].copy()
    xs = np.empty(n)
    xd = np.empty(n)
    k1 = np.empty(n)
    k2 = np.empty(n)
    k3 = np.empty(n)
    k4 = np.empty(n)
    for k in range(n_store):
        for sub in range(substeps):
            i = k * substeps + sub
            _hermite(X, DXL, DXR, jidx[i, 0], theta[i, 0], ds, xd)
            _rhs(lower, diag, upper, U, Vt, c, G, coef[i, 0], x, xd, k1)
            if sub == 0:
                for m in range(n):
                    DXR[J + k, m] = k1[m]
                    if k > 0:
                        DXL[J + k, m] = k1[m]
            _hermite(X, DXL, DXR, jidx[i, 1], theta[i, 1], ds, xd)
            for m in range(n):
                xs[m] = x[m] + 0.5 * dt * k1[m]
            _rhs(lower, diag, upper, U, Vt, c, G, coef[i, 1], xs, xd, k2)
            for m in range(n):
                xs[m] = x[m] + 0.5 * dt * k2[m]
            _rhs(lower, diag, upper, U, Vt, c, G, coef[i, 1], xs, xd, k3)
            _hermite(X, DXL, DXR, jidx[i, 2], theta[i, 2], ds, xd)
            for m in range(n):
                xs[m] = x[m] + dt * k3[m]
            _rhs(lower, diag, upper, U, Vt, c, G, coef[i, 2], xs, xd, k4)
            for m in range(n):
                x[m] += dt / 6.0 * (k1[m] + 2.0 * k2[m] + 2.0 * k3[m] + k4[m])
        bad = False
        for m in range(n):
            v = x[m]
            if not (abs(v) <= guard):
                bad = True
        for m in range(n):
            X[J + k + 1, m] = x[m]
        if bad:
            return k + 1
    _hermite(X, DXL, DXR, j_end, th_end, ds, xd)
    _rhs(lower, diag, upper, U, Vt, c, G, coef_end, x, xd, k1)
    for m in range(n):
        DXL[J + n_store, m] = k1[m]
        DXR[J + n_store, m] = k1[m]
    return -1


@dataclass
class DelaySolution:
    times: np.ndarray     # storage nodes 0, ds, ..., n_store * ds
    states: np.ndarray    # (n_nodes, n)
    derivs: np.ndarray    # (n_nodes, n), right derivative at t = 0
    delayed_times: np.ndarray  # (n_steps, 3) t - h(t) at every RK4 stage


def integrate(system: LinearDelaySystem, history: np.ndarray, history_deriv: np.ndarray,
              delay, ds: float, n_store: int, substeps: int = 1,
              forcing_coef=None, forcing_basis=None, guard: float = GUARD) -> DelaySolution:
    """Integrate on [0, n_store * ds].

    ``history``/``history_deriv`` hold the state and its time derivative on the
    nodes -J ds, ..., -ds, 0 (J + 1 rows) and must cover the largest delay.
    ``delay`` maps a time array to h(t). ``forcing_coef`` is a function of a
    time array returning ``(..., r)`` weights of the rows of
    ``forcing_basis`` (r x n).
    """
    n = system.size
    history = np.ascontiguousarray(history, dtype=float).reshape(-1, n)
    history_deriv = np.ascontiguousarray(history_deriv, dtype=float).reshape(-1, n)
    J = history.shape[0] - 1
    t_first = -J * ds
    ts = stage_times(ds, substeps, n_store)
    t_end = n_store * ds
    h = eval_vectorized(delay, ts)
    h_end = float(eval_vectorized(delay, np.array([t_end]))[0])
    s = ts - h
    s_end = t_end - h_end

    tol = 1e-12 * max(1.0, abs(t_first))
    if s.min(initial=s_end) < t_first - tol or s_end < t_first - tol:
        raise DelayOutOfBounds(f"delayed time {min(s.min(), s_end):.6g} precedes the "
                               f"stored history starting at {t_first:.6g}")

    def locate(sv):
        pos = (sv - t_first) / ds
        j = np.maximum(np.ceil(pos) - 1, 0).astype(np.int64)
        th = np.clip(pos - j, 0.0, 1.0)
        return j, th

    jidx, theta = locate(s)
    j_end, th_end = locate(np.array([s_end]))
    # Causality: every lookup must use nodes stored before the step begins.
    step_node = J + np.arange(n_store * substeps) // substeps
    if np.any(jidx.max(axis=1) + 1 > step_node):
        i = int(np.argmax(jidx.max(axis=1) + 1 > step_node))
        raise DelayOutOfBounds(
            f"delayed time {s[i].max():.6g} at t={ts[i, 0]:.6g} is not yet stored; "
            "the minimal delay must exceed the storage step")

    if forcing_coef is None:
        G = np.zeros((0, n))
        coef = np.zeros(ts.shape + (0,))
        coef_end = np.zeros(0)
    else:
        G = np.ascontiguousarray(forcing_basis, dtype=float).reshape(-1, n)
        coef = np.ascontiguousarray(forcing_coef(ts), dtype=float).reshape(ts.shape + (G.shape[0],))
        coef_end = np.asarray(forcing_coef(np.array([t_end])), dtype=float).reshape(G.shape[0])

    total = J + n_store + 1
    X = np.zeros((total, n))
    DXL = np.zeros((total, n))
    DXR = np.zeros((total, n))
    X[:J + 1] = history
    DXL[:J + 1] = history_deriv
    DXR[:J + 1] = history_deriv

    status = _rk4_kernel(
        np.ascontiguousarray(system.lower, dtype=float), np.ascontiguousarray(system.diag, dtype=float),
        np.ascontiguousarray(system.upper, dtype=float), np.ascontiguousarray(system.U, dtype=float),
        np.ascontiguousarray(system.Vt, dtype=float), float(system.c), G, coef, coef_end,
        jidx, theta, int(j_end[0]), float(th_end[0]), X, DXL, DXR, J, int(substeps),
        int(n_store), float(ds), float(guard))
    if status >= 0:
        raise NonFiniteState(f"state exceeded {guard:g} at t={status * ds:.6g}")

    times = np.arange(n_store + 1) * ds
    derivs = DXR[J:].copy()
    return DelaySolution(times, X[J:].copy(), derivs, s)


def history_nodes(h_M: float, ds: float) -> np.ndarray:
    """Nodes -J ds, ..., 0 covering [-h_M, 0]."""
    J = int(math.ceil(h_M / ds - 1e-9))
    return -ds * np.arange(J, -1, -1)
