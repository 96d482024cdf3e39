"""Empirical checks of the exponential ISS estimate with fading memory.

For a trajectory with history sup-norm ``phi_sup`` and disturbance norm
``||d(t)||`` the bound under test is

    ||y(t)|| <= C0 * E0(t) + C1 * E1(t),
    E0(t) = exp(-kappa t) * phi_sup,
    E1(t) = sup_{s <= t} exp(-kappa (t - s)) ||d(s)||.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import linprog

from .errors import ValidationError, ZeroNorm


def fit_decay(trajectory, window, strict: bool = True) -> float:
    """Decay rate from a least-squares line through log ||y|| on ``window``.

    ``trajectory`` needs ``times`` and ``state_norm``. An underflowing norm
    raises ``ZeroNorm`` (or returns +inf when ``strict`` is False).
    """
    t = np.asarray(trajectory.times, dtype=float)
    y = np.asarray(trajectory.state_norm, dtype=float)
    t1, t2 = window
    sel = (t >= t1 - 1e-12) & (t <= t2 + 1e-12)
    if sel.sum() < 2:
        raise ValidationError(f"window {window} holds fewer than two samples")
    ys = y[sel]
    if np.any(ys <= np.finfo(float).tiny):
        if strict:
            raise ZeroNorm(f"state norm underflows inside {window}")
        return float("inf")
    slope = np.polyfit(t[sel], np.log(ys), 1)[0]
    return float(-slope)


def envelopes(trajectory, kappa: float):
    """``(E0, E1)`` sampled on the trajectory grid."""
    t = np.asarray(trajectory.times, dtype=float)
    dnorm = np.asarray(trajectory.disturbance_norm, dtype=float)
    e0 = np.exp(-kappa * t) * float(trajectory.history_sup_norm)
    e1 = np.empty_like(t)
    decay = np.exp(-kappa * np.diff(t))
    m = dnorm[0]
    e1[0] = m
    for k in range(1, len(t)):
        m = max(decay[k - 1] * m, dnorm[k])
        e1[k] = m
    return e0, e1


@dataclass(frozen=True)
class IssFit:
    kappa_fit: float
    C0_fit: float
    C1_fit: float
    residual: float      # max of ||y|| - bound over the batch (<= 0 when it holds)
    u_residual: float    # same for ||u|| against ||K|| * bound
    K_norm: float

    def bound(self, trajectory) -> np.ndarray:
        e0, e1 = envelopes(trajectory, self.kappa_fit)
        return self.C0_fit * e0 + self.C1_fit * e1

    def violation(self, trajectory) -> float:
        """Largest excess of ||y|| over the fitted bound (<= 0 when it holds)."""
        return float(np.max(np.asarray(trajectory.state_norm) - self.bound(trajectory)))

    def to_dict(self) -> dict:
        return {"kappa": self.kappa_fit, "C0": self.C0_fit, "C1": self.C1_fit,
                "residual": self.residual, "u_residual": self.u_residual,
                "K_norm": self.K_norm}


def _pareto(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    # Constraints C0 a + C1 b >= 1; only points not dominated from below matter.
    order = np.lexsort((b, a))
    keep = []
    best_b = np.inf
    for i in order:
        if b[i] < best_b:
            keep.append(i)
            best_b = b[i]
    return np.array(keep, dtype=int)


def _min_constants(E0, E1, y):
    pos = y > 0
    if not pos.any():
        return 0.0, 0.0
    E0, E1, y = E0[pos], E1[pos], y[pos]
    if np.any((E0 <= 0) & (E1 <= 0)):
        raise ValidationError("nonzero state with zero history and zero disturbance")
    if E1.max() <= 0:
        return float(np.max(y / E0)), 0.0
    if E0.max() <= 0:
        return 0.0, float(np.max(y / E1))

    a, b = E0 / y, E1 / y
    idx = _pareto(a, b)
    w0, w1 = E0.max(), E1.max()
    res = linprog([w0, w1], A_ub=-np.column_stack([a[idx], b[idx]]), b_ub=-np.ones(len(idx)),
                  bounds=[(0, None), (0, None)], method="highs")
    c1 = float(res.x[1]) if res.status == 0 else float(np.max(y[E1 > 0] / E1[E1 > 0]))
    # Samples without history weight constrain C1 alone.
    only1 = E0 <= 0
    if only1.any():
        c1 = max(c1, float(np.max(y[only1] / E1[only1])))
    has0 = E0 > 0
    c0 = max(0.0, float(np.max((y[has0] - c1 * E1[has0]) / E0[has0]))) if has0.any() else 0.0
    return c0, c1


def verify_iss(batch: Sequence, kappa: float) -> IssFit:
    """Smallest (C0, C1) such that the fading-memory bound holds on every sample.

    The LP objective weighs C0 and C1 by the peak of their envelopes; C0 is
    then tightened exactly for the chosen C1. The input estimate is checked
    with the same constants scaled by the operator 2-norm of K.
    """
    if not batch:
        raise ValidationError("empty batch")
    if kappa <= 0:
        raise ValidationError("kappa must be > 0")
    E0s, E1s, ys = [], [], []
    K_norm = 0.0
    for traj in batch:
        e0, e1 = envelopes(traj, kappa)
        E0s.append(e0)
        E1s.append(e1)
        ys.append(np.asarray(traj.state_norm, dtype=float))
        K_norm = max(K_norm, float(np.linalg.norm(np.asarray(traj.K), 2)))
        unorm = np.linalg.norm(traj.inputs, axis=1)
        ynorm = np.linalg.norm(traj.modal_states[:, :traj.N0], axis=1)
        if np.any(unorm > np.linalg.norm(np.asarray(traj.K), 2) * ynorm * (1 + 1e-12) + 1e-300):
            raise ValidationError("||u|| exceeds ||K|| ||Y||; inputs inconsistent with K")
    E0, E1, y = np.concatenate(E0s), np.concatenate(E1s), np.concatenate(ys)
    c0, c1 = _min_constants(E0, E1, y)
    bound = c0 * E0 + c1 * E1
    residual = float(np.max(y - bound))
    unorm = np.concatenate([np.linalg.norm(t.inputs, axis=1) for t in batch])
    u_residual = float(np.max(unorm - K_norm * bound))
    return IssFit(float(kappa), c0, c1, residual, u_residual, K_norm)
