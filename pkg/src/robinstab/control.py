"""Pole placement on the truncated model and small-gain rate certificates."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import (ConstraintViolated, PlacementIllConditioned, PolesNotConjugateClosed,
                     PolesNotDistinct)
from .model import Actuation, TruncatedModel, build_model
from .spectral import PlantParams, Spectrum

COND_LIMIT = 1e12
RATE_TOL = 1e-9


def _sort_poles(z) -> np.ndarray:
    z = np.asarray(z, dtype=complex)
    return z[np.lexsort((z.imag, z.real))]


def _check_targets(mu, lam) -> np.ndarray:
    mu = np.asarray(mu, dtype=complex).ravel()
    scale = 1.0 + np.abs(mu).max()
    gaps = np.abs(mu[:, None] - mu[None, :])
    np.fill_diagonal(gaps, np.inf)
    if len(mu) > 1 and gaps.min() <= 1e-9 * scale:
        raise PolesNotDistinct(f"target poles must be pairwise distinct: {mu}")
    for z in mu[np.abs(mu.imag) > 1e-12 * scale]:
        if np.abs(mu - np.conj(z)).min() > 1e-9 * scale:
            raise PolesNotConjugateClosed(f"conjugate of {z} missing from targets")
    if np.abs(mu[:, None] - np.asarray(lam)[None, :]).min() <= 1e-10 * scale:
        raise PlacementIllConditioned("a target pole coincides with an open-loop eigenvalue")
    return mu


def pole_constraint_ok(mu, c: float) -> bool:
    """Re mu < -3|c|, or mu < -2|c| when every pole is real."""
    mu = np.asarray(mu, dtype=complex)
    if np.all(np.abs(mu.imag) <= 1e-12 * (1 + np.abs(mu))):
        return bool(np.all(mu.real < -2 * abs(c)))
    return bool(np.all(mu.real < -3 * abs(c)))


def _single_input_gain(lam, b, mu):
    # Residues of the closed-loop characteristic polynomial at each lambda_j.
    n = len(lam)
    k = np.empty(n, dtype=complex)
    for j in range(n):
        num = np.prod(lam[j] - mu)
        den = b[j] * np.prod([lam[j] - lam[i] for i in range(n) if i != j])
        k[j] = -num / den
    cauchy = b[:, None] / (mu[None, :] - lam[:, None])
    return k.real, np.linalg.cond(cauchy)


def _two_input_gain(lam, B, mu):
    groups = []  # one real direction per pole, shared inside a conjugate pair
    for i, z in enumerate(mu):
        if z.imag < 0 and np.any(np.isclose(mu[:i], np.conj(z))):
            groups.append(groups[int(np.argmin(np.abs(mu[:i] - np.conj(z))))])
        else:
            groups.append(max(groups, default=-1) + 1)
    ngroups = max(groups) + 1
    best = None
    for offset in np.linspace(0.0, np.pi, 16, endpoint=False):
        psi = offset + np.pi * np.asarray(groups) / max(ngroups, 1)
        G = np.vstack([np.cos(psi), np.sin(psi)]).astype(complex)
        V = (B @ G) / (mu[None, :] - lam[:, None])
        cond = np.linalg.cond(V)
        if not np.isfinite(cond) or cond > COND_LIMIT:
            continue
        K = np.linalg.solve(V.T, G.T).T
        cost = np.linalg.norm(K)
        if best is None or cost < best[0]:
            best = (cost, K, cond)
    if best is None:
        raise PlacementIllConditioned("eigenvector assignment system is singular")
    _, K, cond = best
    if np.abs(K.imag).max() > 1e-8 * (1 + np.abs(K).max()):
        raise PlacementIllConditioned("complex gain from conjugate pairing")
    return K.real, cond


def place_poles(model: TruncatedModel, mu, actuation=None, enforce_constraint: bool = True):
    """Real gain K (2 x N0) with eig(A + B K) = mu.

    Single-input actuation zeroes the unused row of K exactly.
    """
    actuation = model.actuation if actuation is None else Actuation.parse(actuation)
    lam = np.diag(model.A).astype(float)
    if len(mu) != model.N0:
        raise ValueError(f"need {model.N0} target poles, got {len(mu)}")
    mu = _check_targets(mu, lam)
    c = model.params.c
    if not pole_constraint_ok(mu, c):
        msg = f"target poles {mu} violate Re(mu) < -3|c| = {-3 * abs(c)}"
        if enforce_constraint:
            raise ConstraintViolated(msg)
        warnings.warn(msg, stacklevel=2)

    K = np.zeros((2, model.N0))
    if actuation is Actuation.BOTH:
        K[:], cond = _two_input_gain(lam, model.B, mu)
    else:
        col = actuation.columns[0]
        K[col], cond = _single_input_gain(lam, model.B[:, col], mu)
    if cond > COND_LIMIT:
        raise PlacementIllConditioned(f"condition estimate {cond:.3g} > {COND_LIMIT:g}")

    got = _sort_poles(np.linalg.eigvals(model.A + model.B @ K))
    resid = np.abs(got - _sort_poles(mu)).max()
    if resid > 1e-8:
        raise PlacementIllConditioned(f"placement residual {resid:.3g}")
    return K


def delta_certificate(c: float, alpha: float, sigma: float, h_M: float,
                      real_poles: bool = False) -> float:
    """Small gain of the closed-loop truncated model at rate sigma.

    With ``real_poles`` the bound ||exp(Lambda t) - I|| <= 1 replaces 2.
    """
    if not 0 <= sigma < alpha:
        raise ValueError("need 0 <= sigma < alpha")
    gap = alpha - sigma
    coef = 1.0 if real_poles else 2.0
    return abs(c) / gap * (1 - math.exp(-gap * h_M) + coef * math.exp(sigma * h_M))


def eta_certificate(c: float, beta: float, kappa: float, h_M: float) -> float:
    """Small gain of the neglected modes at rate kappa, beta = -lambda_{N0+1}/2."""
    if not 0 <= kappa < beta:
        raise ValueError("need 0 <= kappa < beta")
    gap = beta - kappa
    return (c * c / (beta * gap)) * (
        (1 - math.exp(-2 * beta * h_M)) * (1 - math.exp(-2 * gap * h_M))
        + 4 * math.exp(2 * kappa * h_M))


def _largest_below_one(fn, upper: float, tol: float = RATE_TOL) -> float:
    lo, hi = 0.0, upper
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if fn(mid) < 1:
            lo = mid
        else:
            hi = mid
    return lo


@dataclass(frozen=True)
class Rates:
    sigma: float
    kappa: float
    delta: float
    eta: float


def certify_rates(model: TruncatedModel, mu, h_M: float | None = None,
                  real_relaxation: bool = False) -> Rates:
    """Largest certified rates: sigma with delta < 1, then kappa with eta < 1.

    ``real_relaxation`` enables the weaker alpha > 2|c| requirement (and the
    matching certificate) when every closed-loop pole is real.
    """
    c = model.params.c
    h_M = model.params.h_M if h_M is None else h_M
    mu = np.asarray(mu, dtype=complex)
    alpha = -float(mu.real.max())
    beta = model.beta
    real = real_relaxation and bool(np.all(np.abs(mu.imag) <= 1e-12 * (1 + np.abs(mu))))
    need = (2.0 if real else 3.0) * abs(c)
    if not alpha > need:
        raise ConstraintViolated(f"alpha={alpha:.6g} must exceed {need:.6g}")
    if not beta > math.sqrt(5) * abs(c):
        raise ConstraintViolated(
            f"beta={beta:.6g} must exceed sqrt(5)|c|={math.sqrt(5) * abs(c):.6g}")
    if not (alpha > 0 and beta > 0):
        raise ConstraintViolated("closed loop and neglected modes must be stable")

    sigma = _largest_below_one(lambda s: delta_certificate(c, alpha, s, h_M, real), alpha)
    kappa = _largest_below_one(lambda k: eta_certificate(c, beta, k, h_M), min(beta, sigma))
    if not (sigma > 0 and kappa > 0):
        raise ConstraintViolated("no positive certified rate found")
    return Rates(sigma, kappa, delta_certificate(c, alpha, sigma, h_M, real),
                 eta_certificate(c, beta, kappa, h_M))


@dataclass(frozen=True)
class ControllerDesign:
    N0: int
    K: np.ndarray
    mu: np.ndarray
    alpha: float
    beta: float
    sigma: float
    kappa: float
    delta: float
    eta: float
    actuation: Actuation = Actuation.BOTH

    def __post_init__(self):
        ok = (self.delta < 1 and self.eta < 1 and 0 < self.kappa < self.sigma < self.alpha
              and self.kappa < self.beta)
        if not ok:
            raise ConstraintViolated(f"design is not certified: {self.summary()}")

    def summary(self) -> str:
        return (f"N0={self.N0} alpha={self.alpha:.4g} beta={self.beta:.4g} "
                f"sigma={self.sigma:.4g} kappa={self.kappa:.4g} "
                f"delta={self.delta:.4g} eta={self.eta:.4g}")

    def to_dict(self) -> dict:
        mu = [float(z.real) if abs(z.imag) == 0 else [float(z.real), float(z.imag)]
              for z in np.asarray(self.mu, dtype=complex)]
        return {"N0": self.N0, "mu": mu, "K": np.asarray(self.K).tolist(),
                "alpha": self.alpha, "beta": self.beta, "sigma": self.sigma,
                "kappa": self.kappa, "delta": self.delta, "eta": self.eta,
                "actuation": self.actuation.value}

    @classmethod
    def from_dict(cls, d: dict) -> "ControllerDesign":
        mu = np.array([complex(*z) if isinstance(z, list) else complex(z) for z in d["mu"]])
        return cls(int(d["N0"]), np.array(d["K"], dtype=float), mu,
                   *(float(d[k]) for k in ("alpha", "beta", "sigma", "kappa", "delta", "eta")),
                   Actuation.parse(d.get("actuation", "both")))


def synthesize(model: TruncatedModel, mu, actuation=None,
               real_relaxation: bool = False) -> ControllerDesign:
    """Place the poles and attach the largest certified rates."""
    actuation = model.actuation if actuation is None else Actuation.parse(actuation)
    mu = np.asarray(mu, dtype=complex)
    if real_relaxation and pole_constraint_ok(mu, model.params.c):
        K = place_poles(model, mu, actuation, enforce_constraint=False)
    else:
        K = place_poles(model, mu, actuation)
    rates = certify_rates(model, mu, real_relaxation=real_relaxation)
    mu_out = mu.real if np.all(mu.imag == 0) else mu
    return ControllerDesign(model.N0, K, mu_out, -float(mu.real.max()), model.beta,
                            rates.sigma, rates.kappa, rates.delta, rates.eta, actuation)


@dataclass(frozen=True)
class PolePolicy:
    """Real, evenly spaced poles -alpha - n * spacing, n = 0..N0-1.

    ``alpha`` begins at max(3|c|, kappa_target) + margin and grows by
    ``growth`` until the rate certificate at kappa_target is below one. The
    spacing is doubled up to ``max_widen`` times if placement is
    ill-conditioned.
    """
    spacing: float = 0.5
    margin: float = 0.5
    growth: float = 0.5
    alpha_cap: float = 1e4
    max_widen: int = 8


def design_for_decay_rate(params: PlantParams, spectrum: Spectrum, kappa_target: float,
                          policy: PolePolicy = PolePolicy(), actuation="both",
                          mode_cap: int = 200):
    """Search N0 and real poles so that the certified decay rate is kappa_target.

    Returns ``(N0, mu, design)``.
    """
    if not kappa_target > 0:
        raise ValueError("kappa_target must be > 0")
    c, h_M = params.c, params.h_M
    n0 = 1
    while True:
        if n0 > mode_cap:
            raise ConstraintViolated(f"no admissible N0 <= {mode_cap}")
        spectrum = spectrum.ensure(n0 + 1)
        beta = -spectrum.pairs[n0].lam / 2
        if (beta > kappa_target and beta > math.sqrt(5) * abs(c)
                and eta_certificate(c, beta, kappa_target, h_M) < 1):
            break
        n0 += 1

    model = build_model(spectrum, params, n0, actuation)
    lam = np.diag(model.A)
    alpha = max(3 * abs(c), kappa_target) + policy.margin
    while delta_certificate(c, alpha, kappa_target, h_M) >= 1:
        alpha += policy.growth
        if alpha > policy.alpha_cap:
            raise ConstraintViolated(f"pole search exceeded alpha_cap={policy.alpha_cap}")

    # Clustered poles make the assignment ill-conditioned when N0 is large;
    # widen the spacing (alpha stays the slowest rate) before giving up.
    spacing = policy.spacing
    for _ in range(policy.max_widen + 1):
        mu = -alpha - spacing * np.arange(n0)
        if np.abs(mu[:, None] - lam[None, :]).min() < 1e-6:
            mu = mu - 1e-3 * spacing
        try:
            K = place_poles(model, mu, actuation)
            break
        except PlacementIllConditioned:
            spacing *= 2
    else:
        raise PlacementIllConditioned(f"no well-conditioned placement for N0={n0}")
    rates = certify_rates(model, mu, h_M)
    if not (rates.sigma > kappa_target and rates.kappa >= kappa_target * (1 - 1e-6)):
        raise ConstraintViolated("certified rates fall short of kappa_target")
    design = ControllerDesign(
        n0, K, mu, alpha, model.beta, rates.sigma, kappa_target,
        rates.delta, eta_certificate(c, model.beta, kappa_target, h_M),
        Actuation.parse(actuation))
    return n0, mu, design
