"""Eigenstructure of the shifted reaction-diffusion operator.

The operator is ``f -> a f'' + (b + c) f`` on (0, 1) with the homogeneous
Robin conditions

    cos(theta1) f(0) - sin(theta1) f'(0) = 0
    cos(theta2) f(1) + sin(theta2) f'(1) = 0.

Only the branch cot(theta_i) > 0 is supported. There the eigenvalues are
``lambda_n = b + c - a r_n**2`` where ``r_n`` are the positive roots of

    g(r) = (h1 h2 - r**2) sin(r) + (h1 + h2) r cos(r),   h_i = cot(theta_i),

and the eigenfunctions are ``phi_n(x) = r_n cos(r_n x) + h1 sin(r_n x)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy.optimize import bisect

from .errors import BranchUnsupported, RootScanExhausted, ValidationError

SCAN_STEP = 1e-3
ROOT_CAP = 1e6


@dataclass(frozen=True)
class PlantParams:
    a: float
    b: float
    c: float
    theta1: float
    theta2: float
    h_m: float
    h_M: float

    def __post_init__(self):
        for name in ("a", "b", "c", "theta1", "theta2", "h_m", "h_M"):
            v = getattr(self, name)
            if not isinstance(v, (int, float)) or not math.isfinite(v):
                raise ValidationError(f"{name}: expected a finite number, got {v!r}")
        if self.a <= 0:
            raise ValidationError(f"a: diffusivity must be > 0, got {self.a}")
        if not 0 < self.h_m < self.h_M:
            raise ValidationError(
                f"h_m, h_M: need 0 < h_m < h_M, got h_m={self.h_m}, h_M={self.h_M}"
            )
        for name in ("theta1", "theta2"):
            th = getattr(self, name)
            s = math.sin(th)
            if abs(s) < 1e-15 or math.cos(th) / s <= 0:
                raise BranchUnsupported(
                    f"{name}={th}: only cot({name}) > 0 is supported"
                )

    @property
    def h1(self) -> float:
        return math.cos(self.theta1) / math.sin(self.theta1)

    @property
    def h2(self) -> float:
        return math.cos(self.theta2) / math.sin(self.theta2)

    def to_dict(self) -> dict:
        return {k: float(getattr(self, k)) for k in
                ("a", "b", "c", "theta1", "theta2", "h_m", "h_M")}

    @classmethod
    def from_dict(cls, d: dict) -> "PlantParams":
        return cls(**{k: d[k] for k in ("a", "b", "c", "theta1", "theta2", "h_m", "h_M")})

    def replace(self, **kw) -> "PlantParams":
        return PlantParams(**{**self.to_dict(), **kw})


def benchmark_params() -> PlantParams:
    """Parameters of the numerical illustration (h(t) = 2 + 1.5 sin t)."""
    return PlantParams(a=0.2, b=2.0, c=1.0, theta1=math.pi / 3,
                       theta2=math.pi / 10, h_m=0.5, h_M=3.5)


# ---------------------------------------------------------------- quadrature

@lru_cache(maxsize=32)
def _gauss_legendre(n_nodes: int, panel: int):
    panel = min(panel, n_nodes)
    if n_nodes % panel:
        raise ValueError(f"n_nodes={n_nodes} is not a multiple of panel={panel}")
    npan = n_nodes // panel
    xg, wg = np.polynomial.legendre.leggauss(panel)
    h = 1.0 / npan
    left = np.arange(npan) * h
    x = (left[:, None] + 0.5 * h * (xg[None, :] + 1.0)).ravel()
    w = np.tile(0.5 * h * wg, npan)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def gauss_legendre(n_nodes: int = 256, panel: int = 32):
    """Composite Gauss-Legendre rule on [0, 1] as ``(nodes, weights)``."""
    return _gauss_legendre(int(n_nodes), int(panel))


# ------------------------------------------------------------ characteristic

def characteristic_fn(params: PlantParams, r):
    h1, h2 = params.h1, params.h2
    r = np.asarray(r, dtype=float)
    out = (h1 * h2 - r * r) * np.sin(r) + (h1 + h2) * r * np.cos(r)
    return out if out.ndim else float(out)


def _characteristic_deriv(h1: float, h2: float, r: float) -> float:
    s, c = math.sin(r), math.cos(r)
    return -2 * r * s + (h1 * h2 - r * r) * c + (h1 + h2) * (c - r * s)


def find_roots(params: PlantParams, count: int, step: float = SCAN_STEP,
               r_cap: float = ROOT_CAP) -> np.ndarray:
    """First ``count`` positive roots of the characteristic function.

    Brackets are found by a sign scan with spacing ``step``, narrowed by
    bisection to 1e-13 and finished with one guarded Newton step.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    h1, h2 = params.h1, params.h2
    if h1 <= 0 or h2 <= 0:
        raise BranchUnsupported("only cot(theta_i) > 0 is supported")

    def g(r):
        return (h1 * h2 - r * r) * math.sin(r) + (h1 + h2) * r * math.cos(r)

    roots: list[float] = []
    lo = step  # g(0) = 0 is not an eigenvalue root; g > 0 just right of it
    chunk = max(10.0, (count + 1) * math.pi)
    while len(roots) < count:
        hi = lo + chunk
        if hi > r_cap:
            raise RootScanExhausted(
                f"found {len(roots)} of {count} roots below r_cap={r_cap}")
        grid = lo + step * np.arange(int(round((hi - lo) / step)) + 1)
        vals = characteristic_fn(params, grid)
        sgn = np.sign(vals)
        for i in np.flatnonzero(sgn[:-1] * sgn[1:] <= 0):
            if sgn[i] == 0:
                roots.append(float(grid[i]))
                if len(roots) == count:
                    break
                continue
            if sgn[i + 1] == 0:
                continue  # exact zero, recorded at index i + 1
            a_, b_ = float(grid[i]), float(grid[i + 1])
            r = bisect(g, a_, b_, xtol=1e-13, rtol=4 * np.finfo(float).eps)
            d = _characteristic_deriv(h1, h2, r)
            if d != 0.0:
                rn = r - g(r) / d
                if a_ <= rn <= b_ and abs(g(rn)) <= abs(g(r)):
                    r = rn
            roots.append(r)
            if len(roots) == count:
                break
        lo = float(grid[-1])
    return np.array(roots[:count])


# ------------------------------------------------------------------ eigenpairs

def phi_norm(params: PlantParams, r: float) -> float:
    """Closed-form L2 norm of phi(x) = r cos(rx) + h1 sin(rx) on (0, 1)."""
    h1 = params.h1
    if r <= 0:
        raise ValueError("r must be positive")
    # (r^2+h^2)/2 + (r^2-h^2) sin(2r)/(4r) + h (1-cos 2r)/2, regrouped so the
    # O(1) terms cancel analytically: r^2 - (r^2-h^2) T + h sin^2 r.
    u = 2 * r
    if u < 1e-2:
        t = u * u / 12 * (1 - u * u / 20 * (1 - u * u / 42))
    else:
        t = (u - math.sin(u)) / (2 * u)
    sq = r * r - (r * r - h1 * h1) * t + h1 * math.sin(r) ** 2
    return math.sqrt(sq)


@dataclass(frozen=True)
class EigenPair:
    n: int
    r: float
    lam: float
    norm_phi: float

    def to_dict(self) -> dict:
        return {"n": self.n, "r": self.r, "lambda": self.lam, "norm_phi": self.norm_phi}


def eigenvalue_from_root(params: PlantParams, r):
    return params.b + params.c - params.a * np.asarray(r) ** 2


def eigenvalues(params: PlantParams, count: int) -> np.ndarray:
    return eigenvalue_from_root(params, find_roots(params, count))


def eigenfunction_value(pair: EigenPair, params: PlantParams, x):
    x = np.asarray(x, dtype=float)
    r = pair.r
    return (r * np.cos(r * x) + params.h1 * np.sin(r * x)) / pair.norm_phi


def eigenfunction_derivative(pair: EigenPair, params: PlantParams, x, order: int = 1):
    """Analytic x-derivative (order 1 or 2) of the unit eigenfunction."""
    x = np.asarray(x, dtype=float)
    r, h1 = pair.r, params.h1
    if order == 1:
        d = -r * r * np.sin(r * x) + h1 * r * np.cos(r * x)
    elif order == 2:
        d = -r * r * (r * np.cos(r * x) + h1 * np.sin(r * x))
    else:
        raise ValueError("order must be 1 or 2")
    return d / pair.norm_phi


@dataclass(frozen=True)
class Spectrum:
    params: PlantParams
    pairs: tuple = field(default_factory=tuple)

    def __len__(self):
        return len(self.pairs)

    @property
    def r(self) -> np.ndarray:
        return np.array([p.r for p in self.pairs])

    @property
    def lam(self) -> np.ndarray:
        return np.array([p.lam for p in self.pairs])

    @property
    def norms(self) -> np.ndarray:
        return np.array([p.norm_phi for p in self.pairs])

    def ensure(self, count: int) -> "Spectrum":
        """Return a spectrum holding at least ``count`` pairs."""
        if len(self.pairs) >= count:
            return self
        return compute_spectrum(self.params, count)

    def basis(self, x, count: int | None = None) -> np.ndarray:
        """Matrix ``E[n, j] = e_{n+1}(x_j)``."""
        count = len(self.pairs) if count is None else count
        x = np.asarray(x, dtype=float)
        r = self.r[:count, None]
        phi = r * np.cos(r * x[None, :]) + self.params.h1 * np.sin(r * x[None, :])
        return phi / self.norms[:count, None]

    def to_dict(self) -> dict:
        return {"params": self.params.to_dict(),
                "pairs": [p.to_dict() for p in self.pairs]}

    @classmethod
    def from_dict(cls, d: dict) -> "Spectrum":
        params = PlantParams.from_dict(d["params"])
        pairs = tuple(EigenPair(int(p["n"]), float(p["r"]), float(p["lambda"]),
                                float(p["norm_phi"])) for p in d["pairs"])
        return cls(params, pairs)


def compute_spectrum(params: PlantParams, count: int, step: float = SCAN_STEP) -> Spectrum:
    roots = find_roots(params, count, step=step)
    lam = eigenvalue_from_root(params, roots)
    pairs = tuple(EigenPair(n + 1, float(r), float(l), phi_norm(params, float(r)))
                  for n, (r, l) in enumerate(zip(roots, lam)))
    return Spectrum(params, pairs)


def project(profile: Callable, spectrum: Spectrum, count: int | None = None,
            n_nodes: int = 256) -> np.ndarray:
    """Modal coefficients <profile, e_n> for n = 1..count.

    ``profile`` must accept a numpy array of points in [0, 1].
    """
    count = len(spectrum) if count is None else count
    spectrum = spectrum.ensure(count)
    x, w = gauss_legendre(n_nodes)
    f = np.broadcast_to(np.asarray(profile(x), dtype=float), x.shape)
    return spectrum.basis(x, count) @ (w * f)


def projection_matrix(spectrum: Spectrum, count: int | None = None,
                      n_nodes: int = 256):
    """``(nodes, P)`` with ``P @ f(nodes)`` giving the first ``count`` coefficients."""
    count = len(spectrum) if count is None else count
    x, w = gauss_legendre(n_nodes)
    return x, spectrum.ensure(count).basis(x, count) * w[None, :]


def l2_norm(profile_values: np.ndarray, n_nodes: int = 256) -> float:
    """L2 norm from values sampled on ``gauss_legendre(n_nodes)`` nodes."""
    _, w = gauss_legendre(n_nodes)
    return float(np.sqrt(np.dot(w, np.asarray(profile_values) ** 2)))
