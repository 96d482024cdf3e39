"""Finite-dimensional truncated model: ``dY/dt = A Y + c (Y(t-h) - Y) + B u + D``."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import LiftingDegenerate
from .spectral import EigenPair, PlantParams, Spectrum, eigenfunction_derivative, \
    eigenfunction_value

THRESHOLD_FACTOR = 2.0 * math.sqrt(5.0)


class Actuation(str, enum.Enum):
    BOTH = "both"
    LEFT = "left"     # u2 = 0
    RIGHT = "right"   # u1 = 0

    @classmethod
    def parse(cls, value) -> "Actuation":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ValueError(
                f"actuation: expected one of both|left|right, got {value!r}") from None

    @property
    def columns(self) -> tuple:
        return {Actuation.BOTH: (0, 1), Actuation.LEFT: (0,), Actuation.RIGHT: (1,)}[self]


def select_mode_count(spectrum: Spectrum, c: float | None = None) -> int:
    """Smallest N0 >= 1 with lambda_{N0+1} < -2 sqrt(5) |c|."""
    c = spectrum.params.c if c is None else c
    threshold = -THRESHOLD_FACTOR * abs(c)
    n0 = 1
    while True:
        spectrum = spectrum.ensure(n0 + 1)
        if spectrum.pairs[n0].lam < threshold:
            return n0
        n0 += 1


def input_coefficient(pair: EigenPair, params: PlantParams, m: int, k: int = 2) -> float:
    """Boundary input coefficient b_{n,m} computed through the lifting (1-x)^k, x^k.

    The value does not depend on ``k``; a zero denominator raises
    ``LiftingDegenerate``.
    """
    if m not in (1, 2):
        raise ValueError("boundary index m must be 1 or 2")
    if k < 2:
        raise ValueError("lifting index k must be >= 2")
    theta = params.theta1 if m == 1 else params.theta2
    den = math.cos(theta) + k * math.sin(theta)
    if abs(den) < 1e-14:
        raise LiftingDegenerate(f"cos(theta{m}) + {k} sin(theta{m}) = 0")
    xb = 0.0 if m == 1 else 1.0
    e = float(eigenfunction_value(pair, params, xb))
    de = float(eigenfunction_derivative(pair, params, xb))
    if m == 1:
        return params.a * (de + k * e) / den
    return params.a * (-de + k * e) / den


def _input_coefficient_any_k(pair, params, m, k=2):
    while True:
        try:
            return input_coefficient(pair, params, m, k)
        except LiftingDegenerate:
            k += 1


def input_matrix(spectrum: Spectrum, count: int, k: int = 2) -> np.ndarray:
    """``count x 2`` matrix of b_{n,m} for n = 1..count."""
    spectrum = spectrum.ensure(count)
    return np.array([[_input_coefficient_any_k(p, spectrum.params, m, k) for m in (1, 2)]
                     for p in spectrum.pairs[:count]])


def controllability_rank(A, B, tol: float = 1e-9) -> int:
    """Dimension of the controllable subspace of a diagonalizable pair (A, B).

    Uses the PBH test per eigenvalue, which stays reliable where the Krylov
    matrix [B, AB, ...] is too ill-conditioned for a numerical rank.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    n = A.shape[0]
    B = np.asarray(B, dtype=float).reshape(n, -1)
    lam = np.linalg.eigvals(A)
    scale = max(np.abs(A).max(), np.abs(B).max(), 1.0)
    distinct: list = []
    for z in lam:
        if all(abs(z - w) > tol * scale for w in distinct):
            distinct.append(z)
    missing = 0
    for z in distinct:
        pencil = np.hstack([z * np.eye(n) - A, B])
        sv = np.linalg.svd(pencil, compute_uv=False)
        missing += n - int(np.count_nonzero(sv > tol * scale))
    return n - missing


@dataclass(frozen=True)
class TruncatedModel:
    N0: int
    A: np.ndarray
    B: np.ndarray
    spectrum: Spectrum
    actuation: Actuation = Actuation.BOTH

    @property
    def params(self) -> PlantParams:
        return self.spectrum.params

    @property
    def lambda_next(self) -> float:
        return self.spectrum.pairs[self.N0].lam

    @property
    def beta(self) -> float:
        """Decay margin -lambda_{N0+1} / 2 of the neglected modes."""
        return -self.lambda_next / 2

    def to_dict(self) -> dict:
        return {
            "N0": self.N0,
            "A": np.diag(self.A).tolist(),
            "B": self.B.tolist(),
            "actuation": self.actuation.value,
            "lambda_next": self.lambda_next,
        }


def build_model(spectrum: Spectrum, params: PlantParams | None = None,
                N0: int | None = None, actuation="both") -> TruncatedModel:
    params = spectrum.params if params is None else params
    if params != spectrum.params:
        raise ValueError("params do not match the spectrum")
    if N0 is None:
        N0 = select_mode_count(spectrum, params.c)
    if N0 < 1:
        raise ValueError("N0 must be >= 1")
    spectrum = spectrum.ensure(N0 + 1)
    A = np.diag(spectrum.lam[:N0])
    B = input_matrix(spectrum, N0)
    return TruncatedModel(N0, A, B, spectrum, Actuation.parse(actuation))
