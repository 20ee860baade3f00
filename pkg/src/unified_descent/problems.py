"""Objective functions: the 1-D zoo, diagonal quadratics and half-space learning.

Every problem exposes batched evaluation (``value_batch``/``gradient_batch``
over an ``(n, d)`` array) so the 1-D certification oracles can sweep dense
grids without Python loops. Single-point methods route through the batched
ones, which keeps the numbers bitwise identical between the optimizer and
any later replay.

All randomness comes from :func:`make_rng`, a Philox-4x64 counter-based
generator (numpy's ``Philox`` bit generator) seeded with a 64-bit integer.
"""

from __future__ import annotations

import csv
import enum
import io
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .geometry import SetKind, SolutionSet

__all__ = [
    "make_rng",
    "Problem",
    "ZooTag",
    "ZooProblem",
    "make_zoo_problem",
    "QuadraticProblem",
    "make_quadratic_problem",
    "HalfSpaceDataset",
    "HalfSpaceProblem",
    "generate_halfspace_dataset",
    "make_halfspace_problem",
    "finite_difference_gradient",
    "SIGMOID_SECOND_DERIV_MAX",
]

# max |sigma''(t)| over t, attained at sigma(t) = 1/2 -+ 1/(2 sqrt 3)
SIGMOID_SECOND_DERIV_MAX = 1.0 / (6.0 * math.sqrt(3.0))


def make_rng(seed: int) -> np.random.Generator:
    """Philox-4x64 counter-based generator; one per seed, no global state."""
    return np.random.Generator(np.random.Philox(int(seed) & 0xFFFFFFFFFFFFFFFF))


def _as_point(x, dimension: int) -> np.ndarray:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.shape != (dimension,):
        raise ValueError(f"expected a point of dimension {dimension}, got shape {x.shape}")
    return x


class Problem:
    """A differentiable objective, optionally a mean of per-sample terms.

    Subclasses implement ``value_batch`` and ``gradient_batch``. Problems
    with ``sample_count > 0`` also implement ``batch_value`` and
    ``batch_gradient`` (mean over the given sample ids) and define the full
    objective as the batch over every sample.
    """

    dimension: int
    sample_count: int = 0
    known_minimizers: SolutionSet | None = None
    known_fstar: float | None = None
    known_smoothness_L: float | None = None
    known_sample_lower_bounds: np.ndarray | None = None

    def value_batch(self, X: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def gradient_batch(self, X: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def value(self, x) -> float:
        x = _as_point(x, self.dimension)
        return float(self.value_batch(x[None, :])[0])

    def gradient(self, x) -> np.ndarray:
        x = _as_point(x, self.dimension)
        return self.gradient_batch(x[None, :])[0]

    # per-sample interface
    def batch_value(self, ids: Sequence[int], x) -> float:
        raise TypeError(f"{type(self).__name__} has no sample decomposition")

    def batch_gradient(self, ids: Sequence[int], x) -> np.ndarray:
        raise TypeError(f"{type(self).__name__} has no sample decomposition")

    def sample_value(self, i: int, x) -> float:
        return self.batch_value([i], x)

    def sample_gradient(self, i: int, x) -> np.ndarray:
        return self.batch_gradient([i], x)

    def describe(self) -> dict:
        return {"kind": type(self).__name__}


# ---------------------------------------------------------------------------
# 1-D zoo


class ZooTag(str, enum.Enum):
    F1_SQUARE = "F1_SQUARE"
    F2_SQRT_TAIL = "F2_SQRT_TAIL"
    F3_DOUBLE_WELL = "F3_DOUBLE_WELL"
    F4_LOCAL_MIN = "F4_LOCAL_MIN"
    F5_PIECEWISE = "F5_PIECEWISE"


def _f1(t):
    return t * t, 2.0 * t


def _f2(t):
    left = t < -1.0
    s = np.sqrt(np.where(left, -t, 1.0))
    val = np.where(left, 4.0 * s - 3.0, t * t)
    der = np.where(left, -2.0 / s, 2.0 * t)
    return val, der


def _f3(t):
    t2 = t * t
    return 0.5 * t2 * t2 - t2 + 0.5, 2.0 * t2 * t - 2.0 * t


def _f4(t):
    t2 = t * t
    val = t2 * t2 - (10.0 / 3.0) * t2 * t + 3.0 * t2
    der = 4.0 * t2 * t - 10.0 * t2 + 6.0 * t
    return val, der


def _f5(t):
    v4, d4 = _f4(t)
    v2, d2 = _f2(t)
    right = t >= 0.0
    return np.where(right, v4, v2), np.where(right, d4, d2)


_ZOO = {
    ZooTag.F1_SQUARE: (_f1, [0.0], 0.0),
    ZooTag.F2_SQRT_TAIL: (_f2, [0.0], 0.0),
    ZooTag.F3_DOUBLE_WELL: (_f3, [-1.0, 1.0], 1.0),
    ZooTag.F4_LOCAL_MIN: (_f4, [0.0], 0.0),
    ZooTag.F5_PIECEWISE: (_f5, [0.0], 0.0),
}

# Smoothness constants over [-10, 10] are not global for the quartics, so
# only f1 carries one.
_ZOO_L = {ZooTag.F1_SQUARE: 2.0}


class ZooProblem(Problem):
    """One of the five closed-form test functions on the real line."""

    dimension = 1

    def __init__(self, tag: ZooTag):
        self.tag = ZooTag(tag)
        self._fn, minimizers, ref = _ZOO[self.tag]
        kind = SetKind.SINGLETON if len(minimizers) == 1 else SetKind.FINITE
        self.known_minimizers = SolutionSet(np.array(minimizers)[:, None], kind)
        self.reference_minimizer = ref
        self.known_fstar = 0.0
        self.known_smoothness_L = _ZOO_L.get(self.tag)

    def value_batch(self, X):
        return self._fn(np.asarray(X, dtype=float)[:, 0])[0]

    def gradient_batch(self, X):
        return self._fn(np.asarray(X, dtype=float)[:, 0])[1][:, None]

    def scalar(self, t):
        """Vectorized ``(value, derivative)`` over a 1-D array of abscissae."""
        return self._fn(np.asarray(t, dtype=float))

    def describe(self):
        return {"kind": "zoo", "tag": self.tag.value}

    def __repr__(self):
        return f"ZooProblem({self.tag.value})"


def make_zoo_problem(tag) -> ZooProblem:
    return ZooProblem(ZooTag(tag))


# ---------------------------------------------------------------------------
# quadratics


class QuadraticProblem(Problem):
    """``f(x) = 0.5 (x - c)^T D (x - c)`` with diagonal ``D`` spanning ``[mu, L]``."""

    def __init__(self, dimension: int, mu: float, L: float, center=None):
        if dimension < 1:
            raise ValueError("dimension must be positive")
        if not (0 < mu <= L):
            raise ValueError(f"need 0 < mu <= L, got mu={mu}, L={L}")
        if dimension == 1 and mu != L:
            raise ValueError("a 1-D quadratic cannot attain both mu and L unless mu == L")
        self.dimension = int(dimension)
        self.mu = float(mu)
        self.L = float(L)
        self.diag = np.linspace(self.mu, self.L, self.dimension)
        c = np.zeros(self.dimension) if center is None else center
        self.center = _as_point(c, self.dimension)
        self.known_minimizers = SolutionSet.singleton(self.center)
        self.known_fstar = 0.0
        self.known_smoothness_L = self.L

    def value_batch(self, X):
        Y = np.asarray(X, dtype=float) - self.center
        return 0.5 * np.sum(self.diag * Y * Y, axis=1)

    def gradient_batch(self, X):
        return self.diag * (np.asarray(X, dtype=float) - self.center)

    def describe(self):
        return {
            "kind": "quadratic",
            "dimension": self.dimension,
            "mu": self.mu,
            "L": self.L,
            "center": self.center.tolist(),
        }


def make_quadratic_problem(dimension: int, mu: float, L: float, center=None) -> QuadraticProblem:
    return QuadraticProblem(dimension, mu, L, center)


# ---------------------------------------------------------------------------
# half-space learning


@dataclass(frozen=True, eq=False)
class HalfSpaceDataset:
    """Two Gaussian classes with signed labels in {-1, +1}.

    The first ``n/2`` rows are class +1, the rest class -1.
    """

    features: np.ndarray
    labels: np.ndarray
    seed: int | None = None
    class_means: np.ndarray | None = None
    variance: float | None = None
    reg_lambda: float = 1e-5

    def __post_init__(self):
        A = np.array(self.features, dtype=float)
        b = np.array(self.labels, dtype=float)
        if A.ndim != 2 or b.shape != (A.shape[0],):
            raise ValueError("features must be (n, d) and labels (n,)")
        if not np.all(np.isin(b, (-1.0, 1.0))):
            raise ValueError("labels must be -1 or +1")
        if self.reg_lambda < 0:
            raise ValueError("reg_lambda must be nonnegative")
        A.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "features", A)
        object.__setattr__(self, "labels", b)

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["idx", "label"] + [f"a_{j + 1}" for j in range(self.d)])
        for i in range(self.n):
            w.writerow([i, int(self.labels[i])] + [format(v, ".17g") for v in self.features[i]])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, reg_lambda: float = 1e-5) -> "HalfSpaceDataset":
        rows = list(csv.reader(io.StringIO(text)))
        header, body = rows[0], rows[1:]
        if header[:2] != ["idx", "label"]:
            raise ValueError("dataset CSV must start with idx,label")
        body.sort(key=lambda r: int(r[0]))
        labels = [float(r[1]) for r in body]
        feats = [[float(v) for v in r[2:]] for r in body]
        return cls(np.array(feats), np.array(labels), reg_lambda=reg_lambda)


def generate_halfspace_dataset(
    seed: int = 7,
    n: int = 40,
    d: int = 4,
    mean_separation: float = 4.0,
    variance: float = 2.0,
    reg_lambda: float = 1e-5,
) -> HalfSpaceDataset:
    """Draw ``n/2`` points per class around ``+-(sep/2) * 1/sqrt(d)``.

    With the defaults the class means are ``+-(1, 1, 1, 1)``.
    """
    if n < 2 or n % 2:
        raise ValueError(f"n must be even and >= 2, got {n}")
    if d < 1:
        raise ValueError("d must be >= 1")
    if variance <= 0:
        raise ValueError("variance must be positive")
    rng = make_rng(seed)
    half = n // 2
    mean = (mean_separation / 2.0) * np.ones(d) / math.sqrt(d)
    std = math.sqrt(variance)
    pos = mean + std * rng.standard_normal((half, d))
    neg = -mean + std * rng.standard_normal((half, d))
    labels = np.concatenate([np.ones(half), -np.ones(half)])
    return HalfSpaceDataset(
        features=np.vstack([pos, neg]),
        labels=labels,
        seed=int(seed),
        class_means=np.vstack([mean, -mean]),
        variance=float(variance),
        reg_lambda=float(reg_lambda),
    )


def _sigmoid(t):
    # split by sign so exp never overflows
    out = np.empty_like(t)
    pos = t >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-t[pos]))
    e = np.exp(t[~pos])
    out[~pos] = e / (1.0 + e)
    return out


class HalfSpaceProblem(Problem):
    """``f_i(x) = sigmoid(-b_i a_i^T x) + (lam/2)||x||^2``, ``f = mean_i f_i``."""

    def __init__(self, dataset: HalfSpaceDataset):
        self.dataset = dataset
        self.dimension = dataset.d
        self.sample_count = dataset.n
        self._A = dataset.features
        self._b = dataset.labels
        self._lam = float(dataset.reg_lambda)
        self._all = np.arange(dataset.n)
        self.known_sample_lower_bounds = np.zeros(dataset.n)
        row_sq = np.sum(self._A * self._A, axis=1)
        self.sample_smoothness = SIGMOID_SECOND_DERIV_MAX * row_sq + self._lam
        self.known_smoothness_L = float(np.max(self.sample_smoothness))

    def _terms(self, ids, x):
        ids = np.asarray(ids, dtype=np.int64)
        x = _as_point(x, self.dimension)
        A = self._A[ids]
        b = self._b[ids]
        s = _sigmoid(-b * (A @ x))
        return A, b, s, x

    def batch_value(self, ids, x) -> float:
        _, _, s, x = self._terms(ids, x)
        return float(np.mean(s) + 0.5 * self._lam * np.dot(x, x))

    def batch_gradient(self, ids, x) -> np.ndarray:
        A, b, s, x = self._terms(ids, x)
        coef = -(s * (1.0 - s)) * b
        return (coef @ A) / len(b) + self._lam * x

    def sample_values(self, x) -> np.ndarray:
        """Every ``f_i(x)`` at once (used for the noise term sigma^2)."""
        _, _, s, x = self._terms(self._all, x)
        return s + 0.5 * self._lam * np.dot(x, x)

    def value(self, x) -> float:
        return self.batch_value(self._all, x)

    def gradient(self, x) -> np.ndarray:
        return self.batch_gradient(self._all, x)

    def value_batch(self, X):
        return np.array([self.value(x) for x in np.asarray(X, dtype=float)])

    def gradient_batch(self, X):
        return np.array([self.gradient(x) for x in np.asarray(X, dtype=float)])

    def describe(self):
        ds = self.dataset
        return {"kind": "halfspace", "n": ds.n, "d": ds.d, "seed": ds.seed, "reg_lambda": ds.reg_lambda}


def make_halfspace_problem(dataset: HalfSpaceDataset) -> HalfSpaceProblem:
    return HalfSpaceProblem(dataset)


# ---------------------------------------------------------------------------


def finite_difference_gradient(problem: Problem, x, h: float = 1e-6, sample_id=None) -> np.ndarray:
    """Central-difference gradient; a test oracle, never used by the optimizer."""
    if h <= 0:
        raise ValueError("h must be positive")
    x = _as_point(x, problem.dimension)
    if sample_id is None:
        fn = problem.value
    else:
        ids = np.atleast_1d(sample_id)
        fn = lambda z: problem.batch_value(ids, z)  # noqa: E731
    g = np.empty_like(x)
    for j in range(x.size):
        e = np.zeros_like(x)
        e[j] = h
        g[j] = (fn(x + e) - fn(x - e)) / (2.0 * h)
    return g
