"""Finite solution sets and the deterministic nearest-point projection."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch

__all__ = ["SetKind", "SolutionSet", "Projection", "project", "project_batch", "distance_sq"]


class SetKind(str, enum.Enum):
    SINGLETON = "SINGLETON"
    FINITE = "FINITE"
    PROXY = "PROXY"  # minimizer estimated from the end of a long run


@dataclass(frozen=True, eq=False)
class SolutionSet:
    """Nonempty finite list of candidate global minimizers.

    Points are stored as an ``(m, d)`` float array; list order matters
    because projection ties go to the lowest index.
    """

    points: np.ndarray
    kind: SetKind = SetKind.FINITE

    def __post_init__(self):
        pts = np.array(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2 or pts.shape[0] == 0:
            raise ValueError("solution set must be a nonempty list of points")
        if not np.all(np.isfinite(pts)):
            raise ValueError("solution set points must be finite")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "kind", SetKind(self.kind))

    @classmethod
    def singleton(cls, point, kind: SetKind = SetKind.SINGLETON) -> "SolutionSet":
        return cls(np.atleast_1d(np.asarray(point, dtype=float))[None, :], kind)

    @classmethod
    def proxy(cls, point) -> "SolutionSet":
        return cls.singleton(point, SetKind.PROXY)

    @property
    def dimension(self) -> int:
        return self.points.shape[1]

    def __len__(self) -> int:
        return self.points.shape[0]

    def to_json(self) -> dict:
        return {"kind": self.kind.value, "points": self.points.tolist()}


@dataclass(frozen=True)
class Projection:
    point: np.ndarray
    index: int
    dist_sq: float


def project_batch(X: np.ndarray, sset: SolutionSet) -> tuple[np.ndarray, np.ndarray]:
    """Project each row of ``X`` onto ``sset``.

    Returns ``(index, dist_sq)`` arrays. ``np.argmin`` returns the first
    minimizer, which gives the lowest-index tie-break.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != sset.dimension:
        raise DimensionMismatch(
            f"points of dimension {X.shape[-1]} vs solution set of dimension {sset.dimension}"
        )
    diff = X[:, None, :] - sset.points[None, :, :]
    d2 = np.sum(diff * diff, axis=-1)
    idx = np.argmin(d2, axis=1)
    return idx, d2[np.arange(X.shape[0]), idx]


def project(x, sset: SolutionSet) -> Projection:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.ndim != 1:
        raise DimensionMismatch("project expects a single point")
    idx, d2 = project_batch(x[None, :], sset)
    i = int(idx[0])
    return Projection(point=sset.points[i], index=i, dist_sq=float(d2[0]))


def distance_sq(x, sset: SolutionSet) -> float:
    return project(x, sset).dist_sq
