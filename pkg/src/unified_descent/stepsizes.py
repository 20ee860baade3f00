"""Polyak-family stepsize policies and the admissible-step bound.

``DECREASING_POLYAK`` uses ``c^k = sqrt(k + 1)`` with ``c^{-1} = c^0`` and
``gamma^{-1} = gamma0``::

    gamma^k = min(c1 (f - l*) / ||g||^2, gamma^{k-1} c^{k-1}) / c^k

so ``gamma^k <= gamma^{k-1}`` always. The previous step is carried by the
caller in :class:`StepContext.prev_gamma`; policies themselves are stateless.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from .errors import DegenerateGradient, NegativeGap

__all__ = [
    "PolicyKind",
    "StepsizePolicy",
    "StepContext",
    "compute_step",
    "uncapped_step",
    "max_admissible_step",
    "is_admissible",
    "DEFAULT_GRAD_FLOOR",
]

DEFAULT_GRAD_FLOOR = 1e-12
_GAP_TOL = 1e-12


class PolicyKind(str, enum.Enum):
    CONSTANT = "CONSTANT"
    POLYAK = "POLYAK"
    POLYAK_LB = "POLYAK_LB"
    DECREASING_POLYAK = "DECREASING_POLYAK"
    CAPPED = "CAPPED"


@dataclass(frozen=True)
class StepsizePolicy:
    kind: PolicyKind
    gamma: float | None = None
    c1: float = 1.0
    fstar: float | None = None
    lstar: float | None = None
    gamma0: float | None = None
    cap: float | None = None
    inner: "StepsizePolicy | None" = None
    grad_floor: float = DEFAULT_GRAD_FLOOR

    def __post_init__(self):
        object.__setattr__(self, "kind", PolicyKind(self.kind))
        k = self.kind
        if k is PolicyKind.CONSTANT and not (self.gamma and self.gamma > 0):
            raise ValueError("CONSTANT needs gamma > 0")
        if k is not PolicyKind.CONSTANT and k is not PolicyKind.CAPPED and self.c1 <= 0:
            raise ValueError("c1 must be positive")
        if k is PolicyKind.POLYAK and self.fstar is None:
            raise ValueError("POLYAK needs fstar")
        if k in (PolicyKind.POLYAK_LB, PolicyKind.DECREASING_POLYAK) and self.lstar is None:
            raise ValueError(f"{k.value} needs lstar")
        if self.gamma0 is not None and self.gamma0 <= 0:
            raise ValueError("gamma0 must be positive")
        if k is PolicyKind.CAPPED:
            if self.inner is None or not (self.cap and self.cap > 0):
                raise ValueError("CAPPED needs an inner policy and cap > 0")
            if self.inner.kind is PolicyKind.CAPPED:
                raise ValueError("nested CAPPED policies are not supported")
        if self.grad_floor <= 0:
            raise ValueError("grad_floor must be positive")

    @property
    def base(self) -> "StepsizePolicy":
        return self.inner if self.kind is PolicyKind.CAPPED else self

    @property
    def nonincreasing(self) -> bool:
        return self.base.kind in (PolicyKind.CONSTANT, PolicyKind.DECREASING_POLYAK)

    def to_json(self) -> dict:
        out = {"kind": self.kind.value}
        for name in ("gamma", "c1", "fstar", "lstar", "gamma0", "cap"):
            v = getattr(self, name)
            if v is not None:
                out[name] = v
        if self.grad_floor != DEFAULT_GRAD_FLOOR:
            out["grad_floor"] = self.grad_floor
        if self.inner is not None:
            out["inner"] = self.inner.to_json()
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "StepsizePolicy":
        inner = obj.get("inner")
        return cls(
            kind=obj["kind"],
            gamma=obj.get("gamma"),
            c1=obj.get("c1", 1.0),
            fstar=obj.get("fstar"),
            lstar=obj.get("lstar"),
            gamma0=obj.get("gamma0"),
            cap=obj.get("cap"),
            inner=cls.from_json(inner) if inner is not None else None,
            grad_floor=obj.get("grad_floor", DEFAULT_GRAD_FLOOR),
        )


@dataclass(frozen=True)
class StepContext:
    k: int
    fx: float
    grad_norm_sq: float
    prev_gamma: float | None = None  # previous *uncapped* step, for DECREASING_POLYAK


def _polyak(c1: float, fx: float, target: float, gn: float) -> float:
    if fx < target - _GAP_TOL:
        raise NegativeGap(f"f(x) = {fx:.17g} is below the supplied optimum {target:.17g}")
    return c1 * max(fx - target, 0.0) / gn


def uncapped_step(policy: StepsizePolicy, ctx: StepContext) -> float:
    """The step before any CAPPED clipping (the running DECREASING state)."""
    p = policy.base
    gn = ctx.grad_norm_sq
    if not gn >= policy.grad_floor**2:
        raise DegenerateGradient(f"||grad||^2 = {gn:.3g} below floor at k={ctx.k}")
    if p.kind is PolicyKind.CONSTANT:
        return float(p.gamma)
    if p.kind is PolicyKind.POLYAK:
        g = _polyak(p.c1, ctx.fx, p.fstar, gn)
    elif p.kind is PolicyKind.POLYAK_LB:
        g = _polyak(p.c1, ctx.fx, p.lstar, gn)
    else:
        pl = _polyak(p.c1, ctx.fx, p.lstar, gn)
        if ctx.k == 0 or ctx.prev_gamma is None:
            # c^{-1} = c^0 = 1, gamma^{-1} = gamma0 (default: inactive min)
            prev, c_prev = (p.gamma0 if p.gamma0 is not None else pl), 1.0
        else:
            prev, c_prev = ctx.prev_gamma, math.sqrt(ctx.k)
        g = min(pl, prev * c_prev) / math.sqrt(ctx.k + 1)
    if not g > 0:
        # f(x) == target exactly: the iterate is optimal for this policy
        raise DegenerateGradient(f"zero Polyak step at k={ctx.k}")
    return g


def compute_step(policy: StepsizePolicy, ctx: StepContext) -> float:
    g = uncapped_step(policy, ctx)
    if policy.kind is PolicyKind.CAPPED:
        g = min(g, policy.cap)
    return g


def max_admissible_step(inner_product, grad_norm_sq, alpha, beta, c2):
    """Largest step allowed by the descent-inequality stepsize relation.

    ``(2 - alpha)(<g, x - x_p> + c2 + beta) / ||g||^2``; a nonpositive result
    means no positive step is admissible at this point.
    """
    if not grad_norm_sq > 0:
        raise ValueError("grad_norm_sq must be positive")
    return (2.0 - alpha) * (inner_product + c2 + beta) / grad_norm_sq


def is_admissible(gamma, bound, tol_rel=1e-9, tol_abs=1e-15) -> bool:
    return gamma > 0 and gamma - bound <= tol_rel * abs(bound) + tol_abs
