"""Per-step descent checks and closed-form rate bounds evaluated on run data.

All sums run over the entries with a computed step (``k = 0..K``); the
left-hand "min progress" is taken over every recorded entry, which can only
make it smaller.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import HypothesisViolated
from ..progress import ProgressKind
from ..stepsizes import is_admissible, max_admissible_step
from .residuals import TrajectoryAnalysis

__all__ = [
    "BoundName",
    "BoundCheck",
    "DescentStep",
    "check_descent_step",
    "check_descent_steps",
    "summarize_checks",
    "check_min_progress",
    "check_linear_rate",
    "TOL_REL",
    "TOL_ABS",
]

TOL_REL = 1e-9
TOL_ABS = 1e-12


class BoundName(str, enum.Enum):
    THM1_DESCENT = "THM1_DESCENT"
    THM1_MIN_P = "THM1_MIN_P"
    COR1 = "COR1"
    COR2 = "COR2"
    COR3 = "COR3"
    THM2_DESCENT = "THM2_DESCENT"
    THM2_MIN_P = "THM2_MIN_P"
    COR4 = "COR4"
    COR5 = "COR5"
    EX2_LINEAR = "EX2_LINEAR"


@dataclass
class BoundCheck:
    name: BoundName
    lhs: float
    rhs: float
    slack: float
    passed: bool
    skipped: bool = False
    detail: dict = field(default_factory=dict)

    @classmethod
    def evaluate(cls, name, lhs, rhs, tol_rel=TOL_REL, tol_abs=TOL_ABS, **detail) -> "BoundCheck":
        lhs, rhs = float(lhs), float(rhs)
        slack = rhs - lhs
        ok = bool(slack >= -tol_rel * abs(rhs) - tol_abs) if math.isfinite(rhs) else rhs > 0
        return cls(BoundName(name), lhs, rhs, slack, ok, False, detail)

    def to_json(self) -> dict:
        out = {
            "name": self.name.value,
            "lhs": _num(self.lhs),
            "rhs": _num(self.rhs),
            "slack": _num(self.slack),
            "pass": self.passed,
        }
        if self.skipped:
            out["skipped"] = True
        if self.detail:
            out["detail"] = {k: _num(v) if isinstance(v, float) else v for k, v in sorted(self.detail.items())}
        return out


def _num(v):
    return v if v is None or math.isfinite(v) else None


@dataclass(frozen=True)
class DescentStep:
    k: int
    dist_sq: float
    dist_sq_next: float
    gamma: float
    progress: float
    inner: float
    grad_norm_sq: float
    beta: float = 0.0
    c2: float = 0.0


def check_descent_step(step: DescentStep, c1: float, alpha: float, stochastic: bool = False) -> BoundCheck:
    """One application of the per-step descent inequality.

    A step above the admissible bound makes the inequality vacuous; it is
    returned with ``skipped=True`` rather than counted as a failure.
    """
    name = BoundName.THM2_DESCENT if stochastic else BoundName.THM1_DESCENT
    g = step.gamma
    rhs = (
        step.dist_sq
        - alpha * c1 * g * step.progress
        + (2.0 - alpha) * step.beta * g
        + 2.0 * step.c2 * g
    )
    bound = max_admissible_step(step.inner, step.grad_norm_sq, alpha, step.beta, step.c2)
    chk = BoundCheck.evaluate(name, step.dist_sq_next, rhs, k=step.k, max_step=bound)
    if not is_admissible(g, bound):
        chk.skipped = True
    return chk


def _steps(an: TrajectoryAnalysis):
    rp = an.replay
    for j in range(an.n - 1):
        if not math.isfinite(an.gamma[j]):
            break
        yield DescentStep(
            k=int(rp.k[j]),
            dist_sq=float(rp.dist_sq[j]),
            dist_sq_next=float(rp.dist_sq[j + 1]),
            gamma=float(an.gamma[j]),
            progress=float(an.progress[j]),
            inner=float(rp.inner[j]),
            grad_norm_sq=float(rp.grad_norm_sq[j]),
            beta=float(an.beta[j]),
            c2=float(an.c2[j]),
        )


def check_descent_steps(an: TrajectoryAnalysis) -> list[BoundCheck]:
    p = an.params
    return [check_descent_step(s, p.c1, p.alpha, an.stochastic) for s in _steps(an)]


def summarize_checks(checks: list[BoundCheck], name: BoundName | None = None) -> BoundCheck:
    """Collapse per-step checks into one entry reporting the worst slack."""
    live = [c for c in checks if not c.skipped]
    nfail = sum(not c.passed for c in live)
    detail = {"checked": len(live), "skipped": len(checks) - len(live), "failed": nfail}
    if not live:
        return BoundCheck(name or BoundName.THM1_DESCENT, math.nan, math.nan, math.nan, True, True, detail)
    worst = min(live, key=lambda c: c.slack + TOL_REL * abs(c.rhs))
    detail["worst_k"] = worst.detail.get("k")
    return BoundCheck(worst.name, worst.lhs, worst.rhs, worst.slack, nfail == 0, False, detail)


class Variant(str, enum.Enum):
    THM1 = "THM1"
    COR1 = "COR1"
    COR2 = "COR2"
    COR3 = "COR3"
    THM2 = "THM2"
    COR4 = "COR4"
    COR5 = "COR5"


_VARIANT_NAME = {
    Variant.THM1: BoundName.THM1_MIN_P,
    Variant.COR1: BoundName.COR1,
    Variant.COR2: BoundName.COR2,
    Variant.COR3: BoundName.COR3,
    Variant.THM2: BoundName.THM2_MIN_P,
    Variant.COR4: BoundName.COR4,
    Variant.COR5: BoundName.COR5,
}


def _require_nonincreasing(gam: np.ndarray, what: str):
    if gam.size > 1 and np.any(np.diff(gam) > TOL_REL * gam[:-1]):
        j = int(np.argmax(np.diff(gam) > TOL_REL * gam[:-1]))
        raise HypothesisViolated(f"{what}: stepsize increased at k={j + 1}")


def check_min_progress(
    an: TrajectoryAnalysis,
    variant,
    *,
    L: float | None = None,
    gamma_b: float | None = None,
) -> BoundCheck:
    """Evaluate one "min progress" bound on the analysed run.

    ``L`` is needed for COR1 and COR4; ``gamma_b`` (the step cap) for THM2
    and COR4 and defaults to the realized largest step.
    """
    variant = Variant(variant)
    name = _VARIANT_NAME[variant]
    p = an.params
    K = an.last_step
    if K < 0:
        return BoundCheck(name, math.nan, math.inf, math.inf, True, True, {"reason": "no step computed"})
    gam = an.gamma[: K + 1]
    beta = an.beta[: K + 1]
    c2 = an.c2[: K + 1]
    d0 = float(an.replay.dist_sq[0])
    a, c1 = p.alpha, p.c1
    sum_g = float(np.sum(gam))
    n_terms = K + 1

    if variant in (Variant.THM1, Variant.COR1, Variant.COR2, Variant.COR3):
        if an.stochastic:
            raise ValueError(f"{variant.value} applies to deterministic runs")
        lhs = float(np.min(an.progress))
        c2c = float(c2[0])
        CK = float(np.sum(gam * (2 - a) * beta)) / (a * c1 * sum_g) + 2 * c2c / (a * c1)
        if variant is Variant.THM1:
            return BoundCheck.evaluate(name, lhs, d0 / (a * c1 * sum_g) + CK, K=K, sum_gamma=sum_g)
        if variant is Variant.COR1:
            if L is None:
                raise ValueError("COR1 needs L")
            if p.progress.kind is not ProgressKind.GAP or a != 1.0 or np.any(beta != 0):
                raise HypothesisViolated("COR1 needs P = f - f*, alpha = 1, beta = 0")
            if np.min(gam) < c1 / (2 * L) * (1 - TOL_REL):
                raise HypothesisViolated(f"step {float(np.min(gam)):.17g} below c1/(2L) = {c1 / (2 * L):.17g}")
            rhs = 2 * L * d0 / (c1**2 * n_terms) + 2 * c2c / c1
            return BoundCheck.evaluate(name, lhs, rhs, K=K, L=L)
        if variant is Variant.COR2:
            gnorm = an.replay.grad_norm_sq[: K + 1]
            need = (2 - a) * c1 * an.progress[: K + 1] / gnorm
            if np.any(gam < need * (1 - TOL_REL)):
                raise HypothesisViolated("COR2 needs gamma >= (2 - alpha) c1 P / ||grad||^2")
            G = float(np.sqrt(np.max(gnorm)))
            rhs = G * math.sqrt(d0) / (math.sqrt((2 - a) * a) * c1 * math.sqrt(n_terms)) + CK
            # the proof's disjunction: either min P <= C^K or the rate applies
            return BoundCheck.evaluate(name, lhs, rhs, K=K, G=G, CK=CK)
        _require_nonincreasing(gam, "COR3")
        dmax = float(np.max(an.replay.dist_sq[: K + 1]))
        rhs = (
            dmax / (a * c1 * gam[-1] * n_terms)
            + (2 - a) * float(np.sum(beta)) / (a * c1 * n_terms)
            + 2 * c2c / (a * c1)
        )
        return BoundCheck.evaluate(name, lhs, rhs, K=K, D2_max=dmax)

    if not an.stochastic:
        raise ValueError(f"{variant.value} applies to stochastic runs")
    ec2 = float(np.mean(c2))
    if variant is Variant.THM2:
        gb = float(np.max(gam)) if gamma_b is None else float(gamma_b)
        gmin = min(float(np.min(gam)), gb)
        lhs = float(np.min(c1 * an.progress))
        rhs = (
            d0 / (a * gmin * n_terms)
            + (2 - a) * gb * float(np.sum(beta)) / (a * gmin * n_terms)
            + 2 * gb * ec2 / (a * gmin)
        )
        return BoundCheck.evaluate(name, lhs, rhs, K=K, gamma_min=gmin, gamma_b=gb, mean_c2=ec2)
    if variant is Variant.COR4:
        if L is None or gamma_b is None:
            raise ValueError("COR4 needs L and gamma_b")
        if p.progress.kind is not ProgressKind.SAMPLE_GAP or a != 1.0:
            raise HypothesisViolated("COR4 needs P = f_xi(x) - f_xi(x_p) and alpha = 1")
        gmin = min(c1 / (2 * L), float(gamma_b))
        if np.min(gam) < gmin * (1 - TOL_REL):
            raise HypothesisViolated(f"realized step {float(np.min(gam)):.17g} below gamma_min = {gmin:.17g}")
        fstar = an.fstar
        full = an.full_values()
        if fstar is None:
            fstar = float(np.min(full))
        sigma2 = _sigma_sq(an)
        lhs = float(np.min(full)) - fstar
        rhs = (
            d0 / (c1 * gmin * n_terms)
            + sigma2 * gamma_b / gmin
            + 2 * gamma_b * ec2 / (c1 * gmin)
        )
        return BoundCheck.evaluate(name, lhs, rhs, K=K, gamma_min=gmin, sigma_sq=sigma2, fstar=fstar, mean_c2=ec2)
    _require_nonincreasing(gam, "COR5")
    dmax = float(np.max(an.replay.dist_sq[: K + 1]))
    lhs = float(np.min(c1 * an.progress))
    rhs = dmax / (a * gam[-1] * n_terms) + (2 - a) * float(np.sum(beta)) / (a * n_terms) + 2 * ec2 / a
    return BoundCheck.evaluate(name, lhs, rhs, K=K, D2_max=dmax, mean_c2=ec2)


def _sigma_sq(an: TrajectoryAnalysis) -> float:
    """``mean_i f_i(x_p) - l*_i`` over the whole dataset (exact, no sampling)."""
    prob = an.problem
    xp = an.params.set.points[0]
    if an.params.set.points.shape[0] != 1:
        raise ValueError("sigma^2 needs a singleton solution set")
    lb = prob.known_sample_lower_bounds
    if an.params.beta.lstar is not None:
        lb = np.full(prob.sample_count, an.params.beta.lstar)
    return float(np.mean(prob.sample_values(xp) - lb))


def check_linear_rate(an: TrajectoryAnalysis, mu: float, L: float) -> BoundCheck:
    """Linear contraction of the distance for the strong-gap progress function."""
    p = an.params
    if an.stochastic:
        raise ValueError("linear rate applies to deterministic runs")
    if p.progress.kind is not ProgressKind.STRONG_GAP:
        raise HypothesisViolated("linear rate needs the strong-gap progress function")
    if p.c1**2 * mu > 4 * L:
        raise HypothesisViolated("need c1^2 mu <= 4 L")
    K = an.n - 1
    taken = an.gamma[:K]
    taken = taken[np.isfinite(taken)]
    gmax = float(np.max(taken)) if taken.size else 0.0
    c2 = float(an.c2[0]) if an.n else 0.0
    rho = 1.0 - p.c1**2 * mu / (4 * L)
    d0 = float(an.replay.dist_sq[0])
    rhs = rho**K * d0 + 8 * c2 * L * gmax / (p.c1**2 * mu)
    return BoundCheck.evaluate(BoundName.EX2_LINEAR, float(an.replay.dist_sq[-1]), rhs, K=K, rho=rho, gamma_max=gmax)
