import numpy as np
import pytest

from unified_descent import (
    NegativeGap,
    ProgressKind,
    ProgressSpec,
    SolutionSet,
    ZooTag,
    eval_progress,
    eval_sample_progress,
    make_quadratic_problem,
    make_zoo_problem,
)

DETERMINISTIC = [
    ProgressSpec(ProgressKind.GAP),
    ProgressSpec(ProgressKind.STRONG_GAP, mu=2.0),
    ProgressSpec(ProgressKind.GRAD_NORM_OVER_L, L=2.0),
    ProgressSpec(ProgressKind.GAP_PLUS_GRAD, L=2.0),
    ProgressSpec(ProgressKind.AIMING_VALUE),
]


def test_examples():
    f3 = make_zoo_problem(ZooTag.F3_DOUBLE_WELL)
    assert eval_progress(ProgressSpec("GAP", fstar=0.0), f3, [0.0], f3.known_minimizers) == 0.5
    f1 = make_zoo_problem(ZooTag.F1_SQUARE)
    assert eval_progress(ProgressSpec("GRAD_NORM_OVER_L", L=2.0), f1, [1.0]) == 2.0
    q = make_quadratic_problem(1, 2.0, 2.0, [0.0])
    assert eval_progress(ProgressSpec("STRONG_GAP", mu=2.0), q, [1.0], q.known_minimizers) == 2.0


def test_required_constants():
    with pytest.raises(ValueError):
        ProgressSpec("STRONG_GAP")
    with pytest.raises(ValueError):
        ProgressSpec("GRAD_NORM_OVER_L")
    with pytest.raises(ValueError):
        ProgressSpec("SAMPLE_GRAD_NORM")
    ProgressSpec("SAMPLE_GRAD_NORM", raw_grad_norm=True)


def test_negative_gap_clamp_and_reject():
    f1 = make_zoo_problem(ZooTag.F1_SQUARE)
    assert eval_progress(ProgressSpec("GAP", fstar=5e-13), f1, [0.0]) == 0.0
    with pytest.raises(NegativeGap):
        eval_progress(ProgressSpec("GAP", fstar=1.0), f1, [0.0])


def test_fstar_falls_back_to_problem():
    f4 = make_zoo_problem(ZooTag.F4_LOCAL_MIN)
    assert eval_progress(ProgressSpec("GAP"), f4, [1.5]) == pytest.approx(0.5625)


def test_json_round_trip():
    for spec in DETERMINISTIC + [ProgressSpec("SAMPLE_GRAD_NORM", raw_grad_norm=True)]:
        assert ProgressSpec.from_json(spec.to_json()) == spec


@pytest.mark.parametrize("tag", list(ZooTag))
@pytest.mark.parametrize("spec", DETERMINISTIC, ids=lambda s: s.kind.value)
def test_nonnegative_on_grid(tag, spec):
    p = make_zoo_problem(tag)
    for x in np.linspace(-5, 5, 10_000)[::7]:
        assert eval_progress(spec, p, [x], p.known_minimizers) >= 0.0


@pytest.mark.parametrize("tag", list(ZooTag))
def test_gap_plus_grad_dominates(tag):
    p = make_zoo_problem(tag)
    gap, gn, gpg = (ProgressSpec("GAP"), ProgressSpec("GRAD_NORM_OVER_L", L=2.0),
                    ProgressSpec("GAP_PLUS_GRAD", L=2.0))
    for x in np.linspace(-5, 5, 501):
        v = eval_progress(gpg, p, [x])
        assert v >= eval_progress(gap, p, [x])
        assert v >= eval_progress(gn, p, [x]) / 2 - 1e-15


@pytest.mark.parametrize("spec", DETERMINISTIC, ids=lambda s: s.kind.value)
def test_convex_f1_satisfies_inequality(spec):
    f1 = make_zoo_problem(ZooTag.F1_SQUARE)
    S = f1.known_minimizers
    for x in np.linspace(-5, 5, 10_000):
        inner = f1.gradient([x])[0] * x
        assert inner >= eval_progress(spec, f1, [x], S) - 1e-12


def test_sample_progress(halfspace, rng):
    ds = halfspace.dataset
    xp = rng.normal(size=4)
    S = SolutionSet.proxy(xp)
    gap = ProgressSpec("SAMPLE_GAP")
    assert eval_sample_progress(gap, halfspace, 3, xp, S) == 0.0
    for _ in range(20):
        i = int(rng.integers(0, ds.n))
        x = rng.normal(size=4)

        def fi(z):
            t = -ds.labels[i] * ds.features[i] @ z
            return 1 / (1 + np.exp(-t)) + 0.5 * ds.reg_lambda * z @ z

        assert eval_sample_progress(gap, halfspace, i, x, S) == pytest.approx(fi(x) - fi(xp), rel=1e-12, abs=1e-15)


def test_sample_grad_norm(halfspace):
    raw = ProgressSpec("SAMPLE_GRAD_NORM", raw_grad_norm=True)
    scaled = ProgressSpec("SAMPLE_GRAD_NORM", L=4.0)
    x = np.array([0.3, -0.2, 0.1, 0.5])
    g = halfspace.sample_gradient(5, x)
    assert eval_sample_progress(raw, halfspace, 5, x) == pytest.approx(g @ g)
    assert eval_sample_progress(scaled, halfspace, 5, x) == pytest.approx(g @ g / 4)


def test_sample_gap_can_be_negative(halfspace):
    # x_p minimizes f, not each f_i, so some f_i(x) - f_i(x_p) are below zero
    S = SolutionSet.proxy(np.array([1.0, 1.0, 1.0, 1.0]))
    vals = [eval_sample_progress(ProgressSpec("SAMPLE_GAP"), halfspace, i, np.zeros(4), S) for i in range(40)]
    assert min(vals) < 0 < max(vals)


def test_sample_progress_needs_samples():
    with pytest.raises(ValueError):
        eval_sample_progress(ProgressSpec("SAMPLE_GAP"), make_zoo_problem("F1_SQUARE"), 0, [1.0],
                             SolutionSet.singleton([0.0]))
