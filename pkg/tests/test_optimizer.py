import numpy as np
import pytest

from unified_descent import (
    BetaSchedule,
    MissingIterates,
    ProgressSpec,
    RunConfig,
    SolutionSet,
    Status,
    StepsizePolicy,
    TrajectoryRecord,
    ZooTag,
    make_quadratic_problem,
    make_zoo_problem,
    replay_samples,
    run_gd,
    run_sgd,
)

POLYAK = StepsizePolicy("POLYAK", c1=1.0, fstar=0.0)


def test_polyak_on_square_halves_each_step():
    f1 = make_zoo_problem(ZooTag.F1_SQUARE)
    rec, summ = run_gd(RunConfig(f1, POLYAK, [1.0], 10))
    xs = rec.iterate_array()[:, 0]
    assert xs.tolist() == [2.0**-k for k in range(11)]
    assert rec.gamma[:-1].tolist() == [0.25] * 10
    assert summ.status is Status.MAX_ITERS and summ.total_steps == 10


def test_start_at_minimizer_stops():
    f1 = make_zoo_problem(ZooTag.F1_SQUARE)
    rec, summ = run_gd(RunConfig(f1, POLYAK, [0.0], 10))
    assert summ.status is Status.CONVERGED_STATIONARY
    assert len(rec) == 1 and np.isnan(rec.gamma[0])
    assert summ.total_steps == 0


def test_quadratic_one_step_with_inverse_L():
    q = make_quadratic_problem(1, 2.0, 2.0, [0.0])
    rec, summ = run_gd(RunConfig(q, StepsizePolicy("CONSTANT", gamma=0.5), [3.0], 1))
    assert summ.final_iterate.tolist() == [0.0]


def test_policy_error_on_bad_fstar():
    f1 = make_zoo_problem(ZooTag.F1_SQUARE)
    rec, summ = run_gd(RunConfig(f1, StepsizePolicy("POLYAK", c1=1.0, fstar=2.0), [1.0], 5))
    assert summ.status is Status.POLICY_ERROR


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_diverging_run_stops_on_nonfinite():
    q = make_quadratic_problem(1, 2.0, 2.0, [0.0])
    rec, summ = run_gd(RunConfig(q, StepsizePolicy("CONSTANT", gamma=1e200), [1.0], 10))
    assert summ.status is Status.POLICY_ERROR
    assert np.all(np.isfinite(rec.iterate_array()))


def test_config_validation():
    f1 = make_zoo_problem(ZooTag.F1_SQUARE)
    with pytest.raises(ValueError):
        RunConfig(f1, POLYAK, [1.0, 2.0], 5)
    with pytest.raises(ValueError):
        RunConfig(f1, POLYAK, [1.0], -1)
    with pytest.raises(ValueError):
        RunConfig(f1, POLYAK, [1.0], 5, alpha=2.0)
    with pytest.raises(ValueError):
        run_sgd(RunConfig(f1, POLYAK, [1.0], 5))


def test_summary_min_progress():
    f1 = make_zoo_problem(ZooTag.F1_SQUARE)
    _, summ = run_gd(RunConfig(f1, POLYAK, [1.0], 5, progress=ProgressSpec("GAP")))
    assert summ.min_progress == 2.0**-10 and summ.min_progress_k == 5


def test_full_batch_sgd_equals_gd(halfspace):
    pol = StepsizePolicy("CONSTANT", gamma=0.1)
    x0 = np.full(4, 0.3)
    rg, sg = run_gd(RunConfig(halfspace, pol, x0, 50))
    rs, ss = run_sgd(RunConfig(halfspace, pol, x0, 50, batch_size=40, seed=99))
    assert rs.iterate_array().tobytes() == rg.iterate_array().tobytes()
    assert rs.f.tobytes() == rg.f.tobytes()
    assert rs.sample_ids[0] == tuple(range(40))


def test_sgd_seed_determinism(halfspace):
    pol = StepsizePolicy("POLYAK_LB", c1=1.0, lstar=0.0)
    a, _ = run_sgd(RunConfig(halfspace, pol, np.zeros(4), 200, seed=5))
    b, _ = run_sgd(RunConfig(halfspace, pol, np.zeros(4), 200, seed=5))
    c, _ = run_sgd(RunConfig(halfspace, pol, np.zeros(4), 200, seed=6))
    assert a.to_csv() == b.to_csv() and a.iterates_to_csv() == b.iterates_to_csv()
    assert a.sample_ids != c.sample_ids


def test_csv_round_trip(halfspace):
    rec, _ = run_sgd(RunConfig(halfspace, StepsizePolicy("CONSTANT", gamma=0.05), np.zeros(4), 30,
                               batch_size=3, seed=2))
    back = TrajectoryRecord.from_csv(rec.to_csv(), rec.iterates_to_csv(), 4, True)
    for name in ("k", "f", "grad_norm_sq", "gamma", "dist_sq", "inner"):
        assert np.array_equal(getattr(back, name), getattr(rec, name), equal_nan=True)
    assert back.sample_ids == rec.sample_ids
    assert back.iterate_array().tobytes() == rec.iterate_array().tobytes()
    assert back.to_csv() == rec.to_csv()


def test_replay_reproduces_logged_values():
    f4 = make_zoo_problem(ZooTag.F4_LOCAL_MIN)
    rec, _ = run_gd(RunConfig(f4, StepsizePolicy("CONSTANT", gamma=0.01), [2.5], 100))
    rp = replay_samples(rec, f4, f4.known_minimizers)
    assert rp.f.tobytes() == rec.f.tobytes()
    assert rp.inner.tobytes() == rec.inner.tobytes()
    assert rp.dist_sq.tobytes() == rec.dist_sq.tobytes()


def test_replay_against_proxy_matches_independent_computation(halfspace):
    rec, summ = run_sgd(RunConfig(halfspace, StepsizePolicy("CONSTANT", gamma=0.05), np.zeros(4), 40, seed=3))
    xp = summ.final_iterate
    rp = replay_samples(rec, halfspace, SolutionSet.proxy(xp))
    ds = halfspace.dataset
    X = TrajectoryRecord.from_csv(rec.to_csv(), rec.iterates_to_csv(), 4, True).iterate_array()
    for j, (x, ids) in enumerate(zip(X, rec.sample_ids)):
        i = ids[0]
        t = -ds.labels[i] * ds.features[i] @ x
        s = 1 / (1 + np.exp(-t))
        g = -ds.labels[i] * s * (1 - s) * ds.features[i] + ds.reg_lambda * x
        assert rp.inner[j] == pytest.approx(g @ (x - xp), rel=1e-10, abs=1e-14)
        assert rp.dist_sq[j] == pytest.approx((x - xp) @ (x - xp), rel=1e-12, abs=1e-15)


def test_zero_step_replay_is_empty():
    f1 = make_zoo_problem(ZooTag.F1_SQUARE)
    rec = TrajectoryRecord(1, False, np.empty(0, dtype=np.int64), *([np.empty(0)] * 5), [], {})
    rp = replay_samples(rec, f1, f1.known_minimizers)
    assert rp.f.size == 0 and rp.iterates.shape == (0, 1)


def test_thinned_iterates_cannot_replay():
    f1 = make_zoo_problem(ZooTag.F1_SQUARE)
    rec, _ = run_gd(RunConfig(f1, StepsizePolicy("CONSTANT", gamma=0.1), [1.0], 20, record_stride=5))
    assert set(rec.iterates) == {0, 5, 10, 15, 20}
    with pytest.raises(MissingIterates):
        replay_samples(rec, f1, f1.known_minimizers)
    rec, _ = run_gd(RunConfig(f1, StepsizePolicy("CONSTANT", gamma=0.1), [1.0], 20, record_iterates=False))
    assert list(rec.iterates) == []
    with pytest.raises(MissingIterates):
        rec.iterate_array()


@pytest.mark.parametrize("q", [
    make_quadratic_problem(3, 1.0, 4.0, [1.0, 0.0, -1.0]),
    make_quadratic_problem(2, 2.0, 2.0, [0.0, 0.0]),
])
def test_polyak_distance_nonincreasing(q):
    rec, _ = run_gd(RunConfig(q, POLYAK, [5.0] * q.dimension, 60))
    assert np.all(np.diff(rec.dist_sq) <= 1e-12 * rec.dist_sq[:-1])


def test_beta_schedule_json():
    b = BetaSchedule("SAMPLE_GAP_AT_PROJ", lstar=0.0)
    assert BetaSchedule.from_json(b.to_json()) == b
    assert BetaSchedule.from_json(None) == BetaSchedule()
    with pytest.raises(ValueError):
        BetaSchedule("CONST", -1.0)
