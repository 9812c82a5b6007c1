import numpy as np
import pytest

from mpcc_newton.diagnostics import StationarityClass, classify_stationarity
from mpcc_newton.errors import ConfigError
from mpcc_newton.harness import derive_seed, random_start
from mpcc_newton.model import PrimalDual
from mpcc_newton.problem import obstacle, obstacle_multipliers, perturbed, reference_point, toy
from mpcc_newton.residual import assemble_DF, assemble_F
from mpcc_newton.solver import (
    InverseBfgs,
    SolveOptions,
    SolveStatus,
    StepKind,
    newton_direction,
    solve_global,
    solve_local,
)


def _toy_root():
    return reference_point(toy(0.1))


def _toy_j14_start(rng):
    # nu moves first, so both phi rows come from (a, nu) near the root
    zbar = _toy_root().stack()
    delta = rng.uniform(-0.5e-3, 0.5e-3, zbar.size)
    delta[-1] = rng.choice([-1e-3, 1e-3])
    return zbar, zbar + delta


def _toy_j12_start(rng):
    zbar = _toy_root().stack()
    delta = rng.uniform(-0.5e-3, 0.5e-3, zbar.size)
    delta[1] = -1e-3
    return zbar, zbar + delta


def _obstacle_j23_start(N, rng):
    zbar = obstacle_multipliers(N, np.ones(N, dtype=int)).stack()
    delta = rng.uniform(-0.5e-3, 0.5e-3, zbar.size)
    om = 3 * N + N + N
    delta[om:om + N] = rng.choice([-1e-3, 1e-3], N)
    return zbar, zbar + delta


def test_options_defaults_and_validation():
    opts = SolveOptions()
    assert (opts.q, opts.tau_abs, opts.max_iter) == (0.999, 1e-11, 1000)
    assert not opts.enable_stationarity_stop
    assert opts.lq_repair
    with pytest.raises(ConfigError):
        SolveOptions(q=1.0)
    with pytest.raises(ConfigError):
        SolveOptions(beta=0.0)
    with pytest.raises(ConfigError):
        SolveOptions(tau_abs=0.0)
    with pytest.raises(ConfigError):
        SolveOptions(max_iter=-1)
    with pytest.raises(ConfigError):
        SolveOptions(max_iter=True)
    with pytest.raises(ConfigError):
        SolveOptions(newton_alpha_min=0.0)
    with pytest.raises(ConfigError):
        SolveOptions(merit_direction="newton")
    with pytest.raises(ConfigError):
        opts.replace(gamma=0.1)
    assert opts.merit_direction == "gradient"
    assert opts.replace(max_iter=5).max_iter == 5


def test_newton_direction_at_nondegenerate_root_is_zero():
    prob = perturbed(0.2)
    step = newton_direction(prob, reference_point(prob))
    assert not step.singular
    assert np.all(step.direction == 0.0)


def test_newton_matrix_singular_at_toy_root():
    step = newton_direction(toy(0.1), _toy_root())
    assert step.singular
    assert step.direction is None


def test_newton_direction_solves_linearization():
    prob = obstacle(3)
    rng = np.random.default_rng(0)
    found = 0
    for _ in range(20):
        z = random_start(prob, int(rng.integers(2 ** 32)))
        step = newton_direction(prob, z)
        if step.singular:
            continue
        found += 1
        ev = assemble_F(prob, z)
        DF = assemble_DF(prob, z, ev).DF
        assert np.allclose(DF @ step.direction, -ev.F, atol=1e-8 * (1.0 + ev.norm()))
    assert found > 0


@pytest.mark.parametrize("seed", range(100))
def test_local_one_step_toy(seed):
    prob = toy(0.1)
    zbar, start = _toy_j14_start(np.random.default_rng(seed))
    report = solve_local(prob, PrimalDual.from_vector(start, prob.dims))
    assert report.status == SolveStatus.CONVERGED_RESIDUAL
    assert report.iterations == 1
    assert report.final_residual_norm <= 1e-11
    assert np.allclose(report.final_z.stack(), zbar, atol=1e-12)


@pytest.mark.parametrize("seed", range(100))
def test_local_one_step_obstacle(seed):
    prob = obstacle(4)
    zbar, start = _obstacle_j23_start(4, np.random.default_rng(seed))
    report = solve_local(prob, PrimalDual.from_vector(start, prob.dims))
    assert report.status == SolveStatus.CONVERGED_RESIDUAL
    assert report.iterations == 1
    assert np.allclose(report.final_z.stack(), zbar, atol=1e-12)


def test_local_stops_on_singular_matrix():
    prob = toy(0.1)
    _zbar, start = _toy_j12_start(np.random.default_rng(0))
    report = solve_local(prob, PrimalDual.from_vector(start, prob.dims))
    assert report.status == SolveStatus.LINE_SEARCH_FAILURE
    assert report.iterations == 0


def test_local_perturbed_converges_fast():
    prob = perturbed(0.2)
    rng = np.random.default_rng(1)
    zbar = reference_point(prob).stack()
    for _ in range(20):
        start = zbar + rng.uniform(-1e-2, 1e-2, zbar.size)
        report = solve_local(prob, PrimalDual.from_vector(start, prob.dims))
        assert report.converged
        assert report.iterations <= 2


def test_residual_comparable_to_distance_near_root():
    prob = perturbed(0.2)
    rng = np.random.default_rng(2)
    zbar = reference_point(prob).stack()
    for radius in (1e-4, 1e-5, 1e-6, 1e-7, 1e-8):
        for _ in range(20):
            delta = rng.uniform(-radius, radius, zbar.size)
            nF = assemble_F(prob, PrimalDual.from_vector(zbar + delta, prob.dims)).norm()
            ratio = nF / np.linalg.norm(delta)
            assert 0.1 <= ratio <= 10.0


def test_global_from_root_takes_no_steps():
    prob = perturbed(0.2)
    report = solve_global(prob, reference_point(prob))
    assert report.status == SolveStatus.CONVERGED_RESIDUAL
    assert report.iterations == 0
    assert report.steps == []


def test_global_repair_near_toy_root():
    prob = toy(0.1)
    zbar, start = _toy_j12_start(np.random.default_rng(3))
    report = solve_global(prob, PrimalDual.from_vector(start, prob.dims))
    assert report.converged
    assert report.iterations == 1
    assert report.steps[0].kind == StepKind.LQ_REPAIRED
    assert np.allclose(report.final_z.stack(), zbar, atol=1e-12)


def _check_monotone(report):
    hist = report.merit_history
    assert all(b <= a for a, b in zip(hist, hist[1:]))
    assert len(hist) == report.iterations + 1


def test_global_toy_runs_converge():
    prob = toy(0.1)
    for i in range(20):
        z0 = random_start(prob, derive_seed(2024, i))
        report = solve_global(prob, z0)
        assert report.converged, (i, report.status)
        assert np.linalg.norm(report.final_z.x) <= 1e-10
        assert classify_stationarity(prob, report.final_z) in (StationarityClass.M, StationarityClass.S)
        _check_monotone(report)


@pytest.mark.slow
def test_global_toy_runs_converge_full():
    prob = toy(0.1)
    iters = []
    for i in range(1000):
        report = solve_global(prob, random_start(prob, derive_seed(7, i)))
        assert report.converged, (i, report.status)
        assert np.linalg.norm(report.final_z.x) <= 1e-10
        iters.append(report.iterations)
    assert np.median(iters) <= 30


def test_global_without_repair_still_descends():
    prob = toy(0.1)
    opts = SolveOptions(lq_repair=False, max_iter=50)
    for i in range(5):
        report = solve_global(prob, random_start(prob, derive_seed(5, i)), opts)
        assert all(s.kind != StepKind.LQ_REPAIRED for s in report.steps)
        _check_monotone(report)


def _check_perturbed_outcome(prob, report, opts):
    _check_monotone(report)
    assert all(s.alpha >= opts.newton_alpha_min for s in report.steps if s.kind == StepKind.NEWTON_LINESEARCH)
    if report.status == SolveStatus.CONVERGED_RESIDUAL:
        assert np.linalg.norm(report.final_z.x - [1.0, 0.0]) <= 1e-8
    elif report.status == SolveStatus.STATIONARY_MERIT:
        assert report.final_merit_grad_norm <= 1e-9
        assert report.final_residual_norm >= 1e-3
        assert classify_stationarity(prob, report.final_z) != StationarityClass.M


def test_global_perturbed_outcomes():
    prob = perturbed(0.2)
    opts = SolveOptions(enable_stationarity_stop=True, merit_direction="bfgs")
    counts = {s: 0 for s in SolveStatus}
    for i in range(20):
        report = solve_global(prob, random_start(prob, derive_seed(13, i)), opts)
        _check_perturbed_outcome(prob, report, opts)
        counts[report.status] += 1
    assert counts[SolveStatus.STATIONARY_MERIT] >= 1
    assert counts[SolveStatus.CONVERGED_RESIDUAL] >= 1


@pytest.mark.slow
def test_global_perturbed_both_outcomes_occur():
    prob = perturbed(0.2)
    opts = SolveOptions(enable_stationarity_stop=True, merit_direction="bfgs")
    counts = {s: 0 for s in SolveStatus}
    for i in range(1000):
        report = solve_global(prob, random_start(prob, derive_seed(13, i)), opts)
        _check_perturbed_outcome(prob, report, opts)
        counts[report.status] += 1
    assert counts[SolveStatus.CONVERGED_RESIDUAL] >= 50
    assert counts[SolveStatus.STATIONARY_MERIT] >= 50


@pytest.mark.slow
@pytest.mark.parametrize("N", [64, 256])
def test_global_obstacle_large(N):
    prob = obstacle(N)
    for i in range(10):
        report = solve_global(prob, random_start(prob, derive_seed(3, i)))
        assert report.converged
        assert report.iterations <= 50
        assert np.linalg.norm(report.final_z.x) <= 1e-10
        assert classify_stationarity(prob, report.final_z) == StationarityClass.M


def test_max_iter_zero_reports_start():
    prob = toy(0.1)
    z0 = random_start(prob, 1)
    report = solve_global(prob, z0, SolveOptions(max_iter=0))
    assert report.status == SolveStatus.MAX_ITER
    assert report.iterations == 0
    assert np.array_equal(report.final_z.stack(), z0.stack())
    assert report.step_counts()["newton_full"] == 0


def test_local_stops_on_sup_norm():
    prob = perturbed(0.2)
    t = 1e-3
    z0 = PrimalDual([1.0 + t, 0.0], [], [], [0.0], [-0.2 + t])
    ev = assemble_F(prob, z0)
    assert np.allclose(ev.F, [t, t, 0.0, 0.0])
    opts = SolveOptions(tau_abs=1.2 * t, max_iter=0)
    report = solve_local(prob, z0, opts)
    assert report.status == SolveStatus.CONVERGED_RESIDUAL
    assert report.iterations == 0
    assert report.final_residual_norm > opts.tau_abs


def test_inverse_bfgs_secant_and_curvature():
    rng = np.random.default_rng(0)
    B = rng.normal(size=(5, 5))
    A = B @ B.T + 5.0 * np.eye(5)
    bfgs = InverseBfgs()
    g = rng.normal(size=5)
    assert not bfgs.active
    assert np.array_equal(bfgs.apply(g), g)
    assert not bfgs.update(np.ones(5), -np.ones(5))
    assert not bfgs.active
    for _ in range(8):
        s = rng.normal(size=5)
        assert bfgs.update(s, A @ s)
        assert np.allclose(bfgs.apply(A @ s), s)
    assert np.all(np.linalg.eigvalsh(bfgs.H) > 0.0)
    bfgs.reset()
    assert not bfgs.active
