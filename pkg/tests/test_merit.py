import numpy as np
import pytest

from mpcc_newton.merit import assemble_F_fb, merit, merit_value
from mpcc_newton.model import PrimalDual
from mpcc_newton.problem import (
    obstacle,
    obstacle_family,
    perturbed,
    reference_point,
    toy,
    toy_multipliers,
)
from mpcc_newton.residual import assemble_F

PROBLEMS = [toy(0.1), perturbed(0.2), obstacle(3)]


def _random_point(prob, rng, scale=None):
    n, l, m, p = prob.dims
    scale = n if scale is None else scale
    return PrimalDual.from_vector(rng.uniform(-scale, scale, n + l + m + 2 * p), prob.dims)


def _fd_gradient(prob, z, rel_step=1e-6):
    v = z.stack()
    grad = np.zeros(v.size)
    for k in range(v.size):
        h = rel_step * (1.0 + abs(v[k]))
        e = np.zeros(v.size)
        e[k] = h
        up = merit_value(prob, PrimalDual.from_vector(v + e, prob.dims))
        down = merit_value(prob, PrimalDual.from_vector(v - e, prob.dims))
        grad[k] = (up - down) / (2 * h)
    return grad


def _known_roots():
    lam, mu, nu = toy_multipliers()
    alt = toy_multipliers(alternative=True)
    roots = [
        (toy(0.1), PrimalDual(np.zeros(3), lam, [], mu, nu)),
        (toy(0.1), PrimalDual(np.zeros(3), alt[0], [], alt[1], alt[2])),
        (perturbed(0.2), reference_point(perturbed(0.2))),
    ]
    roots += [(obstacle(3), z) for _d, z in obstacle_family(3)]
    return roots


def test_F_fb_layout():
    prob = obstacle(3)
    z = _random_point(prob, np.random.default_rng(0))
    assert assemble_F_fb(prob, z).shape == (9 + 3 + 3 + 12,)
    me = merit(prob, z)
    assert me.grad.shape == (z.size,)
    assert me.value == pytest.approx(0.5 * np.sum(me.F_fb ** 2))


def test_merit_vanishes_at_roots():
    for prob, z in _known_roots():
        me = merit(prob, z)
        assert np.max(np.abs(me.F_fb)) <= 1e-12
        assert np.max(np.abs(me.grad)) <= 1e-14 or me.value <= 1e-28


def test_merit_gradient_exact_zero_at_exact_roots():
    lam, mu, nu = toy_multipliers()
    me = merit(toy(0.1), PrimalDual(np.zeros(3), lam, [], mu, nu))
    assert me.value == 0.0
    assert np.max(np.abs(me.grad)) <= 1e-14
    me = merit(perturbed(0.2), reference_point(perturbed(0.2)))
    assert np.max(np.abs(me.grad)) <= 1e-14


@pytest.mark.parametrize("prob", PROBLEMS, ids=lambda p: p.name)
def test_gradient_matches_finite_differences(prob):
    rng = np.random.default_rng(1)
    for _ in range(40):
        z = _random_point(prob, rng)
        grad = merit(prob, z).grad
        fd = _fd_gradient(prob, z)
        assert np.linalg.norm(fd - grad) <= 1e-5 * max(1.0, np.linalg.norm(grad))


@pytest.mark.slow
@pytest.mark.parametrize("prob", PROBLEMS, ids=lambda p: p.name)
def test_gradient_matches_finite_differences_full(prob):
    rng = np.random.default_rng(11)
    for _ in range(1000):
        z = _random_point(prob, rng)
        grad = merit(prob, z).grad
        fd = _fd_gradient(prob, z)
        assert np.linalg.norm(fd - grad) <= 1e-5 * max(1.0, np.linalg.norm(grad))


def test_norm_equivalence():
    rng = np.random.default_rng(2)
    for prob in PROBLEMS:
        for _ in range(2000):
            z = _random_point(prob, rng, scale=rng.choice([1e-3, 1.0, 10.0]))
            nF = assemble_F(prob, z).norm()
            nFB = np.linalg.norm(assemble_F_fb(prob, z))
            assert nFB / 8.0 <= nF <= 8.0 * nFB


def test_zero_sets_coincide_on_samples():
    rng = np.random.default_rng(3)
    for prob in PROBLEMS:
        for _ in range(200):
            z = _random_point(prob, rng)
            assert (assemble_F(prob, z).norm() == 0.0) == (np.linalg.norm(assemble_F_fb(prob, z)) == 0.0)
    for prob, z in _known_roots():
        assert assemble_F(prob, z).norm() <= 1e-12
        assert np.linalg.norm(assemble_F_fb(prob, z)) <= 1e-12


@pytest.mark.parametrize("mu, nu", [(0.0, -0.7), (-0.4, 0.0), (0.0, 0.0)])
def test_merit_continuous_across_theta4_switch(mu, nu):
    prob = toy(0.1)
    rng = np.random.default_rng(4)
    for _ in range(20):
        x = rng.uniform(-1.0, 1.0, 3)
        lam = rng.uniform(-1.0, 1.0, 2)
        evals = []
        for s in (-1e-13, 1e-13):
            # step across the boundary in the coordinate that sits at zero
            dmu = s if mu == 0.0 else 0.0
            dnu = s if nu == 0.0 else 0.0
            evals.append(merit(prob, PrimalDual(x, lam, [], [mu + dmu], [nu + dnu])))
        a, b = evals
        assert abs(a.value - b.value) <= 1e-10
        assert np.max(np.abs(a.grad - b.grad)) <= 1e-10
