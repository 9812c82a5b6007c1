"""
Fischer-Burmeister merit function Phi_FB(z) = 1/2 |F_FB(z)|^2.

F_FB replaces min(-g_i, lam_i) by pi_FB(-g_i, lam_i) and each NMS pair by the four entries of
theta_FB(G_i, H_i, mu_i, nu_i). Phi_FB is continuously differentiable; its gradient is J^T F_FB
for a derivative selection J in which a component contributes nothing wherever its value is 0.
"""
from __future__ import annotations
from dataclasses import dataclass

import numpy as np

from .model import PrimalDual
from .nms import theta_fb
from .problem import MpccProblem, lagrangian
from .residual import offsets


@dataclass(frozen=True)
class MeritEval:
    F_fb: np.ndarray
    value: float
    grad: np.ndarray

    @property
    def grad_norm(self) -> float:
        return float(np.linalg.norm(self.grad))


def _sign(t: float) -> float:
    return 1.0 if t >= 0 else -1.0


def _fb_values(problem: MpccProblem, z: PrimalDual):
    x = z.x
    lag = lagrangian(problem, z)
    gx, hx, Gx, Hx = problem.g(x), problem.h(x), problem.G(x), problem.H(x)
    a, b = -gx, z.lam
    ncp = np.hypot(a, b) - a - b
    quads = [theta_fb(w) for w in zip(Gx, Hx, z.mu, z.nu)]
    nms = np.array(quads, dtype=float).reshape(-1)
    F_fb = np.concatenate([lag.grad_x, ncp, np.asarray(hx, dtype=float), nms])
    return lag, gx, hx, Gx, Hx, ncp, nms, F_fb


def assemble_F_fb(problem: MpccProblem, z: PrimalDual) -> np.ndarray:
    z.check_dims(problem.dims)
    return _fb_values(problem, z)[-1]


def merit_value(problem: MpccProblem, z: PrimalDual) -> float:
    F_fb = assemble_F_fb(problem, z)
    return 0.5 * float(F_fb @ F_fb)


def _fb_partials(u: float, v: float):
    """Gradient of pi_FB at (u, v); only called where pi_FB(u, v) != 0, so r > 0."""
    r = float(np.hypot(u, v))
    return u / r - 1.0, v / r - 1.0


def merit(problem: MpccProblem, z: PrimalDual) -> MeritEval:
    dims = problem.dims
    z.check_dims(dims)
    n, l, m, p = dims
    x = z.x
    lag, gx, hx, Gx, Hx, ncp, nms, F_fb = _fb_values(problem, z)
    Jg, Jh, JG, JH = (problem.jacobian(blk, x) for blk in ("g", "h", "G", "H"))
    rL = lag.grad_x

    # weights on grad g_i, grad G_i, grad H_i and on the multiplier coordinates
    w_g = np.zeros(l)
    w_lam = np.zeros(l)
    for i in range(l):
        v = ncp[i]
        if v == 0.0:
            continue
        da, db = _fb_partials(-gx[i], z.lam[i])
        w_g[i] = -v * da
        w_lam[i] = v * db

    w_G, w_H = np.zeros(p), np.zeros(p)
    w_mu, w_nu = np.zeros(p), np.zeros(p)
    for i in range(p):
        a, b, mu, nu = Gx[i], Hx[i], z.mu[i], z.nu[i]
        t1, t2, t3, t4 = nms[4 * i:4 * i + 4]
        if t1 != 0.0:
            # t1 = |pi_FB(a, b)|, so t1 * sign(pi_FB) = pi_FB(a, b)
            raw = float(np.hypot(a, b) - a - b)
            da, db = _fb_partials(a, b)
            w_G[i] += raw * da
            w_H[i] += raw * db
        if t2 != 0.0:
            da, dmu = _fb_partials(abs(a), abs(mu))
            w_G[i] += t2 * da * _sign(a)
            w_mu[i] += t2 * dmu * _sign(mu)
        if t3 != 0.0:
            db, dnu = _fb_partials(abs(b), abs(nu))
            w_H[i] += t3 * db * _sign(b)
            w_nu[i] += t3 * dnu * _sign(nu)
        if t4 != 0.0:
            dmu, dnu = _fb_partials(abs(mu), abs(nu))
            w_mu[i] += t4 * dmu * _sign(mu)
            w_nu[i] += t4 * dnu * _sign(nu)

    grad = np.zeros(n + l + m + 2 * p)
    ox, ol, oe, om, on = offsets(dims)
    grad[ox:ox + n] = lag.hess_xx.T @ rL + Jg.T @ w_g + Jh.T @ hx + JG.T @ w_G + JH.T @ w_H
    grad[ol:ol + l] = Jg @ rL + w_lam
    grad[oe:oe + m] = Jh @ rL
    grad[om:om + p] = JG @ rL + w_mu
    grad[on:on + p] = JH @ rL + w_nu
    return MeritEval(F_fb, 0.5 * float(F_fb @ F_fb), grad)
