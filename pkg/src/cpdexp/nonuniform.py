"""
Integrators for a position-dependent field ``B(x)``.

``m1b_step`` is the second-order method with the linear part frozen at the
midpoint field, ``hK_n = h skew(B((x_n + x_{n+1}) / 2)) / eps``.  Because
``K_n`` depends on the unknown ``x_{n+1}`` the step is solved by nested fixed
points: the outer loop updates ``x_{n+1}``, the inner loop is the ordinary
stage-moment iteration of the degree-1 method at the current ``K_n``.

``m2b_step`` composes three ``m1b_step`` calls with the Triple Jump weights.
"""
from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError
from .model import State
from .phi import phi_skew, skew_matrix
from .uniform import IterationStats, force_free_positions, gauss_legendre


@dataclass(frozen=True)
class TripleJumpWeights:
    a1: float
    a2: float
    a3: float

    def __iter__(self):
        return iter((self.a1, self.a2, self.a3))


def triple_jump_weights():
    """``a1 = a3 = 1 / (2 - 2^(1/3))``, ``a2 = -2^(1/3) / (2 - 2^(1/3))``."""
    c = 2.0 ** (1.0 / 3.0)
    a = 1.0 / (2.0 - c)
    return TripleJumpWeights(a, -c * a, a)


TRIPLE_JUMP = triple_jump_weights()


def _hK(p, y, h):
    return (h / p.epsilon) * skew_matrix(p.B(y))


class _DegreeOne:
    """Stage solve of the degree-1 method at a fixed ``hK``.

    With ``A = tau phi_2`` and ``C = tau phi_1`` the stage polynomial is the
    chord ``X(tau) = x + tau d``, ``d = h phi_1 v + h^2 phi_2 I_0``, so the only
    unknown is the moment ``I_0 = int_0^1 F(X(tau)) dtau``.  Algebraically the
    same iteration as :class:`~cpdexp.uniform.StageSystem` with the degree-1
    coefficients, without the general bookkeeping.
    """

    def __init__(self, hK, h, cfg):
        self.hK = hK
        self.phi0, self.phi1, self.phi2 = phi_skew(hK, 2)
        self.h = h
        self.cfg = cfg
        self.nodes, self.weights = gauss_legendre(cfg.quad_nodes)

    def free_flow_moment(self, force, x, v):
        X = force_free_positions(self.hK, x, v, self.h, self.nodes)
        return self.weights @ force(X)

    def solve(self, force, x, v, I0):
        h, cfg, tn = self.h, self.cfg, self.nodes[:, None]
        a = h * (self.phi1 @ v)
        P2 = (h * h) * self.phi2
        residual = np.inf
        for it in range(1, cfg.fp_maxit + 1):
            d = a + P2 @ I0
            new = self.weights @ force(x + tn * d)
            residual = float(np.abs(new - I0).max())
            I0 = new
            if residual <= cfg.fp_tol * max(1.0, float(np.abs(I0).max())):
                x_new = x + a + P2 @ I0
                v_new = self.phi0 @ v + h * (self.phi1 @ I0)
                return x_new, v_new, I0, IterationStats(it, residual)
        raise ConvergenceError(
            f"stage iteration did not converge in {cfg.fp_maxit} iterations "
            f"(last increment {residual:.3e})", residual)


def m1b_step(p, s, cfg):
    """One step of the midpoint-field method; returns ``(State, IterationStats)``.

    On a uniform field the midpoint matrix is the constant one and the result
    coincides with :func:`cpdexp.uniform.step` using the degree-1 coefficients.
    """
    h = cfg.h
    if h == 0:
        raise ValueError("step size must be nonzero")
    force = p.potential.F
    x, v = s.x, s.v
    stats = IterationStats()

    # outer initial guess: degree-1 step with the field frozen at x_n
    system = _DegreeOne(_hK(p, x, h), h, cfg)
    y, w, I0, inner = system.solve(force, x, v, system.free_flow_moment(force, x, v))
    stats.iterations += inner.iterations
    stats.residual = inner.residual

    outer = np.inf
    for k in range(1, cfg.fp_maxit + 1):
        system = _DegreeOne(_hK(p, 0.5 * (x + y), h), h, cfg)
        try:
            y_new, w, I0, inner = system.solve(force, x, v, I0)
        except ConvergenceError as err:
            raise ConvergenceError(
                f"inner stage iteration failed at outer iterate {k}: {err}",
                residual=outer, inner_residual=err.residual) from err
        stats.iterations += inner.iterations
        stats.residual = max(stats.residual, inner.residual)
        outer = float(np.abs(y_new - y).max())
        y = y_new
        if outer <= cfg.fp_tol * max(1.0, float(np.abs(y).max())):
            stats.outer_iterations = k
            stats.outer_residual = outer
            return State(s.t + h, y, w), stats
    raise ConvergenceError(
        f"midpoint-field iteration did not converge in {cfg.fp_maxit} iterations "
        f"(last increment {outer:.3e})", residual=outer, inner_residual=stats.residual)


def m2b_step(p, s, cfg, weights=TRIPLE_JUMP):
    """Fourth-order Triple Jump composition of :func:`m1b_step`."""
    h = cfg.h
    if h == 0:
        raise ValueError("step size must be nonzero")
    stats = IterationStats()
    state = s
    for i, a in enumerate(reversed(tuple(weights))):
        try:
            state, sub = m1b_step(p, state, cfg.with_h(a * h))
        except ConvergenceError as err:
            raise ConvergenceError(f"sub-step {i + 1} of 3: {err}", err.residual,
                                   err.inner_residual) from err
        stats += sub
    return State(s.t + h, state.x, state.v), stats
