"""
Reference integrators: the Boris pusher and the averaged vector field method.
"""
import numpy as np

from .errors import ConvergenceError
from .model import State
from .phi import skew_matrix
from .uniform import IterationStats, gauss_legendre


def boris_rotate(v, t):
    """Boris rotation of ``v`` by the half-angle vector ``t = (h/2) B / eps``.

    This is the Cayley transform of ``v -> v x B / eps``: exactly norm
    preserving, with rotation angle ``2 atan(|t|)`` instead of ``2 |t|``.
    """
    s = 2.0 * t / (1.0 + t @ t)
    vp = v + np.cross(v, t)
    return v + np.cross(vp, s)


def _solve_cross(w, t):
    # v - v x t = w
    return (w + np.cross(w, t) + (w @ t) * t) / (1.0 + t @ t)


def boris_step(p, s, h):
    """Boris method in synchronised one-step form.

    With ``v_n`` the mean of the staggered half-step velocities, the classical
    leapfrog ``x_{n+1} = x_n + h v_{n+1/2}`` becomes

        v_{n+1/2} = v_n + h/2 (v_n x B(x_n) / eps + F(x_n))
        x_{n+1}   = x_n + h v_{n+1/2}
        v_{n+1} - h/2 v_{n+1} x B(x_{n+1}) / eps = v_{n+1/2} + h/2 F(x_{n+1})

    so the velocity sequence is that of the staggered scheme at integer times.
    The two half steps compose to the Boris rotation (:func:`boris_rotate`)
    when ``F = 0`` and ``B`` is uniform.
    """
    if h == 0:
        raise ValueError("step size must be nonzero")
    x, v = s.x, s.v
    c = 0.5 * h / p.epsilon
    v_half = v + c * np.cross(v, p.B(x)) + 0.5 * h * p.F(x)
    x_new = x + h * v_half
    t = c * np.asarray(p.B(x_new), dtype=float)
    v_new = _solve_cross(v_half + 0.5 * h * p.F(x_new), t)
    return State(s.t + h, x_new, v_new)


def avf_solve(p, s, cfg):
    """AVF step on ``y = (x, v)``; returns ``(State, IterationStats)``.

    The scheme is ``y1 = y0 + h int_0^1 f(y0 + tau (y1 - y0)) dtau``.  Its
    position row is ``x1 = x0 + h (v0 + v1) / 2``.  The velocity row is linear in
    ``v1`` once the path ``X(tau) = x0 + tau (x1 - x0)`` is fixed, so each sweep
    of the fixed point (on ``x1``) solves that 3x3 system exactly.  This keeps the
    iteration contractive when ``h / eps`` is large; the discrete solution is the
    plain AVF one.
    """
    h = cfg.h
    if h == 0:
        raise ValueError("step size must be nonzero")
    nodes, weights = gauss_legendre(cfg.quad_nodes)
    x0, v0 = s.x, s.v
    c = h / p.epsilon
    eye = np.eye(3)
    uniform = p.field.is_uniform
    if uniform:
        Kb = skew_matrix(p.field.uniform)
        lhs = eye - 0.5 * c * Kb
        rot = eye + 0.5 * c * Kb

    x1 = x0 + h * v0 + 0.5 * h * h * (p.F(x0) + np.cross(v0, p.B(x0)) / p.epsilon)
    residual = np.inf
    for it in range(1, cfg.fp_maxit + 1):
        X = x0 + nodes[:, None] * (x1 - x0)
        fbar = weights @ p.F(X)
        if uniform:
            v1 = np.linalg.solve(lhs, rot @ v0 + h * fbar)
        else:
            Bq = np.asarray(p.B(X), dtype=float)
            b0 = weights @ Bq
            b1 = (weights * nodes) @ Bq
            S0, S1 = skew_matrix(b0), skew_matrix(b1)
            v1 = np.linalg.solve(eye - c * S1, v0 + c * (S0 - S1) @ v0 + h * fbar)
        x_new = x0 + 0.5 * h * (v0 + v1)
        residual = float(np.abs(x_new - x1).max())
        x1 = x_new
        if residual <= cfg.fp_tol * max(1.0, float(np.abs(x1).max())):
            return State(s.t + h, x1, v1), IterationStats(it, residual)
    raise ConvergenceError(
        f"AVF iteration did not converge in {cfg.fp_maxit} iterations "
        f"(last increment {residual:.3e})", residual)


def avf_step(p, s, cfg):
    """One AVF step (see :func:`avf_solve`)."""
    return avf_solve(p, s, cfg)[0]
