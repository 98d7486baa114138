"""
Continuous-stage exponential integrators for a uniform magnetic field.

One step of a method with coefficient families ``A, B, Bbar, C`` reads

    X(tau)  = x + h C(tau) v + h^2 int_0^1 A(tau, sigma) F(X(sigma)) dsigma
    x_new   = x + h phi_1(hK) v + h^2 int_0^1 Bbar(tau) F(X(tau)) dtau
    v_new   = phi_0(hK) v + h int_0^1 B(tau) F(X(tau)) dtau

with ``K = skew(B) / eps``.  Because ``A`` is a polynomial of degree ``s - 1``
in ``sigma``, the stage polynomial is fixed by the ``s`` moments
``I_j = int_0^1 sigma^j F(X(sigma)) dsigma``; those moments are the unknowns of
the fixed-point iteration.  Integrals are Gauss-Legendre sums on [0, 1].
"""
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import ConvergenceError
from .methods import MethodCoefficients
from .model import State
from .phi import phi_coefficient_arrays, skew_matrix, skew_vector


@dataclass(frozen=True)
class StepConfig:
    h: float
    quad_nodes: int = 16
    fp_tol: float = 1e-14
    fp_maxit: int = 100

    def __post_init__(self):
        if not self.fp_tol > 0:
            raise ValueError("fp_tol must be positive")
        if self.quad_nodes < 2:
            raise ValueError("quad_nodes must be at least 2")
        if self.fp_maxit < 1:
            raise ValueError("fp_maxit must be at least 1")

    def with_h(self, h):
        return StepConfig(h, self.quad_nodes, self.fp_tol, self.fp_maxit)


@dataclass
class IterationStats:
    iterations: int = 0
    residual: float = 0.0
    outer_iterations: int = 0
    outer_residual: float = 0.0

    def __iadd__(self, other):
        self.iterations += other.iterations
        self.outer_iterations += other.outer_iterations
        self.residual = max(self.residual, other.residual)
        self.outer_residual = max(self.outer_residual, other.outer_residual)
        return self


@lru_cache(maxsize=None)
def gauss_legendre(n):
    """Gauss-Legendre nodes and weights on [0, 1]."""
    t, w = np.polynomial.legendre.leggauss(n)
    t = 0.5 * (t + 1.0)
    w = 0.5 * w
    t.setflags(write=False)
    w.setflags(write=False)
    return t, w


def force_free_positions(hK, x, v, h, taus):
    """``x + tau h phi_1(tau hK) v`` at each ``tau`` (exact flow when ``F = 0``)."""
    w = skew_vector(hK)
    theta = float(np.sqrt(w @ w))
    alpha, beta = phi_coefficient_arrays(np.asarray(taus) * theta, 1)
    kv = hK @ v
    kkv = hK @ kv
    taus = np.asarray(taus)[:, None]
    phi1v = v + (alpha[1][:, None] * taus) * kv + (beta[1][:, None] * taus ** 2) * kkv
    return x + h * taus * phi1v


def _moment_tolerance(moments, tol):
    return tol * max(1.0, float(np.abs(moments).max()))


class StageSystem:
    """Everything about one step that does not depend on ``x``, ``v`` or ``F``.

    Built from a method, the frozen argument ``hK``, the step size and the
    quadrature size.  Uniform-field runs reuse one instance for every step.
    """

    def __init__(self, coeffs, hK, h, quad_nodes):
        self.h = h
        self.tables = coeffs.tables_at(hK)
        self.table = self.tables[1.0]
        self.hK = hK
        e = coeffs.expand(self.tables)
        self.expansion = e
        nodes, weights = gauss_legendre(quad_nodes)
        self.nodes = nodes
        n_q = len(nodes)
        self.n_stage = e.A.shape[1]
        self.n_mom = max(self.n_stage, e.B.shape[0], e.Bbar.shape[0])
        self.wpow_t = (weights[:, None] * nodes[:, None] ** np.arange(self.n_mom)).T.copy()
        Aq = np.einsum("qp,pjab->qajb", nodes[:, None] ** np.arange(e.A.shape[0]), e.A)
        self.A_mat = (h * h) * Aq.reshape(3 * n_q, 3 * self.n_stage)
        Cq = np.einsum("qp,pab->qab", nodes[:, None] ** np.arange(e.C.shape[0]), e.C)
        self.C_mat = h * Cq.reshape(3 * n_q, 3)
        nb, nbb = e.B.shape[0], e.Bbar.shape[0]
        self.B_mat = h * e.B.transpose(1, 0, 2).reshape(3, 3 * nb)
        self.Bbar_mat = (h * h) * e.Bbar.transpose(1, 0, 2).reshape(3, 3 * nbb)
        self.phi1_h = h * self.table.phi1
        self.phi0 = self.table.phi0
        self._free_mat = None

    @property
    def free_mat(self):
        """Force-free flow ``x + tau h phi_1(tau hK) v`` at the nodes, as a matrix on ``v``."""
        if self._free_mat is None:
            nodes, hK = self.nodes, self.hK
            w = skew_vector(hK)
            alpha, beta = phi_coefficient_arrays(nodes * float(np.sqrt(w @ w)), 1)
            flow = (np.eye(3)[None] + (alpha[1] * nodes)[:, None, None] * hK
                    + (beta[1] * nodes ** 2)[:, None, None] * (hK @ hK))
            self._free_mat = (self.h * nodes[:, None, None] * flow).reshape(-1, 3)
        return self._free_mat

    def solve(self, force, x, v, cfg, guess=None):
        """Fixed point for the stage moments.

        ``guess`` is an array of initial moments, positions at the quadrature
        nodes, or ``None`` for the force-free flow.  Returns ``(moments, stats)``;
        ``moments`` has one row per power of ``tau`` used by ``A``, ``B``, ``Bbar``.
        """
        n_q = len(self.nodes)
        if guess is None:
            guess = (self.free_mat @ v).reshape(n_q, 3) + x
        if guess.shape == (n_q, 3):
            moments = self.wpow_t @ force(guess)
        else:
            moments = np.zeros((self.n_mom, 3))
            moments[:len(guess)] = guess
        base = (self.C_mat @ v).reshape(n_q, 3) + x
        ns = self.n_stage
        residual = np.inf
        for it in range(1, cfg.fp_maxit + 1):
            X = base + (self.A_mat @ moments[:ns].ravel()).reshape(n_q, 3)
            new = self.wpow_t @ force(X)
            residual = float(np.abs(new[:ns] - moments[:ns]).max())
            moments = new
            if residual <= _moment_tolerance(moments, cfg.fp_tol):
                return moments, IterationStats(it, residual)
        raise ConvergenceError(
            f"stage iteration did not converge in {cfg.fp_maxit} iterations "
            f"(last increment {residual:.3e})", residual)

    def update(self, x, v, moments):
        """Position and velocity after the step, from converged moments."""
        nb = self.B_mat.shape[1] // 3
        nbb = self.Bbar_mat.shape[1] // 3
        x_new = x + self.phi1_h @ v + self.Bbar_mat @ moments[:nbb].ravel()
        v_new = self.phi0 @ v + self.B_mat @ moments[:nb].ravel()
        return x_new, v_new

    def advance(self, force, x, v, cfg, guess=None):
        moments, stats = self.solve(force, x, v, cfg, guess)
        x_new, v_new = self.update(x, v, moments)
        return x_new, v_new, moments, stats


_CACHE_SIZE = 8
_systems = {}


def stage_system(coeffs, hK, h, quad_nodes):
    """Cached :class:`StageSystem` (cache keyed on the exact argument bits)."""
    key = (coeffs, hK.tobytes(), h, quad_nodes)
    system = _systems.get(key)
    if system is None:
        if len(_systems) >= _CACHE_SIZE:
            _systems.pop(next(iter(_systems)))
        system = _systems[key] = StageSystem(coeffs, hK, h, quad_nodes)
    return system


def _uniform_K(p):
    if not p.field.is_uniform:
        raise ValueError(f"problem {p.name} has a nonuniform field; use the nonuniform methods")
    return skew_matrix(p.field.uniform) / p.epsilon


def step(coeffs, p, s, cfg):
    """Advance ``s`` by one step of size ``cfg.h`` (negative ``h`` allowed)."""
    h = cfg.h
    if h == 0:
        raise ValueError("step size must be nonzero")
    system = stage_system(coeffs, h * _uniform_K(p), h, cfg.quad_nodes)
    x_new, v_new, _, stats = system.advance(p.potential.F, s.x, s.v, cfg)
    return State(s.t + h, x_new, v_new), stats


@dataclass
class RunSummary:
    """Result of :func:`integrate`.

    ``times``, ``xs``, ``vs`` hold the observed states (every ``stride`` steps,
    always including the first and the last); ``iterations`` the per-step
    fixed-point iteration counts.
    """
    final: State
    times: np.ndarray
    xs: np.ndarray
    vs: np.ndarray
    iterations: np.ndarray

    @property
    def states(self):
        return [State(t, x, v) for t, x, v in zip(self.times, self.xs, self.vs)]


def make_stepper(method):
    """Normalise ``method`` to a callable ``(p, s, cfg) -> (State, IterationStats)``."""
    if isinstance(method, MethodCoefficients):
        return lambda p, s, cfg: step(method, p, s, cfg)
    return method


def integrate(method, p, s0, cfg, t_end, observer=None, stride=1):
    """Repeat a one-step map from ``s0.t`` to ``t_end``.

    ``method`` is a :class:`MethodCoefficients` or any stepper callable.
    ``observer(n, state, stats)`` is called on every recorded state.
    Errors from the step map are re-raised with ``step_index`` set.
    """
    n_steps = round((t_end - s0.t) / cfg.h)
    if n_steps < 0 or abs(s0.t + n_steps * cfg.h - t_end) > 1e-9 * max(1.0, abs(t_end)):
        raise ValueError(f"t_end={t_end} is not reachable from t={s0.t} with h={cfg.h}")
    stepper = make_stepper(method)
    times, xs, vs = [s0.t], [s0.x.copy()], [s0.v.copy()]
    iters = np.zeros(n_steps, dtype=int)
    if observer is not None:
        observer(0, s0, None)
    s = s0
    for n in range(1, n_steps + 1):
        try:
            s, stats = stepper(p, s, cfg)
        except ConvergenceError as err:
            err.step_index = n
            raise
        # integer step count, so t carries no accumulated rounding
        s.t = s0.t + n * cfg.h
        iters[n - 1] = stats.iterations if stats is not None else 0
        if n % stride == 0 or n == n_steps:
            times.append(s.t)
            xs.append(s.x.copy())
            vs.append(s.v.copy())
            if observer is not None:
                observer(n, s, stats)
    return RunSummary(s, np.array(times), np.array(xs), np.array(vs), iters)
