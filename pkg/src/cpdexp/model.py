"""
Charged-particle problems ``x'' = x' x B(x) / eps + F(x)`` with ``F = -grad U``.

Fields and potentials accept positions of shape ``(3,)`` or ``(n, 3)`` and
evaluate row-wise, so the stage solvers can evaluate all quadrature nodes in
one call.
"""
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from .errors import DomainError, UnsupportedInvariantError

SINGULAR_RADIUS = 1e-8


@dataclass(frozen=True)
class MagneticField:
    """Magnetic field ``B(x)``.

    A uniform field stores its constant vector in ``uniform``; ``evaluate`` is
    always usable.  ``vector_potential`` (``B = curl A``) is optional.
    """
    evaluate: Callable
    uniform: Optional[np.ndarray] = None
    vector_potential: Optional[Callable] = None

    @property
    def is_uniform(self):
        return self.uniform is not None

    def __call__(self, x):
        return self.evaluate(x)


class _Constant:
    # picklable, compares by value so equal problems share cached results
    def __init__(self, b):
        self.b = b

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return np.broadcast_to(self.b, x.shape).copy()

    def __eq__(self, other):
        return type(other) is type(self) and np.array_equal(self.b, other.b)

    def __hash__(self):
        return hash((type(self).__name__, self.b.tobytes()))


class _SymmetricGauge(_Constant):
    # A = -1/2 x cross B
    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return -0.5 * np.cross(x, self.b)


def uniform_field(b, vector_potential=None):
    b = np.array(b, dtype=float)
    b.setflags(write=False)
    if vector_potential is None:
        vector_potential = _SymmetricGauge(b)
    return MagneticField(_Constant(b), uniform=b, vector_potential=vector_potential)


def nonuniform_field(evaluate, vector_potential=None):
    return MagneticField(evaluate, uniform=None, vector_potential=vector_potential)


@dataclass(frozen=True)
class Potential:
    """Scalar potential ``U`` with its analytic force ``F = -grad U``."""
    U: Callable
    F: Callable
    polynomial_degree: Optional[int] = None


@dataclass(frozen=True)
class CPDProblem:
    field: MagneticField
    potential: Potential
    epsilon: float
    x0: np.ndarray
    v0: np.ndarray
    name: str = "custom"
    singular_set_description: str = ""
    # U and B invariant under rotations about the x3 axis, so M is conserved
    axisymmetric: bool = False

    def __post_init__(self):
        if not 0.0 < self.epsilon <= 1.0:
            raise ValueError(f"epsilon must lie in (0, 1], got {self.epsilon}")
        object.__setattr__(self, "x0", np.array(self.x0, dtype=float))
        object.__setattr__(self, "v0", np.array(self.v0, dtype=float))

    def B(self, x):
        return self.field.evaluate(x)

    def F(self, x):
        return self.potential.F(x)

    def U(self, x):
        return self.potential.U(x)

    def with_epsilon(self, epsilon):
        return replace(self, epsilon=epsilon)

    def initial_state(self):
        return State(0.0, self.x0.copy(), self.v0.copy())


@dataclass
class State:
    t: float
    x: np.ndarray
    v: np.ndarray = field(repr=True)

    def copy(self):
        return State(self.t, self.x.copy(), self.v.copy())


def as_nonuniform(problem):
    """Same problem, but with the field flagged position dependent.

    Used to check that the nonuniform-field methods reduce to the uniform ones.
    """
    f = problem.field
    return replace(problem, field=MagneticField(f.evaluate, None, f.vector_potential))


# invariants -------------------------------------------------------------

def energy(p, s):
    """``H = |v|^2 / 2 + U(x)``."""
    return 0.5 * float(s.v @ s.v) + float(p.U(s.x))


def momentum(p, s, scaled=True):
    """``M = (v1 + A1) x2 - (v2 + A2) x1`` for rotationally symmetric problems.

    With ``scaled=True`` the vector potential enters as ``A / eps``, matching the
    ``1/eps`` carried by the field in the equations of motion; that is the
    variant conserved by the exact flow.
    """
    A = p.field.vector_potential
    if A is None:
        raise UnsupportedInvariantError(f"problem {p.name} has no vector potential")
    a = np.asarray(A(s.x), dtype=float)
    if scaled:
        a = a / p.epsilon
    x, v = s.x, s.v
    return float((v[0] + a[0]) * x[1] - (v[1] + a[1]) * x[0])


def magnetic_moment(p, s):
    """``I = |v x B|^2 / (2 |B|^3)``."""
    b = np.asarray(p.B(s.x), dtype=float)
    nb = float(np.sqrt(b @ b))
    if nb == 0.0:
        raise DomainError("magnetic moment undefined where |B| = 0")
    c = np.cross(s.v, b)
    return 0.5 * float(c @ c) / nb ** 3


# built-in problems ---------------------------------------------------------

def _radius(x):
    x = np.asarray(x, dtype=float)
    r = np.sqrt(x[..., 0] ** 2 + x[..., 1] ** 2)
    if np.any(r < SINGULAR_RADIUS):
        raise DomainError("position on the singular axis x1 = x2 = 0")
    return r


def _U_coulomb(x):
    return 1.0 / (100.0 * _radius(x))


def _F_coulomb(x):
    x = np.asarray(x, dtype=float)
    r = _radius(x)
    f = np.zeros_like(x)
    c = 1.0 / (100.0 * r ** 3)
    f[..., 0] = c * x[..., 0]
    f[..., 1] = c * x[..., 1]
    return f


def _U_quartic(x):
    x = np.asarray(x, dtype=float)
    x1, x2, x3 = x[..., 0], x[..., 1], x[..., 2]
    return x1 ** 3 - x2 ** 3 + x1 ** 4 / 5 + x2 ** 4 + x3 ** 4


def _F_quartic(x):
    x = np.asarray(x, dtype=float)
    f = np.empty_like(x)
    x1, x2, x3 = x[..., 0], x[..., 1], x[..., 2]
    f[..., 0] = -(3 * x1 ** 2 + 0.8 * x1 ** 3)
    f[..., 1] = 3 * x2 ** 2 - 4 * x2 ** 3
    f[..., 2] = -4 * x3 ** 3
    return f


COULOMB = Potential(_U_coulomb, _F_coulomb, None)
QUARTIC = Potential(_U_quartic, _F_quartic, 4)


def _B_radial(x):
    x = np.asarray(x, dtype=float)
    b = np.zeros_like(x)
    b[..., 2] = np.sqrt(x[..., 0] ** 2 + x[..., 1] ** 2)
    return b


def _A_radial(x):
    x = np.asarray(x, dtype=float)
    r = np.sqrt(x[..., 0] ** 2 + x[..., 1] ** 2)
    a = np.zeros_like(x)
    a[..., 0] = -x[..., 1] * r / 3
    a[..., 1] = x[..., 0] * r / 3
    return a


def _B_linear(x):
    x = np.asarray(x, dtype=float)
    x1, x2, x3 = x[..., 0], x[..., 1], x[..., 2]
    return 0.5 * np.stack([x2 - x3, x1 + x3, x2 - x1], axis=-1)


def _A_linear(x):
    x = np.asarray(x, dtype=float)
    x1, x2, x3 = x[..., 0], x[..., 1], x[..., 2]
    return 0.25 * np.stack([x3 ** 2 - x2 ** 2, x3 ** 2 - x1 ** 2, x2 ** 2 - x1 ** 2], axis=-1)


_AXIS = "the axis x1 = x2 = 0"

PROBLEM_IDS = ("P1", "P2", "P3", "P4")


def builtin_problem(pid, epsilon=1.0):
    """One of the four benchmark problems.

    ========  =========================  ====================  ==========
    id        potential                  field                 field kind
    ========  =========================  ====================  ==========
    P1        1 / (100 r)                (0, 0, 1)             uniform
    P2        quartic polynomial         (0.9, 0.1, 1) / 2     uniform
    P3        1 / (100 r)                (0, 0, r)             nonuniform
    P4        quartic polynomial         linear in x           nonuniform
    ========  =========================  ====================  ==========

    ``r = sqrt(x1^2 + x2^2)``.
    """
    pid = str(pid).upper()
    if pid == "P1":
        return CPDProblem(uniform_field([0.0, 0.0, 1.0]), COULOMB, epsilon,
                          [0.0, 0.2, 0.1], [0.09, 0.05, 0.2], "P1", _AXIS, True)
    if pid == "P2":
        return CPDProblem(uniform_field([0.45, 0.05, 0.5]), QUARTIC, epsilon,
                          [0.0, 1.0, 0.1], [0.09, 0.55, 0.3], "P2")
    if pid == "P3":
        return CPDProblem(nonuniform_field(_B_radial, _A_radial), COULOMB, epsilon,
                          [0.0, 1.0, 0.1], [0.09, 0.05, 0.2], "P3", _AXIS, True)
    if pid == "P4":
        return CPDProblem(nonuniform_field(_B_linear, _A_linear), QUARTIC, epsilon,
                          [0.0, 1.0, 0.1], [0.09, 0.55, 0.30], "P4")
    raise ValueError(f"unknown problem id {pid!r}; expected one of {PROBLEM_IDS}")
