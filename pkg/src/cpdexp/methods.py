"""
Coefficient families of continuous-stage exponential integrators.

A method of degree ``s`` is described by matrix-valued polynomials

    A(tau, sigma)   degree s in tau, s-1 in sigma
    B(tau), Bbar(tau), C(tau)   degree <= s in tau

whose matrix coefficients depend on ``hK``.  :meth:`MethodCoefficients.expand`
turns a set of :class:`~cpdexp.phi.PhiTable` objects into monomial coefficient
arrays, which is the only form the stepper and the condition checker use.

``tables`` is always a mapping ``scale -> PhiTable at scale * hK``; a method
lists the scales it needs in ``phi_scales``.
"""
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Tuple

import numpy as np
from numpy.polynomial import polynomial as npoly

from .phi import phi_table


@dataclass(frozen=True)
class Expansion:
    """Monomial coefficients of one method at one argument ``hK``.

    ``A[p, q]`` multiplies ``tau**p * sigma**q``; ``B[p]``, ``Bbar[p]``, ``C[p]``
    multiply ``tau**p``.  Every entry is a 3x3 matrix.
    """
    A: np.ndarray
    B: np.ndarray
    Bbar: np.ndarray
    C: np.ndarray


def _powers(t, n):
    return np.asarray(t, dtype=float)[..., None] ** np.arange(n)


def poly_eval(coefs, t):
    """Evaluate ``sum_p coefs[p] * t**p`` (matrix coefficients)."""
    return np.tensordot(_powers(t, len(coefs)), coefs, axes=(-1, 0))


def poly_derivative(coefs):
    n = len(coefs)
    if n == 1:
        return np.zeros_like(coefs)
    return coefs[1:] * np.arange(1, n)[:, None, None]


@lru_cache(maxsize=None)
def _lagrange_basis(nodes):
    nodes = np.asarray(nodes, dtype=float)
    n = len(nodes)
    L = np.zeros((n, n))
    for i in range(n):
        others = np.delete(nodes, i)
        L[i] = npoly.polyfromroots(others) / np.prod(nodes[i] - others)
    L.setflags(write=False)
    return L


def lagrange_basis(nodes):
    """Monomial coefficients of the Lagrange basis on ``nodes``: ``L[i, p]``."""
    return _lagrange_basis(tuple(float(c) for c in nodes))


def interpolate_C(nodes, tables):
    """``C(tau)`` interpolating ``c * phi_1(c hK)`` at the fitting nodes."""
    L = lagrange_basis(nodes)
    values = np.array([c * tables[c].phi1 if c != 0 else np.zeros((3, 3)) for c in nodes])
    return np.einsum("ip,iab->pab", L, values)


@dataclass(frozen=True)
class MethodCoefficients:
    name: str
    degree: int
    nodes: Tuple[float, ...]
    phi_scales: Tuple[float, ...]
    # tables -> (A, B, Bbar) monomial arrays; C is interpolated from the nodes
    _build: Callable
    order: int = 0

    def expand(self, tables):
        A, B, Bbar = self._build(tables)
        C = interpolate_C(self.nodes, tables)
        return Expansion(np.asarray(A), np.asarray(B), np.asarray(Bbar), C)

    def tables_at(self, hK):
        """PhiTables for every scale this method uses, at argument ``hK``."""
        return {c: phi_table(c * hK) for c in self.phi_scales}

    # pointwise evaluation, for checks and diagnostics
    def A_hat(self, tau, sigma, tables):
        e = self.expand(tables)
        return np.einsum("p,q,pqab->ab", _powers(tau, e.A.shape[0]), _powers(sigma, e.A.shape[1]), e.A)

    def B_hat(self, tau, tables):
        return poly_eval(self.expand(tables).B, tau)

    def Bbar_hat(self, tau, tables):
        return poly_eval(self.expand(tables).Bbar, tau)

    def C_hat(self, tau, tables):
        return poly_eval(self.expand(tables).C, tau)


def _m1c_build(tables):
    t = tables[1.0]
    A = np.zeros((2, 1, 3, 3))
    A[1, 0] = t.phi2
    B = np.array([t.phi1])
    Bbar = np.array([t.phi2])
    return A, B, Bbar


def m1c_coefficients():
    """Degree-1 symmetric energy-preserving method of order two.

    ``A = tau phi_2``, ``B = phi_1``, ``Bbar = phi_2``, ``C = tau phi_1``, nodes 0 and 1.
    """
    return MethodCoefficients("m1c", 1, (0.0, 1.0), (1.0,), _m1c_build, order=2)


def _m2c_build(tables):
    full, half = tables[1.0], tables[0.5]
    f1, h1 = full.phi1, half.phi1
    f2, h2 = full.phi2, half.phi2
    b1 = -2 * h1 + 3 * f1
    b2 = 4 * h1 - 4 * f1
    bb1 = -h2 + 3 * f2
    bb2 = 2 * h2 - 4 * f2
    a11 = 4 * h2 - 3 * f2
    a12 = -6 * h2 + 4 * f2
    a21 = -5 * h2 + 6 * f2
    a22 = 8 * h2 - 8 * f2
    A = np.zeros((3, 2, 3, 3))
    A[1, 0], A[1, 1], A[2, 0], A[2, 1] = a11, a12, a21, a22
    return A, np.array([b1, b2]), np.array([bb1, bb2])


def m2c_coefficients():
    """Degree-2 symmetric energy-preserving method of order four, nodes 0, 1/2, 1."""
    return MethodCoefficients("m2c", 2, (0.0, 0.5, 1.0), (0.5, 1.0), _m2c_build, order=4)


def perturbed(coeffs, which, delta, name=None):
    """Copy of ``coeffs`` with ``delta * I`` added to the constant term of one family.

    ``which`` is ``"A"``, ``"B"`` or ``"Bbar"``.  Used to test that the
    condition checker notices broken coefficients.
    """
    def build(tables):
        A, B, Bbar = (np.array(a, dtype=float) for a in coeffs._build(tables))
        target = {"A": A[1, 0] if A.shape[0] > 1 else A[0, 0], "B": B[0], "Bbar": Bbar[0]}[which]
        target += delta * np.eye(3)
        return A, B, Bbar

    return MethodCoefficients(name or f"{coeffs.name}+{which}", coeffs.degree, coeffs.nodes,
                              coeffs.phi_scales, build, coeffs.order)


BUILTIN_METHODS = {"m1c": m1c_coefficients, "m2c": m2c_coefficients}
