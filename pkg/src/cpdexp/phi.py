"""
phi-functions of 3x3 matrix arguments.

``phi_0(z) = exp(z)`` and ``phi_k(z) = sum_j z**j / (j + k)!``.  Two routes are
provided:

* :func:`phi_skew` / :func:`phi_skew_closed` -- closed forms for skew-symmetric
  arguments, the path used by every integrator.
* :func:`phi_series` -- Taylor series with scaling and squaring on an
  augmented block matrix.  Works for any 3x3 matrix and serves as the
  reference the closed forms are tested against.

All tolerances in this package measure matrices by their largest absolute
entry (:func:`maxabs`).
"""
from dataclasses import dataclass
from math import cos, factorial, sin, sqrt

import numpy as np

from .errors import DomainError

I3 = np.eye(3)

# below this rotation angle the closed forms lose digits to cancellation
SMALL_ANGLE = 1.0
_SMALL_ANGLE_TERMS = 12


def maxabs(a):
    """Max-absolute-entry norm."""
    return float(np.max(np.abs(a)))


def skew_matrix(b):
    """Return the matrix ``S`` with ``S @ v == np.cross(v, b)``."""
    b1, b2, b3 = (float(c) for c in b)
    return np.array([[0.0, b3, -b2],
                     [-b3, 0.0, b1],
                     [b2, -b1, 0.0]])


def skew_vector(m):
    """Inverse of :func:`skew_matrix` (reads the upper triangle)."""
    return np.array([m[1, 2], -m[0, 2], m[0, 1]])


@dataclass(frozen=True)
class PhiTable:
    """phi_0, phi_1, phi_2 evaluated at one matrix argument."""
    argument: np.ndarray
    phi0: np.ndarray
    phi1: np.ndarray
    phi2: np.ndarray

    def __getitem__(self, k):
        return (self.phi0, self.phi1, self.phi2)[k]


def _series_table(kmax):
    # rows k: 1/(2m+1+k)! and 1/(2m+2+k)! for m = 0.._SMALL_ANGLE_TERMS-1
    m = np.arange(_SMALL_ANGLE_TERMS)
    a = np.array([[1.0 / factorial(2 * j + 1 + k) for j in m] for k in range(kmax + 1)])
    b = np.array([[1.0 / factorial(2 * j + 2 + k) for j in m] for k in range(kmax + 1)])
    return a, b


_SERIES_A, _SERIES_B = _series_table(4)
_INV_FACTORIAL = [1.0 / factorial(k) for k in range(8)]


def _series_coefficients(theta2, kmax):
    # alpha_k = sum_m (-theta^2)^m / (2m+1+k)!,  beta_k = sum_m (-theta^2)^m / (2m+2+k)!
    p = (-theta2) ** np.arange(_SMALL_ANGLE_TERMS)
    return list(_SERIES_A[:kmax + 1] @ p), list(_SERIES_B[:kmax + 1] @ p)


def _closed_coefficients(theta, kmax):
    theta2 = theta * theta
    alpha = [sin(theta) / theta]
    beta = [(1.0 - cos(theta)) / theta2]
    for k in range(kmax):
        alpha.append(beta[k])
        beta.append((_INV_FACTORIAL[k + 1] - alpha[k]) / theta2)
    return alpha, beta


def phi_coefficients(theta, kmax=2):
    """Scalars ``(alpha_k, beta_k)`` with ``phi_k(W) = I/k! + alpha_k W + beta_k W^2``.

    Valid for any skew ``W`` whose rotation angle is ``theta`` (``W^3 = -theta^2 W``).
    """
    theta = abs(theta)
    if theta < SMALL_ANGLE:
        return _series_coefficients(theta * theta, kmax)
    return _closed_coefficients(theta, kmax)


def phi_skew(m, kmax=2):
    """Closed-form ``[phi_0(m), ..., phi_kmax(m)]`` for a skew-symmetric 3x3 ``m``."""
    m = np.asarray(m, dtype=float)
    w = skew_vector(m)
    theta = sqrt(w @ w)
    alpha, beta = phi_coefficients(theta, kmax)
    m2 = m @ m
    return [I3 * _INV_FACTORIAL[k] + alpha[k] * m + beta[k] * m2 for k in range(kmax + 1)]


def phi_table(m):
    """:class:`PhiTable` for a skew-symmetric argument ``m``."""
    m = np.asarray(m, dtype=float)
    p0, p1, p2 = phi_skew(m, 2)
    return PhiTable(m, p0, p1, p2)


def phi_skew_closed(b, scale):
    """:class:`PhiTable` at ``scale * skew_matrix(b)``.

    The integrators call this with ``scale = h / eps`` (and fractions of it).
    """
    return phi_table(scale * skew_matrix(b))


def phi_series(m, k, terms=24):
    """Reference evaluation of ``phi_k(m)`` for an arbitrary 3x3 matrix.

    ``phi_k(m)`` is the top-right block of ``exp`` of the block matrix with ``m``
    in the corner and identities on the superdiagonal.  The exponential is a
    truncated Taylor sum on the argument scaled below norm 1/2, followed by
    repeated squaring.
    """
    m = np.asarray(m, dtype=float)
    if m.shape != (3, 3):
        raise ValueError("phi_series expects a 3x3 matrix")
    if not np.all(np.isfinite(m)):
        raise DomainError("phi_series: non-finite matrix entries")
    if k < 0:
        raise ValueError("phi index must be non-negative")
    n = 3 * (k + 1)
    a = np.zeros((n, n))
    a[:3, :3] = m
    for j in range(k):
        a[3 * j:3 * j + 3, 3 * j + 3:3 * j + 6] = I3
    norm = np.max(np.sum(np.abs(a), axis=1))
    squarings = max(0, int(np.ceil(np.log2(norm / 0.5)))) if norm > 0 else 0
    a = a / 2.0 ** squarings
    e = np.eye(n)
    term = np.eye(n)
    for j in range(1, terms + 1):
        term = term @ a / j
        e = e + term
    for _ in range(squarings):
        e = e @ e
    return e[:3, 3 * k:3 * k + 3].copy()


def phi_coefficient_arrays(thetas, kmax=2):
    """Vectorised :func:`phi_coefficients` over an array of angles.

    Returns arrays ``alpha, beta`` of shape ``(kmax + 1,) + thetas.shape``.
    """
    thetas = np.abs(np.asarray(thetas, dtype=float))
    alpha = np.empty((kmax + 1,) + thetas.shape)
    beta = np.empty_like(alpha)
    small = thetas < SMALL_ANGLE
    if np.any(small):
        p = (-thetas[small, None] ** 2) ** np.arange(_SMALL_ANGLE_TERMS)
        alpha[:, small] = _SERIES_A[:kmax + 1] @ p.T
        beta[:, small] = _SERIES_B[:kmax + 1] @ p.T
    big = ~small
    if np.any(big):
        t = thetas[big]
        t2 = t * t
        a = [np.sin(t) / t]
        b = [(1.0 - np.cos(t)) / t2]
        for k in range(kmax):
            a.append(b[k])
            b.append((_INV_FACTORIAL[k + 1] - a[k]) / t2)
        alpha[:, big] = np.array(a)
        beta[:, big] = np.array(b)
    return alpha, beta


def phi_table_series(m):
    """:class:`PhiTable` computed with :func:`phi_series` (any 3x3 argument)."""
    m = np.asarray(m, dtype=float)
    return PhiTable(m, phi_series(m, 0), phi_series(m, 1), phi_series(m, 2))
