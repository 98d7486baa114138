import numpy as np
import pytest

from cpdexp.methods import (BUILTIN_METHODS, lagrange_basis, m1c_coefficients, m2c_coefficients,
                            perturbed, poly_derivative, poly_eval)
from cpdexp.phi import maxabs, phi_series, phi_table, skew_matrix
from conftest import random_skew


def test_lagrange_basis_is_cardinal():
    nodes = (0.0, 0.5, 1.0)
    L = lagrange_basis(nodes)
    vals = np.array([[np.polyval(L[i][::-1], c) for c in nodes] for i in range(3)])
    assert np.allclose(vals, np.eye(3), atol=1e-15)


def test_poly_helpers():
    coefs = np.array([np.eye(3), 2 * np.eye(3), 3 * np.eye(3)])
    assert np.allclose(poly_eval(coefs, 2.0), (1 + 4 + 12) * np.eye(3))
    assert np.allclose(poly_derivative(coefs), [2 * np.eye(3), 6 * np.eye(3)])
    assert not poly_derivative(coefs[:1]).any()


@pytest.mark.parametrize("name", list(BUILTIN_METHODS))
def test_fitting_nodes_and_endpoint(rng, name):
    coeffs = BUILTIN_METHODS[name]()
    for _ in range(10):
        m = random_skew(rng, 5.0)
        tables = {c: phi_table(c * m) for c in set(coeffs.phi_scales) | {1.0}}
        assert coeffs.nodes[0] == 0.0 and coeffs.nodes[-1] == 1.0
        for c in coeffs.nodes:
            assert maxabs(coeffs.C_hat(c, tables) - c * phi_series(c * m, 1)) < 1e-13
        for sigma in np.linspace(0, 1, 5):
            assert maxabs(coeffs.A_hat(1.0, sigma, tables) - coeffs.Bbar_hat(sigma, tables)) < 1e-13


def test_m1c_families(rng):
    coeffs = m1c_coefficients()
    m = random_skew(rng, 4.0)
    t = {1.0: phi_table(m)}
    p1, p2 = phi_series(m, 1), phi_series(m, 2)
    for tau in (0.0, 0.3, 1.0):
        assert maxabs(coeffs.B_hat(tau, t) - p1) < 1e-14
        assert maxabs(coeffs.Bbar_hat(tau, t) - p2) < 1e-14
        assert maxabs(coeffs.C_hat(tau, t) - tau * p1) < 1e-14
        assert maxabs(coeffs.A_hat(tau, 0.7, t) - tau * p2) < 1e-14


def test_m2c_families(rng):
    coeffs = m2c_coefficients()
    m = random_skew(rng, 4.0)
    t = {0.5: phi_table(0.5 * m), 1.0: phi_table(m)}
    h1, f1 = phi_series(0.5 * m, 1), phi_series(m, 1)
    h2, f2 = phi_series(0.5 * m, 2), phi_series(m, 2)
    tau, sigma = 0.37, 0.81
    B = (-2 * h1 + 3 * f1) + (4 * h1 - 4 * f1) * tau
    Bbar = (-h2 + 3 * f2) + (2 * h2 - 4 * f2) * tau
    A = (tau * (4 * h2 - 3 * f2) + tau * sigma * (-6 * h2 + 4 * f2)
         + tau ** 2 * (-5 * h2 + 6 * f2) + tau ** 2 * sigma * (8 * h2 - 8 * f2))
    assert maxabs(coeffs.B_hat(tau, t) - B) < 1e-14
    assert maxabs(coeffs.Bbar_hat(tau, t) - Bbar) < 1e-14
    assert maxabs(coeffs.A_hat(tau, sigma, t) - A) < 1e-14


def test_zero_argument_limits():
    # at hK = 0 both methods reduce to continuous-stage Runge-Kutta-Nystrom coefficients
    z = np.zeros((3, 3))
    for coeffs in (m1c_coefficients(), m2c_coefficients()):
        t = coeffs.tables_at(z)
        assert maxabs(coeffs.C_hat(0.4, t) - 0.4 * np.eye(3)) < 1e-15
        quad = sum(w * coeffs.B_hat(x, t) for x, w in zip(*np.polynomial.legendre.leggauss(8)))
        assert maxabs(quad / 2 - np.eye(3)) < 1e-14


@pytest.mark.parametrize("which", ["A", "B", "Bbar"])
def test_perturbed_changes_only_one_family(which):
    base = m2c_coefficients()
    pert = perturbed(base, which, 1e-2)
    m = 0.3 * skew_matrix([1, 2, 3])
    e0, e1 = base.expand(base.tables_at(m)), pert.expand(pert.tables_at(m))
    for fam in ("A", "B", "Bbar", "C"):
        diff = maxabs(getattr(e0, fam) - getattr(e1, fam))
        assert diff == pytest.approx(1e-2 if fam == which else 0.0, abs=1e-15)
    assert pert.name == "m2c+" + which
