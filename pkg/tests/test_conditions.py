import numpy as np
import pytest

from cpdexp.conditions import (ENERGY, STRUCTURE, SYMMETRY, ConditionReport, check_all,
                               check_energy_conditions, check_order_conditions,
                               check_symmetry_conditions, fit_exponent, residuals_at,
                               sample_arguments)
from cpdexp.methods import MethodCoefficients, m1c_coefficients, m2c_coefficients, perturbed
from cpdexp.phi import skew_matrix

M1C, M2C = m1c_coefficients(), m2c_coefficients()


def rejected_root():
    """Degree-1 family with the other root a(hK) = phi_2(-hK) of the energy conditions.

    ``b`` and ``bbar`` keep their symmetric values ``phi_1(hK)``, ``phi_2(hK)``.
    """
    def build(tables):
        A = np.zeros((2, 1, 3, 3))
        A[1, 0] = tables[-1.0].phi2
        return A, np.array([tables[1.0].phi1]), np.array([tables[1.0].phi2])
    return MethodCoefficients("rejected", 1, (0.0, 1.0), (1.0, -1.0), build)


def test_m1c_single_argument():
    res = residuals_at(M1C, 0.5 * skew_matrix([0, 0, 1]))
    assert set(res) == set(ENERGY + SYMMETRY + STRUCTURE)
    assert max(res.values()) <= 1e-12


@pytest.mark.parametrize("coeffs", [M1C, M2C], ids=["m1c", "m2c"])
def test_builtin_methods_pass(coeffs):
    samples = sample_arguments(50, seed=3)
    assert check_energy_conditions(coeffs, samples).passed
    assert check_symmetry_conditions(coeffs, samples).passed
    report = check_all(coeffs, samples)
    assert report.passed and report.sample_count == 50
    assert max(report.residuals.values()) <= 1e-11


def test_perturbed_b_violates_energy_condition():
    report = check_energy_conditions(perturbed(M1C, "B", 0.01), sample_arguments(10))
    assert report.residuals["energy_C"] >= 1e-3 and not report.passed


@pytest.mark.parametrize("which", ["A", "B", "Bbar"])
@pytest.mark.parametrize("coeffs", [M1C, M2C], ids=["m1c", "m2c"])
def test_perturbations_flagged(coeffs, which):
    report = check_all(perturbed(coeffs, which, 1e-2), sample_arguments(5, seed=1))
    assert not report.passed
    assert max(report.residuals.values()) >= 1e-4


def test_rejected_root_is_not_symmetric():
    samples = sample_arguments(10, seed=2)
    assert check_energy_conditions(rejected_root(), samples).passed
    sym = check_symmetry_conditions(rejected_root(), samples)
    assert not sym.passed and max(sym.residuals.values()) >= 1e-3


def test_samples_are_seeded_and_bounded():
    a, b = sample_arguments(20, seed=7), sample_arguments(20, seed=7)
    assert all(np.array_equal(x[0], y[0]) and x[1:] == y[1:] for x, y in zip(a, b))
    for B, h, eps in a:
        assert np.linalg.norm(h * B / eps) <= 5.0 + 1e-12
        assert eps in (1.0, 1e-2, 1e-3)


def test_report_logic():
    r = ConditionReport({"a": 1e-12, "b": 2e-11}, 1e-11)
    assert r.failed == ["b"] and not r.passed
    merged = r.merge(ConditionReport({"a": 5e-12, "c": 0.0}, 1e-10))
    assert merged.residuals == {"a": 5e-12, "b": 2e-11, "c": 0.0} and merged.tolerance == 1e-11
    assert "FAIL" in r.table() and "ok" in r.table()


class TestOrder:
    def test_m2c_order_four(self):
        report = check_order_conditions(M2C, 4)
        assert report.passed
        assert any(np.isinf(c.exponent) for c in report.conditions)

    def test_m1c_order_two(self):
        report = check_order_conditions(M1C, 2)
        assert report.passed
        b0 = next(c for c in report.conditions if c.name == "B_0")
        assert np.isinf(b0.exponent) and np.all(b0.residuals <= 1e-13)

    def test_m1c_not_order_four(self):
        report = check_order_conditions(M1C, 4)
        assert not report.passed and report.failed

    def test_fit_exponent(self):
        h = 2.0 ** -np.arange(1, 7)
        assert fit_exponent(h, 3 * h ** 3) == pytest.approx(3.0, abs=1e-12)
        assert fit_exponent(h, np.zeros(6)) == np.inf
