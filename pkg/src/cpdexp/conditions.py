"""
Numerical checks of the structural conditions on a coefficient family.

Every condition is an identity between matrix functions of ``M = hK``; the
checker evaluates its residual on a uniform 21-point grid in ``tau`` (and
``sigma``) at sampled skew arguments.  phi-functions come from the series
oracle, not from the closed forms used by the integrators.

Conditions (residual names used in reports)

energy
    ``energy_C``   phi_0(-M) B(tau; M) = C'(tau; -M)
    ``energy_A``   B(tau; -M) B(sigma; M) = A'(tau, sigma; M) + A'(sigma, tau; -M)
symmetry
    ``sym_Bbar``   phi_1(M) B(tau; -M) - Bbar(tau; -M) = Bbar(1 - tau; M)
    ``sym_C``      phi_1(M) - C(tau; -M) phi_0(M) = C(1 - tau; M)
    ``sym_B``      phi_0(M) B(tau; -M) = B(1 - tau; M)
    ``sym_A``      phi_1(M) B(sigma; -M) - Bbar(sigma; -M) - C(tau; -M) phi_0(M) B(sigma; -M)
                   + A(tau, sigma; -M) = A(1 - tau, 1 - sigma; M)
structure
    ``nodes``      C(c_i; M) = c_i phi_1(c_i M)
    ``endpoint``   A(1, sigma; M) = Bbar(sigma; M)

Primes are ``tau`` derivatives, taken analytically from the monomial form.
"""
from dataclasses import dataclass, field
from math import factorial
from typing import Dict, List

import numpy as np

from .methods import poly_derivative, poly_eval
from .phi import phi_series, phi_table_series, skew_matrix
from .uniform import gauss_legendre

GRID = np.linspace(0.0, 1.0, 21)

ENERGY = ("energy_C", "energy_A")
SYMMETRY = ("sym_Bbar", "sym_C", "sym_B", "sym_A")
STRUCTURE = ("nodes", "endpoint")


@dataclass
class ConditionReport:
    """Largest residual of each condition over all samples."""
    residuals: Dict[str, float]
    tolerance: float
    samples: List[tuple] = field(default_factory=list)

    @property
    def sample_count(self):
        return len(self.samples)

    @property
    def failed(self):
        return [k for k, r in self.residuals.items() if not r <= self.tolerance]

    @property
    def passed(self):
        return not self.failed

    def merge(self, other):
        res = dict(self.residuals)
        for k, r in other.residuals.items():
            res[k] = max(res.get(k, 0.0), r)
        return ConditionReport(res, min(self.tolerance, other.tolerance),
                               self.samples + [s for s in other.samples if s not in self.samples])

    def table(self):
        lines = [f"{'condition':<12} {'max residual':>14}  status",
                 f"{'-' * 12} {'-' * 14}  ------"]
        for k, r in self.residuals.items():
            lines.append(f"{k:<12} {r:>14.3e}  {'ok' if r <= self.tolerance else 'FAIL'}")
        lines.append(f"{self.sample_count} samples, tolerance {self.tolerance:.1e}")
        return "\n".join(lines)


def sample_arguments(n, seed=0, max_angle=5.0, eps_choices=(1.0, 1e-2, 1e-3)):
    """Seeded samples ``(B, h, eps)`` with rotation angle ``|h B / eps| <= max_angle``."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n):
        eps = float(rng.choice(eps_choices))
        h = float(rng.uniform(1e-3, 0.125))
        d = rng.normal(size=3)
        d /= np.linalg.norm(d)
        angle = rng.uniform(0.0, max_angle)
        out.append((d * angle * eps / h, h, eps))
    return out


def _argument(sample):
    b, h, eps = sample
    return (h / eps) * skew_matrix(b)


def _tables(coeffs, m):
    scales = set(coeffs.phi_scales) | {c for c in coeffs.nodes if c != 0} | {1.0}
    return {c: phi_table_series(c * m) for c in scales}


def _A_grid(A, taus, sigmas, dtau=False):
    coefs = A
    if dtau:
        coefs = A[1:] * np.arange(1, A.shape[0])[:, None, None, None] if A.shape[0] > 1 else np.zeros_like(A)
    tp = taus[:, None] ** np.arange(coefs.shape[0])
    sp = sigmas[:, None] ** np.arange(coefs.shape[1])
    return np.einsum("ip,jq,pqab->ijab", tp, sp, coefs)


def _maxabs(a):
    return float(np.max(np.abs(a))) if np.size(a) else 0.0


def residuals_at(coeffs, m, grid=GRID):
    """All condition residuals of ``coeffs`` at one argument ``m``."""
    tp, tm = _tables(coeffs, m), _tables(coeffs, -m)
    ep, em = coeffs.expand(tp), coeffs.expand(tm)
    full_p, full_m = tp[1.0], tm[1.0]

    Bp, Bm = poly_eval(ep.B, grid), poly_eval(em.B, grid)
    Bbp, Bbm = poly_eval(ep.Bbar, grid), poly_eval(em.Bbar, grid)
    Cp, Cm = poly_eval(ep.C, grid), poly_eval(em.C, grid)
    dCm = poly_eval(poly_derivative(em.C), grid)
    Ap, Am = _A_grid(ep.A, grid, grid), _A_grid(em.A, grid, grid)
    dAp, dAm = _A_grid(ep.A, grid, grid, True), _A_grid(em.A, grid, grid, True)

    r = {}
    r["energy_C"] = _maxabs(full_m.phi0 @ Bp - dCm)
    r["energy_A"] = _maxabs(np.einsum("iab,jbc->ijac", Bm, Bp) - dAp - dAm.transpose(1, 0, 2, 3))

    r["sym_Bbar"] = _maxabs(full_p.phi1 @ Bm - Bbm - Bbp[::-1])
    r["sym_C"] = _maxabs(full_p.phi1 - Cm @ full_p.phi0 - Cp[::-1])
    r["sym_B"] = _maxabs(full_p.phi0 @ Bm - Bp[::-1])
    lhs = (full_p.phi1 @ Bm - Bbm)[None] - np.einsum("iab,bc,jcd->ijad", Cm, full_p.phi0, Bm) + Am
    r["sym_A"] = _maxabs(lhs - Ap[::-1, ::-1])

    node_res = [C_at - c * phi_series(c * m, 1)
                for c, C_at in zip(coeffs.nodes, poly_eval(ep.C, np.array(coeffs.nodes)))]
    r["nodes"] = _maxabs(np.array(node_res))
    r["endpoint"] = _maxabs(_A_grid(ep.A, np.array([1.0]), grid)[0] - Bbp)
    return r


def _check(coeffs, samples, names, tol):
    worst = {k: 0.0 for k in names}
    for smp in samples:
        res = residuals_at(coeffs, _argument(smp))
        for k in names:
            worst[k] = max(worst[k], res[k])
    return ConditionReport(worst, tol, list(samples))


def check_energy_conditions(coeffs, samples, tol=1e-11):
    return _check(coeffs, samples, ENERGY, tol)


def check_symmetry_conditions(coeffs, samples, tol=1e-11):
    return _check(coeffs, samples, SYMMETRY, tol)


def check_structure_conditions(coeffs, samples, tol=1e-11):
    """Fitting-node and endpoint (``X_1 = x_{n+1}``) conditions."""
    return _check(coeffs, samples, STRUCTURE, tol)


def check_all(coeffs, samples, tol=1e-11):
    return _check(coeffs, samples, ENERGY + SYMMETRY + STRUCTURE, tol)


# order conditions -------------------------------------------------------

@dataclass
class OrderCondition:
    name: str
    required: int
    residuals: np.ndarray
    exponent: float

    @property
    def passed(self):
        return self.exponent >= self.required - 0.2


@dataclass
class OrderReport:
    r: int
    h_list: np.ndarray
    conditions: List[OrderCondition]

    @property
    def passed(self):
        return all(c.passed for c in self.conditions)

    @property
    def failed(self):
        return [c.name for c in self.conditions if not c.passed]

    def table(self):
        lines = [f"order-{self.r} conditions at h = " + ", ".join(f"{h:.4g}" for h in self.h_list),
                 f"{'condition':<10} {'required':>8} {'observed':>9}  status"]
        for c in self.conditions:
            obs = "inf" if np.isinf(c.exponent) else f"{c.exponent:.2f}"
            lines.append(f"{c.name:<10} {c.required:>8d} {obs:>9}  {'ok' if c.passed else 'FAIL'}")
        return "\n".join(lines)


# residuals below this are treated as exact zeros when fitting decay exponents
ZERO_RESIDUAL = 1e-13


def fit_exponent(h_list, residuals):
    """Least-squares slope of ``log residual`` against ``log h``.

    Residuals under :data:`ZERO_RESIDUAL` are dropped; if fewer than two remain
    the condition is treated as exactly satisfied (``inf``).
    """
    h = np.asarray(h_list, dtype=float)
    res = np.asarray(residuals, dtype=float)
    keep = res > ZERO_RESIDUAL
    if keep.sum() < 2:
        return np.inf
    return float(np.polyfit(np.log(h[keep]), np.log(res[keep]), 1)[0])


def order_residuals(coeffs, m, r, n_quad=32):
    """Order-condition residuals at argument ``m = hK`` (dict name -> (required, residual))."""
    t, w = gauss_legendre(n_quad)
    e = coeffs.expand(_tables(coeffs, m))
    Bq = poly_eval(e.B, t)
    Bbq = poly_eval(e.Bbar, t)
    out = {}
    for j in range(r):
        lhs = np.einsum("q,qab->ab", w * t ** j / factorial(j), Bq)
        out[f"B_{j}"] = (r - j, _maxabs(lhs - phi_series(m, j + 1)))
    for j in range(r - 1):
        lhs = np.einsum("q,qab->ab", w * t ** j / factorial(j), Bbq)
        out[f"Bbar_{j}"] = (r - 1 - j, _maxabs(lhs - phi_series(m, j + 2)))
    if r >= 3:
        Aq = _A_grid(e.A, t, t)
        for j in range(r - 2):
            lhs = np.einsum("i,j,ijab->ab", w, w * t ** j / factorial(j), Aq)
            rhs = sum(wq * tq ** (j + 2) * phi_series(tq * m, j + 2) for tq, wq in zip(t, w))
            out[f"A_{j}"] = (r - 2 - j, _maxabs(lhs - rhs))
    return out


def check_order_conditions(coeffs, r, h_list=None, K=None):
    """Decay exponents of the order-``r`` condition residuals as ``h -> 0``.

    ``K`` is the fixed matrix in ``M = hK`` (default: the skew matrix of a unit
    field in a generic direction).
    """
    if h_list is None:
        h_list = 2.0 ** -np.arange(1, 7)
    h_list = np.asarray(h_list, dtype=float)
    if K is None:
        K = skew_matrix(np.array([0.48, -0.6, 0.64]))
    per_h = [order_residuals(coeffs, h * K, r) for h in h_list]
    conds = []
    for name, (req, _) in per_h[0].items():
        res = np.array([d[name][1] for d in per_h])
        conds.append(OrderCondition(name, req, res, fit_exponent(h_list, res)))
    return OrderReport(r, h_list, conds)
