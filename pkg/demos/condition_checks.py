"""
Checking the coefficient conditions numerically.

The energy, symmetry, node and endpoint conditions are matrix identities in
hK; they are evaluated at random skew arguments against series-evaluated
phi-functions.  A small perturbation of one coefficient family is detected.
"""
from cpdexp.conditions import check_all, check_order_conditions, sample_arguments
from cpdexp.methods import m1c_coefficients, m2c_coefficients, perturbed

samples = sample_arguments(40, seed=1)
for coeffs in (m1c_coefficients(), m2c_coefficients()):
    print(coeffs.name)
    print(check_all(coeffs, samples).table())
    print()

broken = perturbed(m2c_coefficients(), "B", 1e-2)
print(broken.name)
print(check_all(broken, samples).table())
print()

# order conditions: residual decay exponents as h -> 0
print(check_order_conditions(m2c_coefficients(), 4).table())
print()
print(check_order_conditions(m1c_coefficients(), 4).table())
