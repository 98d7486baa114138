"""
phi-functions of skew-symmetric matrices.

The integrators only ever need phi_0, phi_1, phi_2 at h K with K skew, and for
those there is a closed form in the rotation angle.  This script compares it
with the general series evaluation and checks a few identities.
"""
import numpy as np

from cpdexp.phi import maxabs, phi_series, phi_skew, phi_table, skew_matrix

# a field, a step size and a strength parameter
b = np.array([0.45, 0.05, 0.5])
h, eps = 0.1, 0.01
m = (h / eps) * skew_matrix(b)
print("rotation angle h|B|/eps =", h * np.linalg.norm(b) / eps)

table = phi_table(m)
for k in range(3):
    print(f"phi_{k}: closed form vs series, max entry difference {maxabs(table[k] - phi_series(m, k)):.2e}")

# phi_0 of a skew matrix is a rotation
print("orthogonality of phi_0:", maxabs(table.phi0.T @ table.phi0 - np.eye(3)))

# phi_{k+1}(m) m = phi_k(m) - I/k!
ph = phi_skew(m, 3)
print("recurrence k=1:", maxabs(m @ ph[2] + np.eye(3) - ph[1]))

# phi_1(-m) phi_0(m) = phi_1(m)
print("semigroup:", maxabs(phi_table(-m).phi1 @ table.phi0 - table.phi1))

# the closed form switches to a short Taylor series at small angles;
# both branches agree with the series oracle across the switch
for angle in (1e-8, 1e-3, 0.999, 1.001, 30.0):
    mm = angle * skew_matrix([0.48, -0.6, 0.64])
    err = max(maxabs(a - phi_series(mm, k)) for k, a in enumerate(phi_skew(mm, 2)))
    print(f"angle {angle:>8g}: {err:.1e}")
