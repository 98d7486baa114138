"""
Uniform magnetic field: the degree-1 and degree-2 exponential integrators.

Problem P2 has a quartic potential, so Gauss-Legendre quadrature of the stage
integrals is exact and the methods conserve the energy up to the fixed-point
tolerance.  The Boris method is shown for comparison.
"""
import numpy as np

from cpdexp import StepConfig, builtin_problem, energy, integrate, m1c_coefficients, m2c_coefficients
from cpdexp.baselines import boris_step

p = builtin_problem("P2", epsilon=0.01)
s0 = p.initial_state()
H0 = energy(p, s0)
cfg = StepConfig(h=0.05)


def boris(p, s, cfg):
    return boris_step(p, s, cfg.h), None


for name, method in [("m1c", m1c_coefficients()), ("m2c", m2c_coefficients()), ("boris", boris)]:
    run = integrate(method, p, s0, cfg, t_end=50.0, stride=100)
    drift = max(abs(energy(p, s) - H0) / abs(H0) for s in run.states)
    print(f"{name:6s} max relative energy error {drift:.2e}, mean iterations {run.iterations.mean():.1f}")

# the step is symmetric: stepping back with -h returns to the start
m2c = m2c_coefficients()
fwd = integrate(m2c, p, s0, cfg, 1.0).final
back = integrate(m2c, p, fwd, cfg.with_h(-0.05), 0.0).final
print("forward then backward:", np.abs(back.x - s0.x).max(), np.abs(back.v - s0.v).max())

# errors shrink like h^2 and h^4
q = builtin_problem("P2")
ref = integrate(m2c, q, q.initial_state(), StepConfig(2.0 ** -10), 2.0).final
for name, method in [("m1c", m1c_coefficients()), ("m2c", m2c)]:
    errs = [np.linalg.norm(integrate(method, q, q.initial_state(), StepConfig(h), 2.0).final.x - ref.x)
            for h in (1 / 8, 1 / 16, 1 / 32)]
    print(name, "error ratios", [f"{a / b:.1f}" for a, b in zip(errs, errs[1:])])
