"""
Position-dependent field: midpoint-frozen method and its Triple Jump composition.

On P4 both methods keep the energy to round-off, while the averaged vector
field method, energy preserving for a constant field, drifts.
"""
from cpdexp import StepConfig, builtin_problem, energy, integrate, m1b_step, m2b_step
from cpdexp.baselines import avf_solve

p = builtin_problem("P4", epsilon=1.0)
s0 = p.initial_state()
H0 = energy(p, s0)
cfg = StepConfig(h=0.05)

for name, stepper in [("m1b", m1b_step), ("m2b", m2b_step), ("avf", avf_solve)]:
    run = integrate(stepper, p, s0, cfg, t_end=20.0, stride=20)
    drift = max(abs(energy(p, s) - H0) / H0 for s in run.states)
    print(f"{name:4s} max relative energy error {drift:.2e}")

# one m1b step reports inner (stage) and outer (midpoint) iteration counts
s1, stats = m1b_step(p, s0, cfg)
print("inner iterations", stats.iterations, "outer iterations", stats.outer_iterations)
