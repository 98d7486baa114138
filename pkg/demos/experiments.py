"""
Driving experiments through the harness.

A short convergence study against a validated reference and a long run of the
invariants, both written as CSV.  The same runs are available from the shell,
for example

    cpdexp convergence --problem P2 --method m1c,m2c --t-end 2 --out conv.csv
"""
import tempfile
from pathlib import Path

from cpdexp.harness import ExperimentSpec, convergence_hs, reference_solution, run_convergence, run_longrun
from cpdexp.model import builtin_problem

out = Path(tempfile.mkdtemp())

ref = reference_solution(builtin_problem("P2"), 2.0, h_ref=2.0 ** -10)
print(f"reference at t=2 via {ref.method}, step-halving discrepancy {ref.discrepancy:.1e}")

conv = ExperimentSpec("P2", ("m1c", "m2c", "boris", "avf"), (1.0,), "convergence",
                      convergence_hs(3, 6), t_end=2.0, h_ref=2.0 ** -10, out=str(out / "conv.csv"))
result = run_convergence(conv)
print(result.summary())
print((out / "conv.csv").read_text().splitlines()[0])

# P1 is axisymmetric, so the momentum error is reported as well
long = ExperimentSpec("P1", ("m1c", "boris"), (0.01,), "longrun", (0.01,), t_end=20.0,
                      stride=200, out=str(out / "long.csv"))
print(run_longrun(long).summary())
print("CSV written to", out)
