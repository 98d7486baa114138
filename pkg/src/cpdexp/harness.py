"""
Experiment driver: convergence studies and long-time invariant runs.

Every run produces rows with the fixed CSV schema :data:`CSV_HEADER`.  Metrics
that do not apply to a run are written as empty fields, and a run that fails
numerically leaves :data:`FAIL_MARKER` in the columns it could not fill, so a
CSV never contains NaN or Inf.
"""
import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from .baselines import avf_solve, boris_step
from .errors import ConvergenceError, DomainError, ReferenceQualityError, UnsupportedInvariantError
from .methods import m1c_coefficients, m2c_coefficients
from .model import builtin_problem, energy, magnetic_moment, momentum
from .nonuniform import m1b_step, m2b_step
from .uniform import StepConfig, step

CSV_HEADER = ("method", "problem", "epsilon", "h", "t", "error", "e_H", "e_M", "e_I",
              "fp_iters_mean", "fp_iters_max")
FAIL_MARKER = "FAILED"
H_REF = 2.0 ** -12
REFERENCE_TOL = 1e-10
DEFAULT_EPSILONS = (1.0, 1e-2, 1e-3)

_M1C = m1c_coefficients()
_M2C = m2c_coefficients()


# steppers -------------------------------------------------------------------

def _m1c(p, s, cfg):
    return step(_M1C, p, s, cfg)


def _m2c(p, s, cfg):
    return step(_M2C, p, s, cfg)


def _boris(p, s, cfg):
    return boris_step(p, s, cfg.h), None


@dataclass(frozen=True)
class MethodInfo:
    name: str
    stepper: object
    uniform_only: bool = False
    implicit: bool = True


METHODS = {
    "m1c": MethodInfo("m1c", _m1c, uniform_only=True),
    "m2c": MethodInfo("m2c", _m2c, uniform_only=True),
    "m1b": MethodInfo("m1b", m1b_step),
    "m2b": MethodInfo("m2b", m2b_step),
    "boris": MethodInfo("boris", _boris, implicit=False),
    "avf": MethodInfo("avf", avf_solve),
}


def method_info(name):
    try:
        return METHODS[name.lower()]
    except KeyError:
        raise ValueError(f"unknown method {name!r}; expected one of {tuple(METHODS)}") from None


# experiment description --------------------------------------------------------

@dataclass(frozen=True)
class ExperimentSpec:
    """One experiment: a problem, methods, epsilons and step sizes.

    ``mode`` is ``"convergence"`` (error at ``t_end`` against a reference, one
    row per step size) or ``"longrun"`` (invariant errors every ``stride``
    steps).
    """
    problem: str
    methods: Tuple[str, ...]
    epsilons: Tuple[float, ...]
    mode: str
    hs: Tuple[float, ...]
    t_end: float
    stride: int = 100
    out: Optional[str] = None
    quad_nodes: int = 16
    fp_tol: float = 1e-14
    fp_maxit: int = 100
    h_ref: float = H_REF
    workers: int = 1

    def __post_init__(self):
        object.__setattr__(self, "methods", tuple(m.lower() for m in self.methods))
        object.__setattr__(self, "epsilons", tuple(float(e) for e in self.epsilons))
        object.__setattr__(self, "hs", tuple(float(h) for h in self.hs))
        if self.mode not in ("convergence", "longrun"):
            raise ValueError(f"mode must be 'convergence' or 'longrun', got {self.mode!r}")
        if not self.methods:
            raise ValueError("at least one method is required")
        if not self.epsilons:
            raise ValueError("at least one epsilon is required")
        if not self.t_end > 0:
            raise ValueError("t_end must be positive")
        if self.mode == "convergence" and len(set(self.hs)) < 3:
            raise ValueError("a convergence study needs at least three step sizes")
        if self.mode == "longrun" and len(self.hs) < 1:
            raise ValueError("a long run needs a step size")
        if any(not h > 0 for h in self.hs):
            raise ValueError("step sizes must be positive")
        if self.stride < 1:
            raise ValueError("stride must be at least 1")
        for h in self.hs:
            _steps(self.t_end, h)
        p = builtin_problem(self.problem)
        for m in self.methods:
            if method_info(m).uniform_only and not p.field.is_uniform:
                raise ValueError(f"method {m} needs a uniform field; problem {p.name} is nonuniform")
        for e in self.epsilons:
            p.with_epsilon(e)
        StepConfig(self.hs[0], self.quad_nodes, self.fp_tol, self.fp_maxit)

    def config(self, h):
        return StepConfig(h, self.quad_nodes, self.fp_tol, self.fp_maxit)


def _steps(t_end, h):
    n = round(t_end / h)
    if n < 1 or abs(n * h - t_end) > 1e-9 * max(1.0, t_end):
        raise ValueError(f"t_end={t_end} is not a multiple of h={h}")
    return n


# error metrics ------------------------------------------------------------------

def relative_error(s, ref):
    """``|x - x_ref| / |x_ref| + |v - v_ref| / |v_ref|``."""
    return (float(np.linalg.norm(s.x - ref.x) / np.linalg.norm(ref.x))
            + float(np.linalg.norm(s.v - ref.v) / np.linalg.norm(ref.v)))


def _relative_change(value, initial):
    return abs(value - initial) / abs(initial) if initial != 0 else abs(value - initial)


class Invariants:
    """Initial values of H, M, I and relative errors against them.

    ``M`` is only tracked for axisymmetric problems.  A quantity that cannot be
    evaluated (no vector potential, vanishing field) is reported as ``None``.
    """

    def __init__(self, p, s0):
        self.p = p
        self.H0 = energy(p, s0)
        self.M0 = self._momentum(s0, True)
        self.M0_unscaled = self._momentum(s0, False)
        self.I0 = self._moment(s0)

    def _momentum(self, s, scaled):
        if not self.p.axisymmetric:
            return None
        try:
            return momentum(self.p, s, scaled)
        except UnsupportedInvariantError:
            return None

    def _moment(self, s):
        try:
            return magnetic_moment(self.p, s)
        except DomainError:
            return None

    def errors(self, s):
        """``(e_H, e_M, e_I, e_M_unscaled)`` for state ``s``."""
        e_H = _relative_change(energy(self.p, s), self.H0)
        e_M = e_Mu = e_I = None
        if self.M0 is not None:
            e_M = _relative_change(self._momentum(s, True), self.M0)
            e_Mu = _relative_change(self._momentum(s, False), self.M0_unscaled)
        if self.I0 is not None:
            moment = self._moment(s)
            e_I = _relative_change(moment, self.I0) if moment is not None else None
        return e_H, e_M, e_I, e_Mu


# reference solutions -----------------------------------------------------------

class ReferenceSolution(list):
    """States at the requested checkpoints (a list), plus how they were validated.

    ``discrepancy`` is the largest :func:`relative_error` between the ``h`` and
    ``h / 2`` runs over the checkpoints.
    """

    def __init__(self, states, h, discrepancy, method):
        super().__init__(states)
        self.h = h
        self.discrepancy = discrepancy
        self.method = method


def _run_to_checkpoints(stepper, p, cfg, indices):
    s = p.initial_state()
    out = {}
    wanted = set(indices)
    last = max(indices)
    for n in range(1, last + 1):
        try:
            s, _ = stepper(p, s, cfg)
        except ConvergenceError as err:
            err.step_index = n
            raise
        s.t = n * cfg.h
        if n in wanted:
            out[n] = s.copy()
    return [out[n] for n in indices]


_references = {}
_REFERENCE_CACHE_SIZE = 16


def _reference_key(p, t_end, checkpoints, h_ref, tol, quad_nodes, fp_tol):
    try:
        key = (p.field.evaluate, p.potential.F, p.epsilon, p.x0.tobytes(), p.v0.tobytes(),
               t_end, checkpoints, h_ref, tol, quad_nodes, fp_tol)
        hash(key)
    except TypeError:
        return None
    return key


def reference_solution(p, t_end, checkpoints=None, h_ref=H_REF, tol=REFERENCE_TOL,
                       quad_nodes=16, fp_tol=1e-14, fp_maxit=100):
    """High-accuracy states of ``p`` at ``checkpoints`` (default ``[t_end]``).

    Integrates with the order-4 method suited to the field (degree-2 method for
    a uniform field, its Triple Jump composition otherwise) at ``h_ref``, and
    repeats with ``h_ref / 2``.  If the two runs differ by more than ``tol``
    (in :func:`relative_error`) at any checkpoint, :class:`ReferenceQualityError`
    is raised.  Results are cached per problem and arguments.
    """
    if not t_end > 0:
        raise ValueError("t_end must be positive")
    checkpoints = (t_end,) if checkpoints is None else tuple(float(c) for c in checkpoints)
    if not checkpoints:
        raise ValueError("at least one checkpoint is required")
    if any(c <= 0 or c > t_end * (1 + 1e-12) for c in checkpoints):
        raise ValueError("checkpoints must lie in (0, t_end]")
    indices = [_steps(c, h_ref) for c in checkpoints]

    key = _reference_key(p, t_end, checkpoints, h_ref, tol, quad_nodes, fp_tol)
    if key is not None and key in _references:
        return _references[key]

    name = "m2c" if p.field.is_uniform else "m2b"
    stepper = METHODS[name].stepper
    coarse = _run_to_checkpoints(stepper, p, StepConfig(h_ref, quad_nodes, fp_tol, fp_maxit), indices)
    fine = _run_to_checkpoints(stepper, p, StepConfig(h_ref / 2, quad_nodes, fp_tol, fp_maxit),
                               [2 * n for n in indices])
    discrepancy = max(relative_error(a, b) for a, b in zip(coarse, fine))
    if not discrepancy <= tol:
        raise ReferenceQualityError(
            f"reference for {p.name} (eps={p.epsilon}) fails step-halving check: "
            f"{discrepancy:.3e} > {tol:.1e} at h_ref={h_ref}")
    for s, c in zip(coarse, checkpoints):
        s.t = c
    ref = ReferenceSolution(coarse, h_ref, discrepancy, name)
    if key is not None:
        if len(_references) >= _REFERENCE_CACHE_SIZE:
            _references.pop(next(iter(_references)))
        _references[key] = ref
    return ref


# rows -------------------------------------------------------------------------

@dataclass
class Row:
    """One CSV row.  ``None`` becomes an empty field; strings are written verbatim."""
    method: str
    problem: str
    epsilon: float
    h: float
    t: float
    error: object = None
    e_H: object = None
    e_M: object = None
    e_I: object = None
    fp_iters_mean: object = None
    fp_iters_max: object = None

    def sort_key(self):
        return (self.method, self.epsilon, self.h, self.t)

    @property
    def failed(self):
        return FAIL_MARKER in (self.error, self.e_H, self.e_M, self.e_I)

    def fields(self):
        return [_fmt(getattr(self, name)) for name in CSV_HEADER]


def _fmt(value):
    if value is None:
        return ""
    if isinstance(value, str):
        return value
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def _clean(value):
    # non-finite numbers never reach the CSV
    if value is None or isinstance(value, str):
        return value
    return value if math.isfinite(value) else FAIL_MARKER


def write_csv(rows, path=None):
    """Write rows sorted by (method, epsilon, h, t); returns the CSV text."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for row in sorted(rows, key=Row.sort_key):
        writer.writerow(row.fields())
    text = buf.getvalue()
    if path is not None:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    return text


def _iteration_columns(info, iters):
    if not info.implicit or len(iters) == 0:
        return None, None
    return float(np.mean(iters)), int(np.max(iters))


# convergence ---------------------------------------------------------------------

@dataclass
class ConvergenceResult:
    """Rows of a convergence study and the fitted slopes.

    ``slopes[(method, epsilon)]`` is the least-squares slope of ``log2(error)``
    against ``log2(h)`` over the successful rows (``None`` with fewer than two).
    """
    rows: list
    slopes: dict
    failures: list = field(default_factory=list)
    references: dict = field(default_factory=dict)

    @property
    def failed(self):
        return bool(self.failures)

    def summary(self):
        lines = []
        for (m, e), slope in sorted(self.slopes.items()):
            text = "n/a" if slope is None else f"{slope:.3f}"
            lines.append(f"{m:6s} eps={e:<8g} slope={text}")
        for msg in self.failures:
            lines.append(f"FAILED: {msg}")
        return "\n".join(lines)


def fit_slope(hs, errors):
    """Least-squares slope of ``log2(error)`` against ``log2(h)``."""
    hs = np.asarray(hs, dtype=float)
    errors = np.asarray(errors, dtype=float)
    ok = np.isfinite(errors) & (errors > 0)
    if ok.sum() < 2:
        return None
    slope, _ = np.polyfit(np.log2(hs[ok]), np.log2(errors[ok]), 1)
    return float(slope)


def _convergence_task(args):
    method, p, cfg, t_end, ref = args
    info = method_info(method)
    n_steps = _steps(t_end, cfg.h)
    inv = Invariants(p, p.initial_state())
    iters = np.zeros(n_steps, dtype=int)
    s = p.initial_state()
    row = Row(method, p.name, p.epsilon, cfg.h, t_end)
    try:
        for n in range(1, n_steps + 1):
            s, stats = info.stepper(p, s, cfg)
            s.t = n * cfg.h
            iters[n - 1] = stats.iterations if stats is not None else 0
            if not (np.all(np.isfinite(s.x)) and np.all(np.isfinite(s.v))):
                raise FloatingPointError(f"non-finite state at step {n}")
    except (ConvergenceError, DomainError, FloatingPointError) as err:
        row.error = row.e_H = FAIL_MARKER
        return row, f"{method} {p.name} eps={p.epsilon:g} h={cfg.h:g}: {err}"
    row.error = _clean(relative_error(s, ref))
    e_H, e_M, e_I, _ = inv.errors(s)
    row.e_H, row.e_M, row.e_I = _clean(e_H), _clean(e_M), _clean(e_I)
    row.fp_iters_mean, row.fp_iters_max = _iteration_columns(info, iters)
    if row.failed:
        return row, f"{method} {p.name} eps={p.epsilon:g} h={cfg.h:g}: non-finite metric"
    return row, None


def _map(fn, tasks, workers):
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, tasks))
    return [fn(t) for t in tasks]


def run_convergence(spec, reference=reference_solution):
    """Global error at ``spec.t_end`` for every (method, epsilon, h).

    A failing reference raises; a failing run becomes a marked row and is
    listed in ``failures``.  The CSV (when ``spec.out`` is set) has one row per
    run with ``t = t_end``.
    """
    if spec.mode != "convergence":
        raise ValueError("run_convergence needs a convergence spec")
    base = builtin_problem(spec.problem)
    tasks, refs = [], {}
    for eps in spec.epsilons:
        p = base.with_epsilon(eps)
        # the reference keeps default solver settings whatever the runs use
        ref = reference(p, spec.t_end, h_ref=spec.h_ref)[-1]
        refs[eps] = ref
        for m in spec.methods:
            for h in spec.hs:
                tasks.append((m, p, spec.config(h), spec.t_end, ref))
    results = _map(_convergence_task, tasks, spec.workers)
    rows = sorted((r for r, _ in results), key=Row.sort_key)
    failures = [msg for _, msg in results if msg is not None]
    slopes = {}
    for m in spec.methods:
        for eps in spec.epsilons:
            sel = [r for r in rows if r.method == m and r.epsilon == eps and not r.failed]
            slopes[(m, eps)] = fit_slope([r.h for r in sel], [r.error for r in sel])
    if spec.out:
        write_csv(rows, spec.out)
    return ConvergenceResult(rows, slopes, failures, refs)


# long runs ---------------------------------------------------------------------------

@dataclass
class LongrunResult:
    """Rows of a long run plus per-run maxima.

    ``maxima[(method, epsilon, h)]`` maps metric names (``e_H``, ``e_M``,
    ``e_I``, ``e_M_unscaled``) to their largest value over the recorded times.
    """
    rows: list
    maxima: dict
    failures: list = field(default_factory=list)

    @property
    def failed(self):
        return bool(self.failures)

    def summary(self):
        lines = []
        for (m, e, h), mx in sorted(self.maxima.items()):
            parts = [f"max {k}={v:.3e}" for k, v in mx.items() if v is not None]
            lines.append(f"{m:6s} eps={e:<8g} h={h:<10g} " + " ".join(parts))
        for msg in self.failures:
            lines.append(f"FAILED: {msg}")
        return "\n".join(lines)


def _longrun_task(args):
    method, p, cfg, t_end, stride = args
    info = method_info(method)
    n_steps = _steps(t_end, cfg.h)
    s = p.initial_state()
    inv = Invariants(p, s)
    rows = []
    maxima = {"e_H": 0.0, "e_M": None, "e_I": None, "e_M_unscaled": None}
    iters = []
    window = []
    msg = None
    n = 0
    try:
        for n in range(1, n_steps + 1):
            s, stats = info.stepper(p, s, cfg)
            s.t = n * cfg.h
            window.append(stats.iterations if stats is not None else 0)
            if n % stride == 0 or n == n_steps:
                if not (np.all(np.isfinite(s.x)) and np.all(np.isfinite(s.v))):
                    raise FloatingPointError(f"non-finite state at step {n}")
                e_H, e_M, e_I, e_Mu = inv.errors(s)
                mean, mx = _iteration_columns(info, window)
                rows.append(Row(method, p.name, p.epsilon, cfg.h, s.t, None,
                                _clean(e_H), _clean(e_M), _clean(e_I), mean, mx))
                for k, v in (("e_H", e_H), ("e_M", e_M), ("e_I", e_I), ("e_M_unscaled", e_Mu)):
                    if v is not None:
                        maxima[k] = v if maxima[k] is None else max(maxima[k], v)
                iters.extend(window)
                window = []
    except (ConvergenceError, DomainError, FloatingPointError) as err:
        rows.append(Row(method, p.name, p.epsilon, cfg.h, n * cfg.h, None, FAIL_MARKER))
        msg = f"{method} {p.name} eps={p.epsilon:g} h={cfg.h:g} at t={n * cfg.h:g}: {err}"
    if msg is None and any(r.failed for r in rows):
        msg = f"{method} {p.name} eps={p.epsilon:g} h={cfg.h:g}: non-finite metric"
    return rows, maxima, msg


def run_longrun(spec):
    """Invariant errors every ``spec.stride`` steps for every (method, epsilon, h).

    ``e_H`` is always reported, ``e_M`` for axisymmetric problems, ``e_I``
    wherever the field does not vanish.  The momentum error is measured with
    the vector potential scaled by ``1/eps`` (the variant conserved by the
    exact flow); the maximum of the unscaled variant is kept in ``maxima``.
    """
    if spec.mode != "longrun":
        raise ValueError("run_longrun needs a longrun spec")
    base = builtin_problem(spec.problem)
    tasks = [(m, base.with_epsilon(eps), spec.config(h), spec.t_end, spec.stride)
             for m in spec.methods for eps in spec.epsilons for h in spec.hs]
    results = _map(_longrun_task, tasks, spec.workers)
    rows, maxima, failures = [], {}, []
    for (m, p, cfg, _, _), (r, mx, msg) in zip(tasks, results):
        rows.extend(r)
        maxima[(m, p.epsilon, cfg.h)] = mx
        if msg is not None:
            failures.append(msg)
    rows.sort(key=Row.sort_key)
    if spec.out:
        write_csv(rows, spec.out)
    return LongrunResult(rows, maxima, failures)


def run(spec):
    """Dispatch on ``spec.mode``."""
    return run_convergence(spec) if spec.mode == "convergence" else run_longrun(spec)


def convergence_hs(kmin=3, kmax=7):
    """Step sizes ``2**-k`` for ``k = kmin..kmax`` (largest first)."""
    return tuple(2.0 ** -k for k in range(kmin, kmax + 1))


__all__ = [
    "CSV_HEADER", "FAIL_MARKER", "H_REF", "REFERENCE_TOL", "METHODS", "MethodInfo", "method_info",
    "ExperimentSpec", "Invariants", "ReferenceSolution", "reference_solution", "relative_error",
    "Row", "write_csv", "fit_slope", "ConvergenceResult", "LongrunResult", "run_convergence",
    "run_longrun", "run", "convergence_hs",
]
