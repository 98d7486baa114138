"""
Command-line driver.

    cpdexp convergence --problem P2 --method m1c,m2c,boris,avf --epsilon 1,0.01
    cpdexp longrun --problem P4 --method m1b,boris --h 0.01 --t-end 1000
    cpdexp check-conditions --method m2c
    cpdexp list-problems

Exit status: 0 on success, 1 on a usage error, 2 on a numerical failure
(failed run, failed reference check, failed condition check).
"""
import argparse
import sys

from . import conditions, harness
from .errors import ConvergenceError, DomainError, ReferenceQualityError
from .methods import BUILTIN_METHODS
from .model import PROBLEM_IDS, builtin_problem, energy

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NUMERICAL = 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on bad arguments; that code is reserved here
    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}")


def _floats(text):
    try:
        return tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _names(text):
    return tuple(x.strip().lower() for x in text.split(",") if x.strip())


def _add_run_options(sp, t_end, hs_help):
    sp.add_argument("--problem", default="P2", type=str.upper, choices=PROBLEM_IDS)
    sp.add_argument("--method", type=_names, default=None,
                    help="comma-separated subset of " + ",".join(harness.METHODS))
    sp.add_argument("--epsilon", type=_floats, default=(1.0,), help="comma-separated epsilons")
    sp.add_argument("--h", type=_floats, default=None, help=hs_help)
    sp.add_argument("--t-end", type=float, default=t_end)
    sp.add_argument("--quad-nodes", type=int, default=16)
    sp.add_argument("--fp-tol", type=float, default=1e-14)
    sp.add_argument("--fp-maxit", type=int, default=100)
    sp.add_argument("--stride", type=int, default=100)
    sp.add_argument("--out", default=None, help="CSV output path")
    sp.add_argument("--workers", type=int, default=1, help="parallel runs (processes)")


def build_parser():
    parser = _Parser(prog="cpdexp", description="Exponential energy-preserving integrators "
                     "for charged-particle dynamics: experiments and checks.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    conv = sub.add_parser("convergence", help="global error against a reference, slope fit")
    _add_run_options(conv, 10.0, "comma-separated step sizes (default 2^-3..2^-7)")
    conv.add_argument("--h-ref", type=float, default=harness.H_REF,
                      help="reference step size (validated against h_ref/2)")

    lr = sub.add_parser("longrun", help="energy, momentum and magnetic moment errors over time")
    _add_run_options(lr, 1000.0, "step size(s) (default 0.01)")

    cc = sub.add_parser("check-conditions", help="verify node, energy, symmetry and order conditions")
    cc.add_argument("--method", default="m1c", type=str.lower, choices=tuple(BUILTIN_METHODS))
    cc.add_argument("--tol", type=float, default=1e-11)
    cc.add_argument("--seed", type=int, default=0)
    cc.add_argument("--samples", type=int, default=100)

    sub.add_parser("list-problems", help="describe the built-in problems")
    return parser


def _default_methods(problem):
    if builtin_problem(problem).field.is_uniform:
        return ("m1c", "m2c", "boris", "avf")
    return ("m1b", "m2b", "boris", "avf")


def _spec(args, mode):
    hs = args.h
    if hs is None:
        hs = harness.convergence_hs() if mode == "convergence" else (0.01,)
    return harness.ExperimentSpec(
        problem=args.problem, methods=args.method or _default_methods(args.problem),
        epsilons=args.epsilon, mode=mode, hs=hs, t_end=args.t_end, stride=args.stride,
        out=args.out, quad_nodes=args.quad_nodes, fp_tol=args.fp_tol, fp_maxit=args.fp_maxit,
        h_ref=getattr(args, "h_ref", harness.H_REF), workers=args.workers)


def _cmd_convergence(args, out):
    result = harness.run_convergence(_spec(args, "convergence"))
    for eps, ref in result.references.items():
        print(f"reference eps={eps:g}: t={ref.t:g}", file=out)
    print(result.summary(), file=out)
    if args.out:
        print(f"wrote {args.out}", file=out)
    return EXIT_NUMERICAL if result.failed else EXIT_OK


def _cmd_longrun(args, out):
    result = harness.run_longrun(_spec(args, "longrun"))
    print(result.summary(), file=out)
    if args.out:
        print(f"wrote {args.out}", file=out)
    return EXIT_NUMERICAL if result.failed else EXIT_OK


def _cmd_check_conditions(args, out):
    coeffs = BUILTIN_METHODS[args.method]()
    samples = conditions.sample_arguments(args.samples, args.seed)
    report = conditions.check_all(coeffs, samples, args.tol)
    print(f"method {coeffs.name}", file=out)
    print(report.table(), file=out)
    order = conditions.check_order_conditions(coeffs, coeffs.order)
    print(order.table(), file=out)
    ok = report.passed and order.passed
    print("PASS" if ok else "FAIL", file=out)
    return EXIT_OK if ok else EXIT_NUMERICAL


def _cmd_list_problems(args, out):
    for pid in PROBLEM_IDS:
        p = builtin_problem(pid)
        kind = "uniform" if p.field.is_uniform else "nonuniform"
        pot = f"polynomial degree {p.potential.polynomial_degree}" if p.potential.polynomial_degree \
            else "non-polynomial"
        print(f"{pid}: {kind} field, {pot} potential, x0={p.x0.tolist()}, v0={p.v0.tolist()}, "
              f"H0={energy(p, p.initial_state()):.12g}", file=out)
        if p.singular_set_description:
            print(f"    singular set: {p.singular_set_description}", file=out)
    return EXIT_OK


_COMMANDS = {
    "convergence": _cmd_convergence,
    "longrun": _cmd_longrun,
    "check-conditions": _cmd_check_conditions,
    "list-problems": _cmd_list_problems,
}


def main(argv=None, out=None):
    out = sys.stdout if out is None else out
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args, out)
    except UsageError as err:
        print(err, file=sys.stderr)
        return EXIT_USAGE
    except ValueError as err:
        if isinstance(err, DomainError):
            print(f"numerical failure: {err}", file=sys.stderr)
            return EXIT_NUMERICAL
        print(f"cpdexp: error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except (ConvergenceError, ReferenceQualityError, FloatingPointError) as err:
        print(f"numerical failure: {err}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
