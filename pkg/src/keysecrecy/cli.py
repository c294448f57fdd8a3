"""Command-line front end.

Exit codes: 0 success or all checks passed, 2 the trace-distance verdict (or
a selected check) failed, 64 usage or parse error, 1 numerical failure.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass

from . import _jsonio
from .compose import OtpExperiment, UnsupportedConfiguration, run_otp_exact, run_otp_montecarlo
from .criteria import build_report, trace_distance_to_ideal
from .distinguish import GuessingNotConverged
from .harness import CHECKS, run_check
from .numerics import ValidationError
from .states import StateFormatError, flip_zero_key, ideal_key, load_state, spike_key
from .tolerances import TOL

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_VERDICT = 2
EXIT_USAGE = 64

DEFAULT_EPS = 1e-20


class UsageError(Exception):
    pass


@dataclass(frozen=True)
class Config:
    epsilon_target: float = DEFAULT_EPS
    tol: float = TOL.solver_tol
    seed: int | None = None
    output_format: str = "text"

    def __post_init__(self):
        if not 0.0 < self.epsilon_target < 1.0:
            raise UsageError(f"--eps must lie in (0, 1), got {self.epsilon_target!r}")
        if not 0.0 < self.tol < 1e-2:
            raise UsageError(f"--tol must lie in (0, 0.01), got {self.tol!r}")
        if self.seed is not None and not 0 <= self.seed < 2**64:
            raise UsageError("--seed must be a 64-bit unsigned integer")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _caveat(eps, l=None):
    if l is not None and eps < 2.0 ** -l:
        return (f"note: eps={eps:g} is far below 2^-{l} = {2.0 ** -l:g}; at this key length"
                f" meaningful comparisons use eps near 2^-{l}.")
    return f"note: eps={eps:g}."


def _emit(text, out):
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        sys.stdout.write(text + "\n")


def _config(args, eps_default=DEFAULT_EPS):
    eps = eps_default if args.eps is None else args.eps
    return Config(epsilon_target=eps, tol=args.tol, seed=args.seed, output_format=args.format)


def _render(payload, text, cfg):
    return _jsonio.dumps(payload) if cfg.output_format == "json" else text


def cmd_analyze(args):
    cfg = _config(args)
    state = load_state(args.state_file)
    print(_caveat(cfg.epsilon_target, state.l), file=sys.stderr)
    report = build_report(state, cfg.epsilon_target, cfg.tol)
    _emit(_render(report.to_json_dict(), report.to_text(), cfg), args.out)
    return EXIT_OK if report.verdict_td else EXIT_VERDICT


def _demo_state(name, l, delta):
    if name == "flip-zero":
        return flip_zero_key(l)
    if delta is None:
        raise UsageError("demo spike requires --delta")
    return spike_key(l, delta)


DEMO_TEXT = {
    "flip-zero": (
        "The key equals a uniform key except that 0...0 is replaced by 1...1. "
        "It differs from the ideal key with probability 2^-l, so its distinguishing "
        "advantage is td = {td}. Guessing 1...1 succeeds with probability {pg}, twice "
        "the uniform value, so the relative guessing error is {err}. The key is "
        "td-secret for every eps >= 2^-l while failing the guessing criterion for every eps < 1."
    ),
    "spike": (
        "The key puts extra weight delta on 0...0. Its trace distance to uniform is "
        "td = {td}, yet its guessing probability is {pg}, a relative error of {err} = "
        "delta * 2^l. It satisfies the trace-distance criterion at eps = delta while "
        "violating the guessing criterion at the same eps."
    ),
}


def cmd_demo(args):
    cfg = _config(args)
    state = _demo_state(args.name, args.l, args.delta)
    print(_caveat(cfg.epsilon_target, state.l), file=sys.stderr)
    report = build_report(state, cfg.epsilon_target, cfg.tol)
    prose = DEMO_TEXT[args.name].format(
        td=_jsonio.fmt_float(report.td),
        pg=_jsonio.fmt_float(report.p_guess),
        err=_jsonio.fmt_float(report.hy_rel_error),
    )
    payload = {"demo": args.name, "report": report.to_json_dict(), "demonstrates": prose}
    _emit(_render(payload, report.to_text() + "\n\n" + prose, cfg), args.out)
    return EXIT_OK


def cmd_verify(args):
    if args.check != "all" and args.check not in CHECKS:
        raise UsageError(f"unknown check {args.check!r}; choose from all, {', '.join(CHECKS)}")
    names = CHECKS if args.check == "all" else (args.check,)
    sampling = {"TD_implies_UC", "HY_implies_UC"}
    if args.seed is None and sampling.intersection(names):
        raise UsageError("--seed is required for sampling checks")
    cfg = Config(tol=args.tol, seed=args.seed, output_format=args.format)
    print("note: sampling checks use their own eps defaults unless --eps is given.", file=sys.stderr)
    results = []
    for name in names:
        l = args.l if args.check != "all" or name not in sampling else None
        results.append(run_check(name, n_samples=args.samples, seed=args.seed or 0, l=l, eps=args.eps))
    passed = all(r.passed for r in results)
    payload = {"passed": passed, "results": [r.to_json_dict() for r in results]}
    lines = []
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        extras = ", ".join(
            f"{k}={_jsonio.fmt_float(v) if isinstance(v, float) else v}"
            for k, v in r.details.items() if not isinstance(v, (list, dict))
        )
        lines.append(f"{status} {r.name}: instances={r.instances_tested} violations={len(r.violations)} {extras}")
        for flag in r.details.get("quantum_flagged", []):
            lines.append(f"FINDING {r.name}: quantum-side state {flag['state']} exceeds eps: {flag['observed']}")
    _emit(_render(payload, "\n".join(lines), cfg), args.out)
    return EXIT_OK if passed else EXIT_VERDICT


def _compose_state(args):
    if args.state in ("flip-zero", "spike", "ideal"):
        if args.l is None:
            raise UsageError(f"compose {args.state} requires --l")
        if args.state == "ideal":
            return ideal_key(args.l)
        return _demo_state(args.state, args.l, args.delta)
    return load_state(args.state)


def cmd_compose(args):
    cfg = _config(args)
    state = _compose_state(args)
    print(_caveat(cfg.epsilon_target, state.l), file=sys.stderr)
    if args.trials and args.seed is None:
        raise UsageError("--seed is required when --trials > 0")
    exp = OtpExperiment(state)
    res = run_otp_exact(exp)
    td = trace_distance_to_ideal(state)
    comp = res.to_json_dict()
    comp.update({
        "td": td,
        "bound_satisfied": res.inflation <= td + TOL.compose_slack,
        "tight": abs(res.inflation - td) <= TOL.compose_slack,
    })
    if args.trials:
        mc = run_otp_montecarlo(exp, args.trials, args.seed)
        comp["montecarlo"] = mc.to_json_dict()
    lines = [f"{k:16s} {_jsonio.fmt_float(v) if isinstance(v, float) else str(v).lower()}"
             for k, v in comp.items() if not isinstance(v, dict)]
    if "montecarlo" in comp:
        lines += [f"mc_{k:13s} {_jsonio.fmt_float(v) if isinstance(v, float) else v}"
                  for k, v in comp["montecarlo"].items()]
    _emit(_render({"composition": comp}, "\n".join(lines), cfg), args.out)
    return EXIT_OK if comp["bound_satisfied"] else EXIT_VERDICT


def _positive_int(text):
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError("must be non-negative")
    return v


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--eps", type=float, default=None, help="target epsilon (default 1e-20)")
    common.add_argument("--tol", type=float, default=TOL.solver_tol, help="solver bracket width")
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--format", choices=("text", "json"), default="text")
    common.add_argument("--out", default=None, help="write output to this path instead of stdout")

    p = _Parser(prog="keysecrecy", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    a = sub.add_parser("analyze", parents=[common], help="report every criterion for a state file")
    a.add_argument("state_file")
    a.set_defaults(func=cmd_analyze)

    d = sub.add_parser("demo", parents=[common], help="report on a built-in separating example")
    d.add_argument("name", choices=("flip-zero", "spike"))
    d.add_argument("--l", type=int, required=True)
    d.add_argument("--delta", type=float, default=None)
    d.set_defaults(func=cmd_demo)

    v = sub.add_parser("verify", parents=[common], help="run implication checks")
    v.add_argument("check", help="all, " + ", ".join(CHECKS))
    v.add_argument("--samples", type=_positive_int, default=1000)
    v.add_argument("--l", type=int, default=None)
    v.set_defaults(func=cmd_verify)

    c = sub.add_parser("compose", parents=[common], help="one-time-pad experiment for a key")
    c.add_argument("state", help="state file, or one of flip-zero, spike, ideal")
    c.add_argument("--l", type=int, default=None)
    c.add_argument("--delta", type=float, default=None)
    c.add_argument("--trials", type=_positive_int, default=0)
    c.set_defaults(func=cmd_compose)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, UnsupportedConfiguration, StateFormatError, ValidationError, OSError) as exc:
        print(f"keysecrecy {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except GuessingNotConverged as exc:
        print(f"keysecrecy {args.command}: {exc}", file=sys.stderr)
        return EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
