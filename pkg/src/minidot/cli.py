"""Command line interface.

Exit codes: 0 success/proved, 1 refuted or violations found, 2 the only
obstacle was fuel (unknown), 3 usage or parse errors.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .evaluator import EMPTY_ENV, ErrorRes, EvalRun, Timeout, ValRes, evaluate
from .fsub_bridge import TARGET_LEVEL, encode_tm
from .harness import (bridge_suite, cyclic_store_check, gallery_suite,
                      pushback_suite, smallstep_agreement, soundness_suite,
                      substitution_probe, totality_suite, transfer_suite)
from .judgment import PROVED, REFUTED, UNKNOWN, Verdict
from .parser import GateError, ParseError, parse_program, render_tm
from .runtime_checker import Mode, TyPair, dyn_subtype
from .smallstep import MachineState, step
from .static_checker import typecheck
from .syntax import LEVEL_NAMES, Level, StructuralError, TypingCtx, parse_level

EXIT_OK = 0
EXIT_REFUTED = 1
EXIT_UNKNOWN = 2
EXIT_USAGE = 3


def _read_source(args) -> str:
    if args.expr is not None:
        return args.expr
    if args.file is None:
        raise ParseError("no input: give a file or use -e")
    with open(args.file) as fh:
        return fh.read()


def _emit(args, payload: dict, text: str) -> None:
    if args.format == "json":
        print(json.dumps(payload, indent=2))
    else:
        print(text)


def _verdict_exit(v: Verdict) -> int:
    if v is PROVED:
        return EXIT_OK
    if v is REFUTED:
        return EXIT_REFUTED
    return EXIT_UNKNOWN


def cmd_check(args) -> int:
    level = parse_level(args.calculus)
    t = parse_program(_read_source(args), level)
    r = typecheck(level, TypingCtx(), t, args.fuel)
    payload = {"verdict": r.judgment.verdict.value,
               "fuel_used": r.judgment.fuel_used,
               "violations": [] if r.proved else [r.judgment.reason]}
    if r.proved:
        payload["type"] = str(r.ty)
        _emit(args, payload, f"proved: {r.ty}")
    else:
        _emit(args, payload,
              f"{r.judgment.verdict.value}: {r.judgment.reason}")
    return _verdict_exit(r.judgment.verdict)


def cmd_eval(args) -> int:
    level = parse_level(args.calculus)
    t = parse_program(_read_source(args), level)
    r = typecheck(level, TypingCtx(), t, args.fuel * 100)
    term = r.term if r.proved else t
    res, run = evaluate(level, args.fuel, term)
    if isinstance(res, Timeout):
        payload = {"verdict": "unknown", "fuel_used": args.fuel,
                   "violations": []}
        _emit(args, payload, "timeout")
        return EXIT_UNKNOWN
    if isinstance(res, ErrorRes):
        payload = {"verdict": "refuted", "fuel_used": args.fuel,
                   "violations": [res.message]}
        _emit(args, payload, str(res))
        return EXIT_REFUTED
    payload = {"verdict": "proved", "fuel_used": args.fuel,
               "violations": [], "value": str(res.value)}
    _emit(args, payload, str(res.value))
    return EXIT_OK


def cmd_rtcheck(args) -> int:
    from .codec import absenv_from_json, env_from_json, styping_from_json, \
        ty_from_json
    level = parse_level(args.calculus)
    with open(args.file) as fh:
        bundle = json.load(fh)
    env1 = env_from_json(bundle.get("env", []))
    env2 = env_from_json(bundle.get("env2", bundle.get("env", [])))
    j = absenv_from_json(bundle.get("hypotheses", []))
    sty = styping_from_json(bundle.get("store_typing", []))
    t1 = ty_from_json(bundle["lhs"])
    t2 = ty_from_json(bundle["rhs"])
    mode = Mode(bundle.get("mode", "imprecise"))
    res = dyn_subtype(level, sty, j, TyPair(env1, t1), TyPair(env2, t2),
                      mode, args.fuel, trace=args.trace)
    payload = {"verdict": res.verdict.value, "fuel_used": res.fuel_used,
               "violations": [] if res.proved else [res.reason]}
    text = res.verdict.value
    if args.trace and res.trace is not None:
        text += "\n" + res.trace.render()
    _emit(args, payload, text)
    return _verdict_exit(res.verdict)


def cmd_translate(args) -> int:
    if parse_level(args.source) != Level.FSUB:
        raise ParseError("only the fsub source language is supported")
    target = parse_level(args.target)
    if target < TARGET_LEVEL:
        raise ParseError("the image needs at least the level with Bot")
    t = parse_program(_read_source(args), Level.FSUB)
    img = encode_tm(t)
    rendered = render_tm(img)
    payload = {"verdict": "proved", "fuel_used": 0, "violations": [],
               "term": rendered}
    _emit(args, payload, rendered)
    return EXIT_OK


def cmd_step(args) -> int:
    level = parse_level(args.calculus)
    if level != Level.DSUB:
        raise ParseError("stepping is defined for the dsub level")
    t = parse_program(_read_source(args), level)
    st = MachineState([], t)
    states = [st.render()]
    for i in range(args.fuel):
        r = step(st)
        if r.kind == "value":
            payload = {"verdict": "proved", "fuel_used": i, "violations": [],
                       "final": st.render()}
            text = "\n".join(states) if args.trace else st.render()
            _emit(args, payload, text)
            return EXIT_OK
        if r.kind == "stuck":
            payload = {"verdict": "refuted", "fuel_used": i,
                       "violations": [r.detail]}
            _emit(args, payload, f"stuck: {r.detail}")
            return EXIT_REFUTED
        st = r.state
        states.append(st.render())
    payload = {"verdict": "unknown", "fuel_used": args.fuel,
               "violations": []}
    _emit(args, payload, "step limit reached")
    return EXIT_UNKNOWN


def cmd_soundcheck(args) -> int:
    level = parse_level(args.calculus)
    reports = [
        soundness_suite(level, args.size, args.fuel),
        totality_suite(level, args.count, args.seed),
    ]
    if args.report_dir:
        from .report import write_csv, write_figures, write_rows_csv
        os.makedirs(args.report_dir, exist_ok=True)
        write_csv(reports, os.path.join(args.report_dir, "report.csv"))
        for r in reports:
            write_rows_csv(r, os.path.join(
                args.report_dir, f"{r.name.replace('[', '_').rstrip(']')}.csv"))
        write_figures(reports, args.report_dir)
    violations = [v for r in reports for v in r.violations]
    payload = {"verdict": "proved" if not violations else "refuted",
               "fuel_used": args.fuel, "violations": violations,
               "suites": {r.name: {"total": r.total,
                                   "violations": len(r.violations)}
                          for r in reports}}
    lines = [f"{r.name}: {r.total} checked, {len(r.violations)} violations"
             for r in reports]
    _emit(args, payload, "\n".join(lines))
    return EXIT_OK if not violations else EXIT_REFUTED


def cmd_gallery(args) -> int:
    rep = gallery_suite()
    payload = {"verdict": "proved" if rep.ok else "refuted",
               "fuel_used": 0, "violations": rep.violations,
               "exhibits": rep.extras}
    lines = [f"{k}: {v}" for k, v in rep.extras.items()]
    lines.append("all exhibits reproduced" if rep.ok
                 else "; ".join(rep.violations))
    _emit(args, payload, "\n".join(lines))
    return EXIT_OK if rep.ok else EXIT_REFUTED


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="minidot",
        description="Workbench for the System D calculus family")
    sub = ap.add_subparsers(dest="cmd", required=True)

    def common(p, needs_input=True):
        p.add_argument("--calculus", default="dot",
                       choices=sorted(LEVEL_NAMES),
                       help="which level of the ladder to use")
        p.add_argument("--fuel", type=int, default=1000)
        p.add_argument("--format", choices=["text", "json"], default="text")
        p.add_argument("--trace", action="store_true")
        if needs_input:
            p.add_argument("file", nargs="?")
            p.add_argument("-e", "--expr", default=None,
                           help="inline program text instead of a file")

    p = sub.add_parser("check", help="typecheck a program")
    common(p)
    p.set_defaults(fn=cmd_check)

    p = sub.add_parser("eval", help="run a program")
    common(p)
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("rtcheck", help="dynamic subtype check from a JSON bundle")
    common(p)
    p.set_defaults(fn=cmd_rtcheck)

    p = sub.add_parser("translate", help="encode an fsub program")
    common(p)
    p.add_argument("--from", dest="source", default="fsub")
    p.add_argument("--to", dest="target", default="dsubbot")
    p.set_defaults(fn=cmd_translate)

    p = sub.add_parser("step", help="small-step a dsub program")
    common(p)
    p.set_defaults(fn=cmd_step)

    p = sub.add_parser("soundcheck", help="run the soundness suites")
    common(p, needs_input=False)
    p.add_argument("--size", type=int, default=4)
    p.add_argument("--count", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--report-dir", default=None)
    p.set_defaults(fn=cmd_soundcheck, fuel=30)

    p = sub.add_parser("gallery", help="reproduce the bad-bounds exhibits")
    common(p, needs_input=False)
    p.set_defaults(fn=cmd_gallery)

    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code not in (0,) else 0
    try:
        return args.fn(args)
    except (ParseError, GateError, StructuralError, OSError,
            json.JSONDecodeError, KeyError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
