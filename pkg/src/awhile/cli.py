"""Command-line front end.

Every subcommand is a thin adapter over the library: identical inputs
through the CLI and through the module API produce identical results.
Exit codes: 0 for success/Holds, 1 for Violated (or an ill-typed program
under ``typecheck``), 2 for usage, syntax, and precondition errors.

Environment variables SLH_MAX_DIRS and SLH_FUEL override the default
exploration bounds when the corresponding flags are not given.
"""

from __future__ import annotations

import argparse
import json
import os
import random
import sys
from typing import List, Optional

from . import seccheck
from .flow_ifc import Labeling, flow_track, pretty_acom, well_labeled
from .harden import (
    DEFAULT_FLAG_VAR,
    FISLH,
    FVSLH,
    ISLH,
    SISLH,
    SISLH_NO_STORE_MASK,
    SVSLH,
    USLH,
    FlagCollisionError,
    harden,
    harden_fs,
)
from .ideal_sem import (
    FsIdealConfig,
    IdealFS,
    IdealFiSLH,
    IdealFvSLH,
    ideal_feasible_dirs,
    ideal_run,
    ideal_step_ex,
)
from .ifc_static import (
    LabelMap,
    LabelingError,
    PUBLIC,
    all_secret,
    parse_labeling,
    wt_cct,
    wt_ifc,
)
from .lang import ParseError, Skip, arrays_of, parse_com, pretty_com, used_vars
from .seccheck import (
    Bounds,
    NamePools,
    PreconditionError,
    Verdict,
    VerdictStatus,
    check_bcc,
    check_relative_security,
    check_sct,
    check_step_ni,
    check_unwinding,
    check_wl_preservation,
    enum_states,
    gen_program,
    parse_space,
    random_spec_walk,
    transform,
)
from .spec_sem import StepTag, feasible_dirs, spec_run, step_ex
from .seq_sem import seq_run
from .state import (
    SpecConfig,
    StateFormatError,
    format_state,
    format_trace,
    parse_dirs,
    parse_state_full,
)
from .fixtures import FIXTURES, repro_listing

_VARIANTS = {
    "islh": ISLH,
    "sislh": SISLH,
    "fislh": FISLH,
    "uslh": USLH,
    "svslh": SVSLH,
    "fvslh": FVSLH,
}


class CliError(Exception):
    """Usage-level failure; exits with status 2."""


def _read_input(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise CliError(f"cannot read {path!r}: {exc}")


def _load_program(path: str):
    text = _read_input(path)
    if not text.strip():
        raise CliError("empty program")
    return parse_com(text)


def _load_labels(path: Optional[str]) -> LabelMap:
    if path is None:
        return all_secret()
    return parse_labeling(_read_input(path))


def _env_default(name: str, fallback: int) -> int:
    raw = os.environ.get(name)
    if raw is None:
        return fallback
    try:
        return int(raw)
    except ValueError:
        raise CliError(f"{name} must be an integer, got {raw!r}")


def _bounds(args) -> Bounds:
    max_dirs = args.max_dirs
    if max_dirs is None:
        max_dirs = _env_default("SLH_MAX_DIRS", seccheck.DEFAULT_MAX_DIRS)
    fuel = args.fuel
    if fuel is None:
        fuel = _env_default("SLH_FUEL", seccheck.DEFAULT_FUEL)
    return Bounds(max_dirs, fuel)


def _emit(args, payload: dict, text_lines: List[str]):
    if getattr(args, "format", "text") == "json":
        print(json.dumps(payload, indent=2, sort_keys=True))
    else:
        for line in text_lines:
            print(line)


def _verdict_payload(v: Verdict) -> dict:
    out = {"status": str(v.status)}
    if v.bounds is not None:
        out["max_dirs"] = v.bounds.max_dirs
        out["fuel"] = v.bounds.fuel
        if v.bounds.space:
            out["space"] = v.bounds.space
    if v.message:
        out["message"] = v.message
    if v.witness is not None:
        w = v.witness
        out["witness"] = {
            "state1": format_state(*w.s1),
            "state2": format_state(*w.s2),
            "dirs": " ".join(str(d) for d in w.dirs),
            "trace1": [str(o) for o in w.trace1],
            "trace2": [str(o) for o in w.trace2],
            "divergence_index": w.divergence_index,
        }
    return out


def _verdict_lines(v: Verdict) -> List[str]:
    lines = [str(v.status)]
    if v.message:
        lines.append(v.message)
    if v.witness is not None:
        w = v.witness
        lines.append("directives: " + " ".join(str(d) for d in w.dirs))
        lines.append("trace 1: " + "; ".join(str(o) for o in w.trace1))
        lines.append("trace 2: " + "; ".join(str(o) for o in w.trace2))
        lines.append(f"diverges at observation {w.divergence_index + 1}")
        s1 = format_state(*w.s1).replace("\n", ", ") or "(all defaults)"
        s2 = format_state(*w.s2).replace("\n", ", ") or "(all defaults)"
        lines.append("state 1: " + s1)
        lines.append("state 2: " + s2)
    return lines


def _verdict_exit(v: Verdict) -> int:
    if v.status is VerdictStatus.HOLDS:
        return 0
    if v.status is VerdictStatus.VIOLATED:
        return 1
    return 2


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def cmd_parse(args) -> int:
    com = _load_program(args.program)
    _emit(args, {"ast": repr(com)}, [repr(com)])
    return 0


def cmd_print(args) -> int:
    com = _load_program(args.program)
    _emit(args, {"program": pretty_com(com)}, [pretty_com(com)])
    return 0


def cmd_typecheck(args) -> int:
    com = _load_program(args.program)
    labels = _load_labels(args.labels)
    if args.system == "cct":
        ok = wt_cct(labels, labels, com)
    else:
        ok = wt_ifc(labels, labels, PUBLIC, com)
    _emit(args, {"system": args.system, "well_typed": ok},
          ["well-typed" if ok else "ill-typed"])
    return 0 if ok else 1


def cmd_analyze(args) -> int:
    com = _load_program(args.program)
    labels = _load_labels(args.labels)
    acom, final = flow_track(com, labels, labels, PUBLIC)
    scalars = sorted(used_vars(com))
    arrays = sorted(arrays_of(com))
    out_labels = "\n".join(
        [f"{n}: {final.vars.get(n)}" for n in scalars]
        + [f"{n}: {final.arrs.get(n)}" for n in arrays]
    )
    _emit(
        args,
        {"annotated": pretty_acom(acom), "final_labeling": out_labels},
        [pretty_acom(acom), "", "# final labeling", out_labels],
    )
    return 0


def cmd_harden(args) -> int:
    com = _load_program(args.program)
    labels = _load_labels(args.labels)
    if args.variant == "fsfvslh":
        acom, _ = flow_track(com, labels, labels, PUBLIC)
        hardened = harden_fs(acom, args.flag_var)
    else:
        variant = _VARIANTS[args.variant]
        if args.variant == "sislh" and args.no_store_mask:
            variant = SISLH_NO_STORE_MASK
        elif args.no_store_mask:
            raise CliError("--no-store-mask only applies to --variant sislh")
        hardened = harden(variant, com, labels, labels, args.flag_var)
    _emit(args, {"program": pretty_com(hardened)}, [pretty_com(hardened)])
    return 0


def _run_interactive(cfg: SpecConfig, fuel: int) -> int:
    """Prompt for a directive at every observing redex; reuses the batch
    stepper, so interactive runs cannot diverge from spec_run."""
    trace = []
    while fuel > 0:
        if isinstance(cfg.com, Skip):
            break
        r = step_ex(cfg, None)
        if r.tag is StepTag.STEPPED:
            cfg = r.cfg
            fuel -= 1
            continue
        if r.tag is StepTag.STUCK:
            print("stuck")
            break
        feas = feasible_dirs(cfg)
        if not feas:
            print("stuck: no feasible directive")
            break
        print("command:")
        print(pretty_com(cfg.com))
        print("state: " + format_state(cfg.rho, cfg.mu).replace("\n", ", "))
        print(f"flag: {'1' if cfg.flag else '0'}")
        print("feasible: " + " | ".join(str(d) for d in feas))
        sys.stdout.write("dir> ")
        sys.stdout.flush()
        line = sys.stdin.readline()
        if not line:
            print("(end of input)")
            break
        line = line.strip()
        if line in ("q", "quit", "exit"):
            break
        try:
            chosen = parse_dirs(line)
        except StateFormatError as exc:
            print(f"error: {exc}")
            continue
        if len(chosen) != 1:
            print("error: one directive at a time")
            continue
        r = step_ex(cfg, chosen[0])
        if r.tag is not StepTag.STEPPED:
            print("directive does not apply here")
            continue
        cfg = r.cfg
        fuel -= 1
        if r.obs is not None:
            trace.append(r.obs)
            print(f"obs: {r.obs}")
    print("trace:")
    if trace:
        print(format_trace(trace))
    print("final state: " + format_state(cfg.rho, cfg.mu).replace("\n", ", "))
    return 0


def cmd_run(args) -> int:
    com = _load_program(args.program)
    rho, mu, warnings = (
        parse_state_full(_read_input(args.state)) if args.state else parse_state_full("")
    )
    for w in warnings:
        print(f"warning: {w}", file=sys.stderr)
    fuel = args.fuel if args.fuel is not None else _env_default(
        "SLH_FUEL", seccheck.DEFAULT_FUEL
    )
    dirs = parse_dirs(args.dirs) if args.dirs else []
    labels = _load_labels(args.labels)

    if args.interactive:
        if args.sem != "spec":
            raise CliError("--interactive requires --sem spec")
        return _run_interactive(SpecConfig(com, rho, mu, False), fuel)

    if args.sem == "seq":
        out = seq_run(com, rho, mu, fuel)
        final_state = format_state(out.rho, out.mu)
        consumed = None
    elif args.sem == "spec":
        res = spec_run(SpecConfig(com, rho, mu, False), dirs, fuel)
        out = res
        final_state = format_state(res.final.rho, res.final.mu)
        consumed = res.consumed
    else:
        if args.sem == "ideal-fislh":
            variant = IdealFiSLH(labels, labels)
            cfg = SpecConfig(com, rho, mu, False)
        elif args.sem == "ideal-fvslh":
            variant = IdealFvSLH(labels, labels)
            cfg = SpecConfig(com, rho, mu, False)
        else:  # ideal-fs
            variant = IdealFS()
            acom, _ = flow_track(com, labels, labels, PUBLIC)
            cfg = FsIdealConfig(acom, rho, mu, False, PUBLIC, labels, labels)
        res = ideal_run(variant, cfg, dirs, fuel)
        out = res
        final_state = format_state(res.final.rho, res.final.mu)
        consumed = res.consumed
    payload = {
        "outcome": str(out.kind),
        "trace": [str(o) for o in out.trace],
        "final_state": final_state,
    }
    lines = []
    if out.trace:
        lines.append(format_trace(out.trace))
    lines.append(f"outcome: {out.kind}")
    if consumed is not None:
        payload["consumed"] = consumed
        lines.append(f"consumed: {consumed}")
    lines.append("final state:")
    lines.append(final_state if final_state else "(all defaults)")
    _emit(args, payload, lines)
    return 0


def _check_equality(args, com, labels) -> int:
    results = {}
    if wt_cct(labels, labels, com):
        results["fislh_eq_sislh"] = harden(FISLH, com, labels, labels) == harden(
            SISLH, com, labels, labels
        )
    secret = all_secret()
    results["fislh_eq_uslh_all_secret"] = harden(FISLH, com, secret, secret) == harden(
        USLH, com, secret, secret
    )
    results["fvslh_eq_uslh_all_secret"] = harden(FVSLH, com, secret, secret) == harden(
        USLH, com, secret, secret
    )
    ok = all(results.values())
    _emit(
        args,
        {"status": "holds" if ok else "violated", **results},
        [f"{k}: {v}" for k, v in results.items()] + ["holds" if ok else "violated"],
    )
    return 0 if ok else 1


def cmd_check(args) -> int:
    com = _load_program(args.program)
    labels = _load_labels(args.labels)
    bounds = _bounds(args)
    variant = args.variant or "none"

    if args.property == "equality":
        return _check_equality(args, com, labels)

    space = parse_space(_read_input(args.space)) if args.space else seccheck.StateSpace()

    if args.property == "sct":
        target = transform(variant, com, labels, labels, args.flag_var)
        v = check_sct(target, labels, labels, space, bounds)
    elif args.property == "relsec":
        v = check_relative_security(
            variant, com, labels, labels, space, bounds, args.flag_var
        )
    elif args.property == "bcc":
        return _check_bcc_cli(args, com, labels, space, bounds)
    elif args.property == "ni":
        return _check_ni_cli(args, com, labels, space, bounds)
    elif args.property == "unwind":
        return _check_unwind_cli(args, com, labels, space, bounds)
    elif args.property == "wl":
        return _check_wl_cli(args, com, labels, space, bounds)
    else:
        raise CliError(f"unknown property {args.property!r}")

    _emit(args, _verdict_payload(v), _verdict_lines(v))
    return _verdict_exit(v)


def _require_variant(args):
    if not args.variant or args.variant not in ("fislh", "fvslh", "fsfvslh"):
        raise CliError(
            f"--property {args.property} needs --variant fislh|fvslh|fsfvslh"
        )


def _check_bcc_cli(args, com, labels, space, bounds) -> int:
    _require_variant(args)
    failures = []
    runs = 0
    if args.dirs:
        dirs = parse_dirs(args.dirs)
        for rho, mu in enum_states(space):
            runs += 1
            ok, why = check_bcc(
                args.variant, com, labels, labels, rho, mu, dirs, bounds.fuel,
                args.flag_var,
            )
            if not ok:
                failures.append(why)
                break
    else:
        rng = random.Random(args.seed)
        hardened = transform(args.variant, com, labels, labels, args.flag_var)
        states = list(enum_states(space))  # never empty: the empty space has one state
        for _ in range(args.trials):
            rho, mu = states[rng.randrange(len(states))]
            runs += 1
            walk = random_spec_walk(
                rng, SpecConfig(hardened, rho, mu, False), bounds.max_dirs, bounds.fuel
            )
            ok, why = check_bcc(
                args.variant, com, labels, labels, rho, mu, walk, bounds.fuel,
                args.flag_var,
            )
            if not ok:
                failures.append(why)
                break
    ok = not failures
    _emit(
        args,
        {"status": "holds" if ok else "violated", "runs": runs, "failures": failures},
        [f"runs: {runs}"] + failures + ["holds" if ok else "violated"],
    )
    return 0 if ok else 1


def _check_ni_cli(args, com, labels, space, bounds) -> int:
    _require_variant(args)
    from .state import FORCE, STEP

    states = list(enum_states(space))
    failures = []
    checked = 0
    for i, s1 in enumerate(states):
        for s2 in states[i:]:
            for flag in (False, True):
                for d in (None, STEP, FORCE):
                    try:
                        ok, why = check_step_ni(
                            args.variant, com, labels, labels, s1, s2, flag, d
                        )
                    except PreconditionError:
                        continue
                    checked += 1
                    if not ok:
                        failures.append(why)
    ok = not failures
    _emit(
        args,
        {"status": "holds" if ok else "violated", "checked": checked,
         "failures": failures[:5]},
        [f"checked: {checked}"] + failures[:5] + ["holds" if ok else "violated"],
    )
    return 0 if ok else 1


def _check_unwind_cli(args, com, labels, space, bounds) -> int:
    _require_variant(args)
    states = list(enum_states(space))
    for i, s1 in enumerate(states):
        for s2 in states[i + 1:]:
            v = check_unwinding(args.variant, com, labels, labels, s1, s2, bounds)
            if v.status is VerdictStatus.VIOLATED:
                _emit(args, _verdict_payload(v), _verdict_lines(v))
                return 1
    v = Verdict(VerdictStatus.HOLDS, bounds=bounds)
    _emit(args, _verdict_payload(v), _verdict_lines(v))
    return 0


def _check_wl_cli(args, com, labels, space, bounds) -> int:
    acom, final = flow_track(com, labels, labels, PUBLIC)
    if not well_labeled(acom, Labeling(labels, labels), PUBLIC, final):
        _emit(args, {"status": "violated"}, ["analysis output not well-labeled"])
        return 1
    rng = random.Random(args.seed)
    fs = IdealFS()
    checked = 0
    for rho, mu in enum_states(space):
        cfg = FsIdealConfig(acom, rho, mu, False, PUBLIC, labels, labels)
        for _ in range(bounds.max_dirs * 4):
            feas = ideal_feasible_dirs(fs, cfg)
            d = rng.choice(feas) if feas else None
            ok, why = check_wl_preservation(
                cfg.acom, Labeling(cfg.P, cfg.PA), cfg.pc, final,
                cfg.rho, cfg.mu, cfg.flag, d,
            )
            checked += 1
            if not ok:
                _emit(args, {"status": "violated", "why": why}, [why, "violated"])
                return 1
            r = ideal_step_ex(fs, cfg, d)
            if r.tag is not StepTag.STEPPED:
                break
            cfg = r.cfg
    _emit(
        args,
        {"status": "holds", "checked": checked},
        [f"checked: {checked}", "holds"],
    )
    return 0


def cmd_repro(args) -> int:
    if args.listing not in FIXTURES:
        raise CliError(f"no fixture for listing {args.listing}")
    bounds = _bounds(args)
    code, lines, verdicts = repro_listing(args.listing, bounds)
    payload = {
        "listing": args.listing,
        "verdicts": [_verdict_payload(v) for v in verdicts],
        "exit": code,
    }
    _emit(args, payload, lines)
    return code


def cmd_gen(args) -> int:
    pools = NamePools()
    com = gen_program(args.seed, args.size)
    _emit(args, {"program": pretty_com(com)}, [pretty_com(com)])
    return 0


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(
        prog="awhile",
        description="AWhile: speculative semantics, IFC analyses, SLH "
        "hardening, and bounded differential security checking",
    )
    sub = top.add_subparsers(dest="command", required=True)

    def common(p, labels=False, bounds=False, fmt=True):
        p.add_argument("program", help="program file ('-' for stdin)")
        if labels:
            p.add_argument("--labels", help="labeling file (default: all secret)")
        if bounds:
            p.add_argument("--max-dirs", type=int, default=None)
            p.add_argument("--fuel", type=int, default=None)
        if fmt:
            p.add_argument("--format", choices=["text", "json"], default="text")

    p = sub.add_parser("parse", help="parse and dump the AST")
    common(p)
    p.set_defaults(fn=cmd_parse)

    p = sub.add_parser("print", help="parse and pretty-print")
    common(p)
    p.set_defaults(fn=cmd_print)

    p = sub.add_parser("typecheck", help="IFC or constant-time typing")
    p.add_argument("--system", choices=["ifc", "cct"], default="ifc")
    common(p, labels=True)
    p.set_defaults(fn=cmd_typecheck)

    p = sub.add_parser("analyze", help="flow-sensitive IFC analysis")
    common(p, labels=True)
    p.set_defaults(fn=cmd_analyze)

    p = sub.add_parser("harden", help="apply an SLH variant")
    p.add_argument(
        "--variant",
        choices=["islh", "sislh", "fislh", "uslh", "svslh", "fvslh", "fsfvslh"],
        required=True,
    )
    p.add_argument("--no-store-mask", action="store_true",
                   help="sislh only: skip store-index masking (insecure)")
    p.add_argument("--flag-var", default=DEFAULT_FLAG_VAR)
    common(p, labels=True)
    p.set_defaults(fn=cmd_harden)

    p = sub.add_parser("run", help="run a program under a semantics")
    p.add_argument(
        "--sem",
        choices=["seq", "spec", "ideal-fislh", "ideal-fvslh", "ideal-fs"],
        default="seq",
    )
    p.add_argument("--state", help="state file")
    p.add_argument("--dirs", help="directive string, e.g. 'force load a 0 step'")
    p.add_argument("--fuel", type=int, default=None)
    p.add_argument("--interactive", action="store_true",
                   help="prompt for each directive (spec semantics only)")
    common(p, labels=True)
    p.set_defaults(fn=cmd_run)

    p = sub.add_parser("check", help="bounded security checks")
    p.add_argument(
        "--property",
        choices=["sct", "relsec", "bcc", "ni", "unwind", "wl", "equality"],
        required=True,
    )
    p.add_argument(
        "--variant",
        choices=["none", "islh", "sislh", "sislh-nostore", "fislh", "uslh",
                 "svslh", "fvslh", "fsfvslh"],
        default=None,
    )
    p.add_argument("--space", help="state-space file")
    p.add_argument("--dirs", help="bcc: fixed directive string")
    p.add_argument("--trials", type=int, default=100, help="bcc: random runs")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--flag-var", default=DEFAULT_FLAG_VAR)
    common(p, labels=True, bounds=True)
    p.set_defaults(fn=cmd_check)

    p = sub.add_parser("repro", help="replay a fixture's documented result")
    p.add_argument("--listing", type=int, required=True, choices=sorted(FIXTURES))
    p.add_argument("--max-dirs", type=int, default=None)
    p.add_argument("--fuel", type=int, default=None)
    p.add_argument("--format", choices=["text", "json"], default="text")
    p.set_defaults(fn=cmd_repro)

    p = sub.add_parser("gen", help="generate a random program")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--size", type=int, default=10)
    p.add_argument("--format", choices=["text", "json"], default="text")
    p.set_defaults(fn=cmd_gen)

    return top


def main(argv: Optional[List[str]] = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (CliError, ParseError, StateFormatError, LabelingError,
            seccheck.SpaceFormatError, PreconditionError,
            FlagCollisionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
