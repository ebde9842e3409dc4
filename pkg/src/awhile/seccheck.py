"""Bounded differential checking of the security definitions and lemmas.

The universally-quantified attacker of the definitions is realized by
exhaustive enumeration of directive sequences up to a depth bound, with the
trace-prefix comparison done at a single maximal fuel (sound because traces
grow monotonically with fuel).  Enumeration is feasibility-directed: only
directives some rule can consume are explored, which is sound because an
infeasible directive leaves both runs stuck at the same point with equal
empty suffixes.

Every Violated verdict carries a concrete witness (states, directive list,
the two diverging traces, and the index of the first divergence) that
replays: re-running the two executions reproduces the traces.

The fuel-bounded premise check of relative security under-approximates the
set of state pairs the unbounded definition quantifies over (a pair whose
sequential runs diverge only beyond the fuel bound is treated as satisfying
the premise); this is a documented soundness caveat of the bounded checker.
"""

from __future__ import annotations

import enum
import itertools
import random
import re
from dataclasses import dataclass
from typing import Iterator, List, Optional, Sequence, Tuple

from . import spec_sem
from .flow_ifc import ACom, Labeling, flow_track, well_labeled
from .harden import (
    DEFAULT_FLAG_VAR,
    FISLH,
    FVSLH,
    ISLH,
    SISLH,
    SISLH_NO_STORE_MASK,
    SVSLH,
    USLH,
    harden,
    harden_fs,
)
from .ideal_sem import (
    FsIdealConfig,
    IdealFS,
    IdealFiSLH,
    IdealFvSLH,
    IdealVariant,
    ideal_feasible_dirs,
    ideal_final,
    ideal_run,
    ideal_step_ex,
)
from .ifc_static import (
    Label,
    LabelMap,
    PUBLIC,
    all_secret,
    wt_ifc,
)
from .lang import (
    And,
    ARead,
    Asgn,
    AWrite,
    BinOp,
    BoolLit,
    Cmp,
    Com,
    CTCond,
    If,
    Not,
    Num,
    Or,
    Seq,
    Skip,
    SKIP,
    Var,
    While,
    used_vars,
    vars_of_expr,
)
from .seq_sem import RunKind, seq_run
from .spec_sem import StepTag, feasible_dirs, step_ex
from .state import (
    ArrayState,
    Dir,
    Obs,
    ScalarState,
    SpecConfig,
    dir_sort_key,
    pub_equiv,
    pub_equiv_arrays,
    pub_equiv_scalars,
)

DEFAULT_MAX_DIRS = 8
DEFAULT_FUEL = 200


@dataclass(frozen=True)
class Bounds:
    max_dirs: int = DEFAULT_MAX_DIRS
    fuel: int = DEFAULT_FUEL
    space: str = ""  # descriptor of the state space a verdict ranged over

    def over(self, space: "StateSpace") -> "Bounds":
        return Bounds(self.max_dirs, self.fuel, space.describe())


# ---------------------------------------------------------------------------
# Verdicts
# ---------------------------------------------------------------------------


class VerdictStatus(enum.Enum):
    HOLDS = "holds"
    VIOLATED = "violated"
    PRECONDITION_FAILED = "precondition-failed"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class Witness:
    s1: Tuple[ScalarState, ArrayState]
    s2: Tuple[ScalarState, ArrayState]
    dirs: Tuple[Dir, ...]
    trace1: Tuple[Obs, ...]
    trace2: Tuple[Obs, ...]
    divergence_index: int


@dataclass(frozen=True)
class Verdict:
    status: VerdictStatus
    witness: Optional[Witness] = None
    bounds: Optional[Bounds] = None
    message: str = ""

    @property
    def holds(self) -> bool:
        return self.status is VerdictStatus.HOLDS


def prefix_of(o1: Sequence[Obs], o2: Sequence[Obs]) -> bool:
    """True iff one observation sequence is a prefix of the other."""
    n = min(len(o1), len(o2))
    return tuple(o1[:n]) == tuple(o2[:n])


# ---------------------------------------------------------------------------
# State spaces
# ---------------------------------------------------------------------------


class SpaceFormatError(Exception):
    pass


@dataclass(frozen=True)
class StateSpace:
    """Finite grid of initial states: per-scalar value domains and per-array
    shapes (fixed size, per-cell domain)."""

    scalars: Tuple[Tuple[str, Tuple[int, ...]], ...] = ()
    arrays: Tuple[Tuple[str, int, Tuple[int, ...]], ...] = ()

    def names(self) -> frozenset:
        return frozenset(n for n, _ in self.scalars) | frozenset(
            n for n, _, _ in self.arrays
        )

    def count(self) -> int:
        total = 1
        for _, dom in self.scalars:
            total *= len(dom)
        for _, size, dom in self.arrays:
            total *= len(dom) ** size
        return total

    def describe(self) -> str:
        parts = [f"{n} in {{{','.join(map(str, dom))}}}" for n, dom in self.scalars]
        parts += [
            f"{n} : size {size} in {{{','.join(map(str, dom))}}}"
            for n, size, dom in self.arrays
        ]
        return "; ".join(parts)


_SPACE_SCALAR_RE = re.compile(
    r"^([A-Za-z_][A-Za-z_0-9]*)\s+in\s+\{([^}]*)\}$"
)
_SPACE_ARRAY_RE = re.compile(
    r"^([A-Za-z_][A-Za-z_0-9]*)\s*:\s*size\s+(\d+)\s+in\s+\{([^}]*)\}$"
)


def parse_space(text: str) -> StateSpace:
    """Space file: ``NAME in {v1,v2,...}`` for scalars, ``NAME : size K in
    {v1,...}`` for arrays, one per line; '#' comments."""
    scalars: List[Tuple[str, Tuple[int, ...]]] = []
    arrays: List[Tuple[str, int, Tuple[int, ...]]] = []
    seen = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = _SPACE_ARRAY_RE.match(line)
        if m:
            name, size, dom = m.group(1), int(m.group(2)), m.group(3)
            if name in seen:
                raise SpaceFormatError(f"line {lineno}: duplicate name {name!r}")
            seen.add(name)
            values = tuple(int(v.strip()) for v in dom.split(",") if v.strip())
            if not values:
                raise SpaceFormatError(f"line {lineno}: empty domain")
            arrays.append((name, size, values))
            continue
        m = _SPACE_SCALAR_RE.match(line)
        if m:
            name, dom = m.group(1), m.group(2)
            if name in seen:
                raise SpaceFormatError(f"line {lineno}: duplicate name {name!r}")
            seen.add(name)
            values = tuple(int(v.strip()) for v in dom.split(",") if v.strip())
            if not values:
                raise SpaceFormatError(f"line {lineno}: empty domain")
            scalars.append((name, values))
            continue
        raise SpaceFormatError(
            f"line {lineno}: expected 'NAME in {{...}}' or 'NAME : size K in {{...}}'"
        )
    return StateSpace(tuple(scalars), tuple(arrays))


def enum_states(space: StateSpace) -> Iterator[Tuple[ScalarState, ArrayState]]:
    """Cartesian product of the declared domains, in deterministic order.
    The empty space yields the single all-default state."""
    scalar_names = [n for n, _ in space.scalars]
    scalar_doms = [dom for _, dom in space.scalars]
    array_names = [n for n, _, _ in space.arrays]
    array_doms = [
        list(itertools.product(dom, repeat=size)) for _, size, dom in space.arrays
    ]
    for svals in itertools.product(*scalar_doms):
        rho = ScalarState(dict(zip(scalar_names, svals)))
        for avecs in itertools.product(*array_doms):
            mu = ArrayState(dict(zip(array_names, avecs)))
            yield rho, mu


# ---------------------------------------------------------------------------
# Semantics adapters: one interface over the speculative and ideal steppers
# ---------------------------------------------------------------------------


class SpecSemantics:
    def step_ex(self, cfg, d):
        return step_ex(cfg, d)

    def feasible(self, cfg):
        return feasible_dirs(cfg)

    def is_final(self, cfg) -> bool:
        return isinstance(cfg.com, Skip)


class IdealSemantics:
    def __init__(self, variant: IdealVariant):
        self.variant = variant

    def step_ex(self, cfg, d):
        return ideal_step_ex(self.variant, cfg, d)

    def feasible(self, cfg):
        return ideal_feasible_dirs(self.variant, cfg)

    def is_final(self, cfg) -> bool:
        return ideal_final(self.variant, cfg)


_SPEC = SpecSemantics()


def _advance(sem, cfg, fuel: int):
    """Run silent steps to quiescence.  Returns (cfg, fuel_used, status)
    with status one of 'need-dir', 'final', 'stuck', 'fuel'."""
    used = 0
    while True:
        if sem.is_final(cfg):
            return cfg, used, "final"
        if used >= fuel:
            return cfg, used, "fuel"
        r = sem.step_ex(cfg, None)
        if r.tag is StepTag.NEED_DIR:
            return cfg, used, "need-dir"
        if r.tag is StepTag.STUCK:
            return cfg, used, "stuck"
        cfg = r.cfg
        used += 1


def enum_spec_runs(
    cfg: SpecConfig,
    sem=None,
    max_dirs: int = DEFAULT_MAX_DIRS,
    fuel: int = DEFAULT_FUEL,
) -> List[Tuple[Tuple[Dir, ...], Tuple[Obs, ...], RunKind]]:
    """Exhaustively explore the directive tree of one configuration: every
    feasible directive at every observing redex, up to max_dirs consumed
    directives.  Returns (directives, trace, outcome kind) per leaf."""
    sem = sem or _SPEC
    out: List[Tuple[Tuple[Dir, ...], Tuple[Obs, ...], RunKind]] = []

    def rec(cfg, dirs, trace, fuel_left):
        cfg, used, status = _advance(sem, cfg, fuel_left)
        fuel_left -= used
        if status == "final":
            out.append((dirs, trace, RunKind.TERMINATED))
            return
        if status == "stuck":
            out.append((dirs, trace, RunKind.STUCK))
            return
        if status == "fuel":
            out.append((dirs, trace, RunKind.FUEL_EXHAUSTED))
            return
        feas = sem.feasible(cfg)
        if not feas:
            out.append((dirs, trace, RunKind.STUCK))
            return
        if len(dirs) >= max_dirs:
            out.append((dirs, trace, RunKind.DIRS_EXHAUSTED))
            return
        for d in feas:
            r = sem.step_ex(cfg, d)
            rec(r.cfg, dirs + (d,), trace + (r.obs,), fuel_left - 1)

    rec(cfg, (), (), fuel)
    return out


def _joint_divergence(sem1, cfg1, sem2, cfg2, max_dirs: int, fuel: int):
    """Search for a directive sequence both runs can consume whose traces
    differ.  Returns (dirs, trace1, trace2, index) for the first divergence
    in canonical order, or None.  Directive sequences only one run can
    consume are vacuous for observational equivalence and are pruned."""

    def rec(c1, c2, dirs, t1, t2, f1, f2):
        c1, u1, s1 = _advance(sem1, c1, f1)
        f1 -= u1
        c2, u2, s2 = _advance(sem2, c2, f2)
        f2 -= u2
        if s1 != "need-dir" or s2 != "need-dir":
            return None
        if len(dirs) >= max_dirs:
            return None
        feas = sorted(
            set(sem1.feasible(c1)) | set(sem2.feasible(c2)), key=dir_sort_key
        )
        for d in feas:
            r1 = sem1.step_ex(c1, d)
            r2 = sem2.step_ex(c2, d)
            if r1.tag is not StepTag.STEPPED or r2.tag is not StepTag.STEPPED:
                continue
            nd, nt1, nt2 = dirs + (d,), t1 + (r1.obs,), t2 + (r2.obs,)
            if r1.obs != r2.obs:
                return nd, nt1, nt2, len(t1)
            res = rec(r1.cfg, r2.cfg, nd, nt1, nt2, f1 - 1, f2 - 1)
            if res is not None:
                return res
        return None

    return rec(cfg1, cfg2, (), (), (), fuel, fuel)


# ---------------------------------------------------------------------------
# Definition-level checks
# ---------------------------------------------------------------------------


def check_seq_obs_equiv(
    c: Com,
    s1: Tuple[ScalarState, ArrayState],
    s2: Tuple[ScalarState, ArrayState],
    fuel: int = DEFAULT_FUEL,
) -> Verdict:
    """Bounded sequential observational equivalence: the two full traces at
    maximal fuel must be prefix-related (trace monotonicity makes checking
    one fuel value equivalent to checking all of them)."""
    o1 = seq_run(c, s1[0], s1[1], fuel)
    o2 = seq_run(c, s2[0], s2[1], fuel)
    if prefix_of(o1.trace, o2.trace):
        return Verdict(VerdictStatus.HOLDS, bounds=Bounds(0, fuel))
    idx = next(
        i for i, (a, b) in enumerate(zip(o1.trace, o2.trace)) if a != b
    )
    return Verdict(
        VerdictStatus.VIOLATED,
        Witness(s1, s2, (), o1.trace, o2.trace, idx),
        Bounds(0, fuel),
    )


def check_spec_obs_equiv(
    c1: Com,
    s1: Tuple[ScalarState, ArrayState],
    c2: Com,
    s2: Tuple[ScalarState, ArrayState],
    flag: bool = False,
    max_dirs: int = DEFAULT_MAX_DIRS,
    fuel: int = DEFAULT_FUEL,
) -> Verdict:
    """Bounded speculative observational equivalence: every directive
    sequence (up to the bound) both configurations can consume must produce
    equal traces on the consumed prefix."""
    cfg1 = SpecConfig(c1, s1[0], s1[1], flag)
    cfg2 = SpecConfig(c2, s2[0], s2[1], flag)
    res = _joint_divergence(_SPEC, cfg1, _SPEC, cfg2, max_dirs, fuel)
    bounds = Bounds(max_dirs, fuel)
    if res is None:
        return Verdict(VerdictStatus.HOLDS, bounds=bounds)
    dirs, t1, t2, idx = res
    return Verdict(VerdictStatus.VIOLATED, Witness(s1, s2, dirs, t1, t2, idx), bounds)


def _pub_equiv_pairs(space: StateSpace, P: LabelMap, PA: LabelMap):
    states = list(enum_states(space))
    for i, s1 in enumerate(states):
        for s2 in states[i + 1:]:
            if pub_equiv(P, PA, s1, s2):
                yield s1, s2


def check_sct(
    c: Com,
    P: LabelMap,
    PA: LabelMap,
    space: StateSpace,
    bounds: Bounds = Bounds(),
) -> Verdict:
    """Speculative constant-time, bounded: every public-equivalent pair of
    initial states from the space, starting non-misspeculating, must be
    speculatively observationally equivalent."""
    bounds = bounds.over(space)
    for s1, s2 in _pub_equiv_pairs(space, P, PA):
        v = check_spec_obs_equiv(
            c, s1, c, s2, False, bounds.max_dirs, bounds.fuel
        )
        if not v.holds:
            return Verdict(v.status, v.witness, bounds)
    return Verdict(VerdictStatus.HOLDS, bounds=bounds)


_RELSEC_VARIANTS = {
    "none": None,
    "islh": ISLH,
    "sislh": SISLH,
    "sislh-nostore": SISLH_NO_STORE_MASK,
    "fislh": FISLH,
    "uslh": USLH,
    "svslh": SVSLH,
    "fvslh": FVSLH,
    "fsfvslh": "fsfvslh",
}


def transform(
    variant_kind: str,
    c: Com,
    P: LabelMap,
    PA: LabelMap,
    flag_var: str = DEFAULT_FLAG_VAR,
) -> Com:
    """Apply the named hardening (or none) to a program."""
    if variant_kind not in _RELSEC_VARIANTS:
        raise ValueError(f"unknown variant {variant_kind!r}")
    v = _RELSEC_VARIANTS[variant_kind]
    if v is None:
        return c
    if v == "fsfvslh":
        acom, _ = flow_track(c, P, PA, PUBLIC)
        return harden_fs(acom, flag_var)
    return harden(v, c, P, PA, flag_var)


def check_relative_security(
    variant_kind: str,
    c: Com,
    P: LabelMap,
    PA: LabelMap,
    space: StateSpace,
    bounds: Bounds = Bounds(),
    flag_var: str = DEFAULT_FLAG_VAR,
) -> Verdict:
    """Bounded relative security of a hardening variant on one program: for
    every public-equivalent pair of initial states whose *source* runs are
    sequentially observationally equivalent, the hardened program's runs
    must be speculatively observationally equivalent.

    Pairs failing the sequential premise are skipped (the source already
    leaks the difference).  variant_kind 'none' checks the source program
    itself.  'uslh' pairs all states regardless of the labeling, matching
    its theorem, which has no public-equivalence premise.
    """
    if variant_kind not in _RELSEC_VARIANTS:
        return Verdict(
            VerdictStatus.PRECONDITION_FAILED, message=f"unknown variant {variant_kind!r}"
        )
    if variant_kind != "none" and flag_var in used_vars(c):
        return Verdict(
            VerdictStatus.PRECONDITION_FAILED,
            message=f"program uses the reserved flag variable {flag_var!r}",
        )
    if any(size < 1 for _, size, _ in space.arrays):
        return Verdict(
            VerdictStatus.PRECONDITION_FAILED,
            message="state space contains an empty array",
        )
    if flag_var in space.names():
        return Verdict(
            VerdictStatus.PRECONDITION_FAILED,
            message=f"state space binds the reserved flag variable {flag_var!r}",
        )
    if variant_kind in ("fislh", "fvslh") and not wt_ifc(P, PA, PUBLIC, c):
        return Verdict(
            VerdictStatus.PRECONDITION_FAILED,
            message=f"{variant_kind} requires an IFC-well-typed program",
        )
    hardened = transform(variant_kind, c, P, PA, flag_var)
    bounds = bounds.over(space)
    pair_P, pair_PA = (all_secret(), all_secret()) if variant_kind == "uslh" else (P, PA)
    for s1, s2 in _pub_equiv_pairs(space, pair_P, pair_PA):
        premise = check_seq_obs_equiv(c, s1, s2, bounds.fuel)
        if not premise.holds:
            continue
        v = check_spec_obs_equiv(
            hardened, s1, hardened, s2, False, bounds.max_dirs, bounds.fuel
        )
        if not v.holds:
            return Verdict(v.status, v.witness, bounds)
    return Verdict(VerdictStatus.HOLDS, bounds=bounds)


# ---------------------------------------------------------------------------
# Lemma-level checks
# ---------------------------------------------------------------------------


class PreconditionError(Exception):
    pass


def ideal_variant_for(
    variant_kind: str, P: LabelMap, PA: LabelMap
) -> IdealVariant:
    if variant_kind == "fislh":
        return IdealFiSLH(P, PA)
    if variant_kind == "fvslh":
        return IdealFvSLH(P, PA)
    if variant_kind == "fsfvslh":
        return IdealFS()
    raise PreconditionError(
        f"no ideal semantics for variant {variant_kind!r}; the other variants "
        "are covered through the flexible ones"
    )


def _source_config(
    variant_kind: str, c: Com, P: LabelMap, PA: LabelMap, rho, mu, flag: bool
):
    if variant_kind == "fsfvslh":
        acom, _ = flow_track(c, P, PA, PUBLIC)
        return FsIdealConfig(acom, rho, mu, flag, PUBLIC, P, PA)
    return SpecConfig(c, rho, mu, flag)


def check_bcc(
    variant_kind: str,
    c: Com,
    P: LabelMap,
    PA: LabelMap,
    rho: ScalarState,
    mu: ArrayState,
    dirs: Sequence[Dir],
    fuel: int = DEFAULT_FUEL,
    flag_var: str = DEFAULT_FLAG_VAR,
) -> Tuple[bool, str]:
    """Backwards compiler correctness, one run: the hardened program under
    the speculative semantics and the source under the matching ideal
    semantics, driven by the same directives, must produce identical traces
    and directive consumption, identical arrays and misspeculation flag, and
    scalars identical off the flag variable.  A terminated hardened run must
    map to a terminated (or terminal) source run whose program flag variable
    encodes the semantic flag.

    Side conditions: all arrays non-empty, the source does not use the flag
    variable, and the flag variable's initial value encodes the initial
    misspeculation flag.
    """
    if flag_var in used_vars(c):
        raise PreconditionError(f"program uses flag variable {flag_var!r}")
    if any(len(vec) == 0 for _, vec in mu.items()):
        raise PreconditionError("empty array in initial state")
    b0 = rho.get(flag_var)
    if b0 not in (0, 1):
        raise PreconditionError(
            f"{flag_var!r} must be 0 or 1 in the initial state, found {b0}"
        )
    flag = bool(b0)
    ivariant = ideal_variant_for(variant_kind, P, PA)
    hardened = transform(variant_kind, c, P, PA, flag_var)

    target = spec_sem.spec_run(SpecConfig(hardened, rho, mu, flag), dirs, fuel)
    if target.kind is RunKind.FUEL_EXHAUSTED:
        raise PreconditionError("fuel too small for the hardened run")
    used = list(dirs[: target.consumed])
    source = ideal_run(
        ivariant, _source_config(variant_kind, c, P, PA, rho, mu, flag), used, fuel
    )
    if source.kind is RunKind.FUEL_EXHAUSTED:
        raise PreconditionError("fuel too small for the ideal run")

    if source.consumed != target.consumed:
        return False, (
            f"consumed {source.consumed} directives ideally "
            f"vs {target.consumed} speculatively"
        )
    if source.trace != target.trace:
        return False, f"traces differ: ideal {source.trace} vs spec {target.trace}"
    src_cfg, tgt_cfg = source.final, target.final
    if src_cfg.mu != tgt_cfg.mu:
        return False, "array states differ"
    if src_cfg.flag != tgt_cfg.flag:
        return False, "misspeculation flags differ"
    names = (src_cfg.rho.names() | tgt_cfg.rho.names()) - {flag_var}
    for n in sorted(names):
        if src_cfg.rho.get(n) != tgt_cfg.rho.get(n):
            return False, f"scalar {n!r} differs off the flag variable"
    if target.kind is RunKind.TERMINATED:
        if source.kind is not RunKind.TERMINATED:
            return False, f"target terminated but source {source.kind}"
        if tgt_cfg.rho.get(flag_var) != (1 if tgt_cfg.flag else 0):
            return False, "terminated run: flag variable does not encode the flag"
    return True, "ok"


def check_step_ni(
    variant_kind: str,
    c: Com,
    P: LabelMap,
    PA: LabelMap,
    s1: Tuple[ScalarState, ArrayState],
    s2: Tuple[ScalarState, ArrayState],
    flag: bool,
    d: Optional[Dir],
) -> Tuple[bool, str]:
    """Single-step noninterference of the ideal semantics: from two related
    states, steps of the same command with equal directive and observation
    yield equal successor commands, equal flags, public-equivalent scalars,
    and the variant's array relation (unconditional for the index variant;
    conditional on not misspeculating for the value variants).

    Vacuously true when either side cannot step or the observations differ.
    """
    ivariant = ideal_variant_for(variant_kind, P, PA)
    value_based = variant_kind in ("fvslh", "fsfvslh")
    if variant_kind == "fsfvslh":
        acom, final = flow_track(c, P, PA, PUBLIC)
        if not well_labeled(acom, Labeling(P, PA), PUBLIC, final):
            raise PreconditionError("analysis output not well-labeled")
    elif not wt_ifc(P, PA, PUBLIC, c):
        raise PreconditionError("program not IFC-well-typed")
    if not pub_equiv_scalars(P, s1[0], s2[0]):
        raise PreconditionError("scalar states not public-equivalent")
    if value_based:
        if not flag and not pub_equiv_arrays(PA, s1[1], s2[1]):
            raise PreconditionError("array states not public-equivalent at flag=F")
    elif not pub_equiv_arrays(PA, s1[1], s2[1]):
        raise PreconditionError("array states not public-equivalent")

    cfg1 = _source_config(variant_kind, c, P, PA, s1[0], s1[1], flag)
    cfg2 = _source_config(variant_kind, c, P, PA, s2[0], s2[1], flag)
    r1 = ideal_step_ex(ivariant, cfg1, d)
    r2 = ideal_step_ex(ivariant, cfg2, d)
    if r1.tag is not StepTag.STEPPED or r2.tag is not StepTag.STEPPED:
        return True, "vacuous: a side is stuck"
    if r1.obs != r2.obs or r1.consumed != r2.consumed:
        return True, "vacuous: observations differ"
    n1, n2 = r1.cfg, r2.cfg
    prog1 = n1.acom if isinstance(n1, FsIdealConfig) else n1.com
    prog2 = n2.acom if isinstance(n2, FsIdealConfig) else n2.com
    if prog1 != prog2:
        return False, "successor commands differ"
    if n1.flag != n2.flag:
        return False, "successor flags differ"
    # the flow-sensitive variant relates states through its dynamic
    # labelings (a secret stored into a public array re-labels the array);
    # the fixed-labeling variants exclude that by typing
    if isinstance(n1, FsIdealConfig):
        if (n1.pc, n1.P, n1.PA) != (n2.pc, n2.P, n2.PA):
            return False, "successor dynamic labelings differ"
        out_P, out_PA = n1.P, n1.PA
    else:
        out_P, out_PA = P, PA
    if not pub_equiv_scalars(out_P, n1.rho, n2.rho):
        return False, "successor scalars not public-equivalent"
    if value_based:
        if not n1.flag and not pub_equiv_arrays(out_PA, n1.mu, n2.mu):
            return False, "successor arrays not public-equivalent at flag=F"
    elif not pub_equiv_arrays(out_PA, n1.mu, n2.mu):
        return False, "successor arrays not public-equivalent"
    return True, "ok"


def check_unwinding(
    variant_kind: str,
    c: Com,
    P: LabelMap,
    PA: LabelMap,
    s1: Tuple[ScalarState, ArrayState],
    s2: Tuple[ScalarState, ArrayState],
    bounds: Bounds = Bounds(),
) -> Verdict:
    """Unwinding of ideal misspeculated executions: from public-equivalent,
    well-typed (or well-labeled) configurations that are already
    misspeculating, identical directives yield identical observations."""
    try:
        ivariant = ideal_variant_for(variant_kind, P, PA)
    except PreconditionError as exc:
        return Verdict(VerdictStatus.PRECONDITION_FAILED, message=str(exc))
    if variant_kind == "fsfvslh":
        acom, final = flow_track(c, P, PA, PUBLIC)
        if not well_labeled(acom, Labeling(P, PA), PUBLIC, final):
            return Verdict(
                VerdictStatus.PRECONDITION_FAILED, message="not well-labeled"
            )
    elif not wt_ifc(P, PA, PUBLIC, c):
        return Verdict(
            VerdictStatus.PRECONDITION_FAILED, message="not IFC-well-typed"
        )
    if not pub_equiv_scalars(P, s1[0], s2[0]):
        return Verdict(
            VerdictStatus.PRECONDITION_FAILED,
            message="scalars not public-equivalent",
        )
    if variant_kind == "fislh" and not pub_equiv_arrays(PA, s1[1], s2[1]):
        return Verdict(
            VerdictStatus.PRECONDITION_FAILED,
            message="arrays not public-equivalent",
        )
    sem = IdealSemantics(ivariant)
    cfg1 = _source_config(variant_kind, c, P, PA, s1[0], s1[1], True)
    cfg2 = _source_config(variant_kind, c, P, PA, s2[0], s2[1], True)
    res = _joint_divergence(sem, cfg1, sem, cfg2, bounds.max_dirs, bounds.fuel)
    if res is None:
        return Verdict(VerdictStatus.HOLDS, bounds=bounds)
    dirs, t1, t2, idx = res
    return Verdict(
        VerdictStatus.VIOLATED, Witness(s1, s2, dirs, t1, t2, idx), bounds
    )


def check_wl_preservation(
    acom: ACom,
    initial: Labeling,
    pc: Label,
    final: Labeling,
    rho: ScalarState,
    mu: ArrayState,
    flag: bool,
    d: Optional[Dir],
) -> Tuple[bool, str]:
    """One flow-sensitive ideal step from a well-labeled configuration must
    leave a configuration well-labeled against the same final labeling."""
    if not well_labeled(acom, initial, pc, final):
        raise PreconditionError("initial configuration not well-labeled")
    cfg = FsIdealConfig(acom, rho, mu, flag, pc, initial.vars, initial.arrs)
    r = ideal_step_ex(IdealFS(), cfg, d)
    if r.tag is not StepTag.STEPPED:
        return True, "vacuous: no step"
    n = r.cfg
    if well_labeled(n.acom, Labeling(n.P, n.PA), n.pc, final):
        return True, "ok"
    return False, "successor not well-labeled"


# ---------------------------------------------------------------------------
# Program and state generation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class NamePools:
    scalars: Tuple[str, ...] = ("x", "y", "z", "i", "k")
    arrays: Tuple[str, ...] = ("a", "c")


def _gen_aexp(rng: random.Random, pools: NamePools, depth: int, need_var: bool):
    if depth <= 0:
        if need_var or rng.random() < 0.6:
            return Var(rng.choice(pools.scalars))
        return Num(rng.randrange(4))
    roll = rng.random()
    if roll < 0.35:
        e = Var(rng.choice(pools.scalars)) if rng.random() < 0.7 else Num(rng.randrange(4))
    elif roll < 0.9:
        op = rng.choice("+-*")
        e = BinOp(
            op,
            _gen_aexp(rng, pools, depth - 1, False),
            _gen_aexp(rng, pools, depth - 1, False),
        )
    else:
        e = CTCond(
            _gen_bexp(rng, pools, depth - 1, False),
            _gen_aexp(rng, pools, depth - 1, False),
            _gen_aexp(rng, pools, depth - 1, False),
        )
    if need_var and not vars_of_expr(e):
        e = BinOp("+", Var(rng.choice(pools.scalars)), e)
    return e


def _gen_bexp(rng: random.Random, pools: NamePools, depth: int, need_var: bool):
    roll = rng.random()
    if depth > 0 and roll < 0.15:
        return Not(_gen_bexp(rng, pools, depth - 1, need_var))
    if depth > 0 and roll < 0.3:
        ctor = And if rng.random() < 0.5 else Or
        return ctor(
            _gen_bexp(rng, pools, depth - 1, need_var),
            _gen_bexp(rng, pools, depth - 1, False),
        )
    if not need_var and roll > 0.92:
        return BoolLit(rng.random() < 0.5)
    op = rng.choice(["=", "<>", "<=", "<"])
    return Cmp(
        op,
        _gen_aexp(rng, pools, 1, need_var),
        _gen_aexp(rng, pools, 1, False),
    )


def _gen_leaf(rng: random.Random, pools: NamePools, assignable: Tuple[str, ...]) -> Com:
    kinds = ["asgn", "skip"]
    if pools.arrays:
        kinds += ["aread", "awrite", "awrite"]
    kind = rng.choice(kinds)
    if kind == "skip" or (kind in ("asgn", "aread") and not assignable):
        return SKIP
    if kind == "asgn":
        return Asgn(rng.choice(assignable), _gen_aexp(rng, pools, 2, False))
    if kind == "aread":
        return ARead(
            rng.choice(assignable),
            rng.choice(pools.arrays),
            _gen_aexp(rng, pools, 1, True),
        )
    return AWrite(
        rng.choice(pools.arrays),
        _gen_aexp(rng, pools, 1, True),
        _gen_aexp(rng, pools, 1, False),
    )


def _rseq(first: Com, second: Com) -> Com:
    # keep sequences right-nested, the shape the grammar produces
    if isinstance(first, Seq):
        return Seq(first.first, _rseq(first.second, second))
    return Seq(first, second)


def _gen_com(
    rng: random.Random, pools: NamePools, budget: int, assignable: Tuple[str, ...]
) -> Com:
    if budget <= 1:
        return _gen_leaf(rng, pools, assignable)
    roll = rng.random()
    if roll < 0.35 and budget >= 3:
        left = rng.randrange(1, budget - 1)
        return _rseq(
            _gen_com(rng, pools, left, assignable),
            _gen_com(rng, pools, budget - left - 1, assignable),
        )
    if roll < 0.6 and budget >= 3:
        half = (budget - 1) // 2
        return If(
            _gen_bexp(rng, pools, 1, True),
            _gen_com(rng, pools, half, assignable),
            _gen_com(rng, pools, budget - 1 - half, assignable),
        )
    if roll < 0.72 and budget >= 4 and len(assignable) > 1:
        # bounded loop: a counter strictly increases toward a small constant
        # and is not assigned anywhere else in the body
        ctr = rng.choice(assignable)
        inner = tuple(n for n in assignable if n != ctr)
        body = _gen_com(rng, pools, budget - 3, inner)
        cond = Cmp("<", Var(ctr), Num(rng.randrange(1, 4)))
        return While(cond, _rseq(body, Asgn(ctr, BinOp("+", Var(ctr), Num(1)))))
    return _gen_leaf(rng, pools, assignable)


def gen_program(seed: int, size_budget: int, pools: NamePools = NamePools()) -> Com:
    """Deterministic pseudo-random program within a node budget.  Loops are
    generated with a strictly increasing counter bounded by a constant, so
    every generated program terminates under modest fuel."""
    rng = random.Random(seed)
    return _gen_com(rng, pools, size_budget, pools.scalars)


def count_nodes(c: Com) -> int:
    if isinstance(c, (Skip, Asgn, ARead, AWrite)):
        return 1
    if isinstance(c, Seq):
        return 1 + count_nodes(c.first) + count_nodes(c.second)
    if isinstance(c, If):
        return 1 + count_nodes(c.then) + count_nodes(c.other)
    if isinstance(c, While):
        return 1 + count_nodes(c.body)
    raise TypeError(f"not a command: {c!r}")


def random_state(
    rng: random.Random,
    pools: NamePools,
    max_value: int = 3,
    max_array_size: int = 3,
) -> Tuple[ScalarState, ArrayState]:
    """Random small state covering every pooled name; arrays are non-empty."""
    rho = ScalarState({n: rng.randrange(max_value + 1) for n in pools.scalars})
    mu = ArrayState(
        {
            n: tuple(
                rng.randrange(max_value + 1)
                for _ in range(rng.randrange(1, max_array_size + 1))
            )
            for n in pools.arrays
        }
    )
    return rho, mu


def random_labeling(rng: random.Random, pools: NamePools) -> Tuple[LabelMap, LabelMap]:
    P = LabelMap({n: PUBLIC for n in pools.scalars if rng.random() < 0.5})
    PA = LabelMap({n: PUBLIC for n in pools.arrays if rng.random() < 0.5})
    return P, PA


def random_spec_walk(
    rng: random.Random, cfg: SpecConfig, max_dirs: int, fuel: int
) -> List[Dir]:
    """Drive a speculative run by picking a random feasible directive at
    every observing redex; returns the consumed directive list."""
    dirs: List[Dir] = []
    while len(dirs) < max_dirs:
        cfg2, used, status = _advance(_SPEC, cfg, fuel)
        fuel -= used
        cfg = cfg2
        if status != "need-dir":
            break
        feas = feasible_dirs(cfg)
        if not feas:
            break
        d = rng.choice(feas)
        r = step_ex(cfg, d)
        cfg = r.cfg
        dirs.append(d)
        fuel -= 1
    return dirs
