"""Directive-driven speculative small-step semantics.

This is a strict extension of the sequential semantics: silent rules fire on
their own, while every observation-producing step consumes exactly one
attacker directive.  ``step`` follows the architectural path; ``force``
mispredicts a branch and sets the misspeculation flag; ``load a j`` and
``store a j`` redirect an out-of-bounds access (only possible once the flag
is set) to an arbitrary in-bounds cell of an arbitrary array, while the
emitted observation still names the original array and index.

A directive that no rule can consume leaves the configuration stuck;
feasibility filtering belongs to the checker, not the semantics.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

from .lang import ARead, Asgn, AWrite, Com, If, Seq, Skip, SKIP, While, eval_aexp, eval_bexp
from .seq_sem import RunKind
from .state import (
    Dir,
    DForce,
    DLoad,
    DStep,
    DStore,
    FORCE,
    OBranch,
    ORead,
    OWrite,
    Obs,
    SpecConfig,
    STEP,
)


class StepTag(enum.Enum):
    STEPPED = "stepped"
    STUCK = "stuck"
    NEED_DIR = "need-dir"  # at an observing redex with no directive left


@dataclass(frozen=True)
class StepResult:
    tag: StepTag
    cfg: Optional[SpecConfig] = None
    obs: Optional[Obs] = None
    consumed: int = 0


_STUCK = StepResult(StepTag.STUCK)
_NEED_DIR = StepResult(StepTag.NEED_DIR)


def step_ex(cfg: SpecConfig, d: Optional[Dir]) -> StepResult:
    """Tagged step: silent rules ignore ``d`` and consume nothing; observing
    rules require a matching directive.  ``d=None`` at an observing redex
    reports NEED_DIR."""
    c, rho, mu, flag = cfg.com, cfg.rho, cfg.mu, cfg.flag
    if isinstance(c, Skip):
        return _STUCK
    if isinstance(c, Asgn):
        rho2 = rho.set(c.name, eval_aexp(rho, c.expr))
        return StepResult(StepTag.STEPPED, SpecConfig(SKIP, rho2, mu, flag))
    if isinstance(c, Seq):
        if isinstance(c.first, Skip):
            return StepResult(StepTag.STEPPED, SpecConfig(c.second, rho, mu, flag))
        sub = step_ex(SpecConfig(c.first, rho, mu, flag), d)
        if sub.tag is not StepTag.STEPPED:
            return sub
        cfg2 = sub.cfg
        return StepResult(
            StepTag.STEPPED,
            SpecConfig(Seq(cfg2.com, c.second), cfg2.rho, cfg2.mu, cfg2.flag),
            sub.obs,
            sub.consumed,
        )
    if isinstance(c, While):
        unfolded = If(c.cond, Seq(c.body, c), SKIP)
        return StepResult(StepTag.STEPPED, SpecConfig(unfolded, rho, mu, flag))
    if isinstance(c, If):
        if d is None:
            return _NEED_DIR
        taken = eval_bexp(rho, c.cond)
        if isinstance(d, DStep):
            succ = c.then if taken else c.other
            return StepResult(
                StepTag.STEPPED, SpecConfig(succ, rho, mu, flag), OBranch(taken), 1
            )
        if isinstance(d, DForce):
            succ = c.other if taken else c.then
            return StepResult(
                StepTag.STEPPED, SpecConfig(succ, rho, mu, True), OBranch(taken), 1
            )
        return _STUCK
    if isinstance(c, ARead):
        if d is None:
            return _NEED_DIR
        i = eval_aexp(rho, c.index)
        if isinstance(d, DStep):
            if i >= mu.size(c.array):
                return _STUCK
            rho2 = rho.set(c.name, mu.get(c.array, i))
            return StepResult(
                StepTag.STEPPED, SpecConfig(SKIP, rho2, mu, flag), ORead(c.array, i), 1
            )
        if isinstance(d, DLoad):
            # only while misspeculating, only for an out-of-bounds access
            if not flag or i < mu.size(c.array) or d.index >= mu.size(d.array):
                return _STUCK
            rho2 = rho.set(c.name, mu.get(d.array, d.index))
            return StepResult(
                StepTag.STEPPED, SpecConfig(SKIP, rho2, mu, True), ORead(c.array, i), 1
            )
        return _STUCK
    if isinstance(c, AWrite):
        if d is None:
            return _NEED_DIR
        i = eval_aexp(rho, c.index)
        v = eval_aexp(rho, c.value)
        if isinstance(d, DStep):
            if i >= mu.size(c.array):
                return _STUCK
            mu2 = mu.set(c.array, i, v)
            return StepResult(
                StepTag.STEPPED, SpecConfig(SKIP, rho, mu2, flag), OWrite(c.array, i), 1
            )
        if isinstance(d, DStore):
            if not flag or i < mu.size(c.array) or d.index >= mu.size(d.array):
                return _STUCK
            mu2 = mu.set(d.array, d.index, v)
            return StepResult(
                StepTag.STEPPED, SpecConfig(SKIP, rho, mu2, True), OWrite(c.array, i), 1
            )
        return _STUCK
    raise TypeError(f"not a command: {c!r}")


def spec_step(
    cfg: SpecConfig, d: Optional[Dir]
) -> Optional[Tuple[SpecConfig, Optional[Obs], int]]:
    """Public single-step interface: None when no rule applies."""
    r = step_ex(cfg, d)
    if r.tag is StepTag.STEPPED:
        return r.cfg, r.obs, r.consumed
    return None


def head_redex(c: Com) -> Com:
    """The command about to be reduced: follows the spine of sequences."""
    while isinstance(c, Seq) and not isinstance(c.first, Skip):
        c = c.first
    return c


def candidate_dirs(cfg: SpecConfig) -> List[Dir]:
    """Directives that could conceivably apply at the current redex, in
    canonical order.  In-bounds accesses only admit step; out-of-bounds
    accesses under misspeculation admit one load/store per in-bounds cell
    of every array."""
    redex = head_redex(cfg.com)
    while isinstance(redex, Seq):
        redex = redex.first  # Seq(Skip, _) is silent
    if isinstance(redex, If):
        return [STEP, FORCE]
    if isinstance(redex, (ARead, AWrite)):
        i = eval_aexp(cfg.rho, redex.index)
        if i < cfg.mu.size(redex.array):
            return [STEP]
        if not cfg.flag:
            return []
        ctor = DLoad if isinstance(redex, ARead) else DStore
        dirs: List[Dir] = []
        for name, vec in sorted(cfg.mu.items()):
            dirs.extend(ctor(name, j) for j in range(len(vec)))
        return dirs
    return []


def feasible_dirs(cfg: SpecConfig) -> List[Dir]:
    """Directives some rule can actually consume at this configuration."""
    return [d for d in candidate_dirs(cfg) if step_ex(cfg, d).tag is StepTag.STEPPED]


@dataclass(frozen=True)
class SpecOutcome:
    kind: RunKind
    final: SpecConfig
    trace: Tuple[Obs, ...]
    consumed: int


def spec_run(cfg: SpecConfig, dirs: Sequence[Dir], fuel: int) -> SpecOutcome:
    """Run, consuming directives left to right.  Stops at skip (terminated),
    when no rule applies (stuck), at an observing redex with no directives
    left (directives exhausted), or when fuel runs out.  The number of
    consumed directives always equals the trace length."""
    trace: List[Obs] = []
    k = 0
    while fuel > 0:
        if isinstance(cfg.com, Skip):
            return SpecOutcome(RunKind.TERMINATED, cfg, tuple(trace), k)
        nxt = dirs[k] if k < len(dirs) else None
        r = step_ex(cfg, nxt)
        if r.tag is StepTag.NEED_DIR:
            kind = RunKind.DIRS_EXHAUSTED if feasible_dirs(cfg) else RunKind.STUCK
            return SpecOutcome(kind, cfg, tuple(trace), k)
        if r.tag is StepTag.STUCK:
            return SpecOutcome(RunKind.STUCK, cfg, tuple(trace), k)
        cfg = r.cfg
        if r.obs is not None:
            trace.append(r.obs)
        k += r.consumed
        fuel -= 1
    if isinstance(cfg.com, Skip):
        return SpecOutcome(RunKind.TERMINATED, cfg, tuple(trace), k)
    return SpecOutcome(RunKind.FUEL_EXHAUSTED, cfg, tuple(trace), k)
