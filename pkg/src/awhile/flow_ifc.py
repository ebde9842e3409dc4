"""Annotated commands, the flow-sensitive IFC analysis, and the
well-labeledness checker.

The analysis is a total function: it accepts every program and returns an
annotated command plus the labeling holding after execution.  Loop bodies
are re-analyzed until the labeling joined with the loop entry stabilizes;
each unstable round moves at least one assigned name from public to secret,
so the iteration count is bounded by the number of names the body assigns.

Branch nodes never appear in analysis output; they are introduced at run
time by the flow-sensitive ideal semantics to save and restore the pc label.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Tuple, Union

from .ifc_static import (
    Label,
    LabelMap,
    Labeling,
    join,
    label_leq,
    label_of_expr,
)
from .lang import (
    ARead,
    Asgn,
    AWrite,
    AExp,
    BExp,
    Com,
    If,
    Seq,
    Skip,
    SKIP,
    While,
)

# ---------------------------------------------------------------------------
# Annotated commands
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ASkip:
    pass


@dataclass(frozen=True)
class AAsgn:
    name: str
    expr: AExp


@dataclass(frozen=True)
class ASeq:
    first: "ACom"
    second: "ACom"
    mid: Labeling  # labeling between the two halves


@dataclass(frozen=True)
class AIf:
    cond: BExp
    then: "ACom"
    other: "ACom"
    lbl: Label  # label of the condition


@dataclass(frozen=True)
class AWhileC:
    cond: BExp
    body: "ACom"
    lbl: Label  # label of the condition at the fixpoint labeling
    fix: Labeling


@dataclass(frozen=True)
class AARead:
    name: str
    array: str
    index: AExp
    lbl_target: Label  # label given to the destination variable
    lbl_index: Label


@dataclass(frozen=True)
class AAWrite:
    array: str
    index: AExp
    value: AExp
    lbl_index: Label


@dataclass(frozen=True)
class ABranch:
    """Runtime wrapper recording the pc label in force before entering a
    branch; produced only by the flow-sensitive ideal semantics."""

    lbl: Label
    body: "ACom"


ACom = Union[ASkip, AAsgn, ASeq, AIf, AWhileC, AARead, AAWrite, ABranch]

ASKIP = ASkip()


def erase_acom(acom: ACom) -> Com:
    """Strip all annotations; a Branch wrapper erases to its body."""
    if isinstance(acom, ASkip):
        return SKIP
    if isinstance(acom, AAsgn):
        return Asgn(acom.name, acom.expr)
    if isinstance(acom, ASeq):
        return Seq(erase_acom(acom.first), erase_acom(acom.second))
    if isinstance(acom, AIf):
        return If(acom.cond, erase_acom(acom.then), erase_acom(acom.other))
    if isinstance(acom, AWhileC):
        return While(acom.cond, erase_acom(acom.body))
    if isinstance(acom, AARead):
        return ARead(acom.name, acom.array, acom.index)
    if isinstance(acom, AAWrite):
        return AWrite(acom.array, acom.index, acom.value)
    if isinstance(acom, ABranch):
        return erase_acom(acom.body)
    raise TypeError(f"not an annotated command: {acom!r}")


def terminal(acom: ACom) -> bool:
    """skip, possibly wrapped in any number of branch annotations."""
    while isinstance(acom, ABranch):
        acom = acom.body
    return isinstance(acom, ASkip)


def branch_free(acom: ACom) -> bool:
    if isinstance(acom, ABranch):
        return False
    if isinstance(acom, ASeq):
        return branch_free(acom.first) and branch_free(acom.second)
    if isinstance(acom, AIf):
        return branch_free(acom.then) and branch_free(acom.other)
    if isinstance(acom, AWhileC):
        return branch_free(acom.body)
    return True


def pc_of_acom(acom: ACom, pc: Label) -> Label:
    """Label of the outermost branch annotation along the head spine, or the
    given pc when there is none.  Sequences delegate to their first half:
    that is where a wrapper introduced by an earlier conditional lives."""
    if isinstance(acom, ABranch):
        return acom.lbl
    if isinstance(acom, ASeq):
        return pc_of_acom(acom.first, pc)
    return pc


# ---------------------------------------------------------------------------
# Flow-sensitive analysis
# ---------------------------------------------------------------------------


def join_labelings(l1: Labeling, l2: Labeling) -> Labeling:
    return l1.join(l2)


def assigned_names(c: Com) -> Tuple[frozenset, frozenset]:
    """Scalars and arrays a command may assign; bounds the fixpoint."""
    if isinstance(c, Skip):
        return frozenset(), frozenset()
    if isinstance(c, Asgn):
        return frozenset((c.name,)), frozenset()
    if isinstance(c, (Seq, If)):
        parts = (c.first, c.second) if isinstance(c, Seq) else (c.then, c.other)
        s1, a1 = assigned_names(parts[0])
        s2, a2 = assigned_names(parts[1])
        return s1 | s2, a1 | a2
    if isinstance(c, While):
        return assigned_names(c.body)
    if isinstance(c, ARead):
        return frozenset((c.name,)), frozenset()
    if isinstance(c, AWrite):
        return frozenset(), frozenset((c.array,))
    raise TypeError(f"not a command: {c!r}")


def flow_track(c: Com, P: LabelMap, PA: LabelMap, pc: Label) -> Tuple[ACom, Labeling]:
    """Analyze ``c`` starting from labeling (P, PA) under context label pc.

    Returns the annotated command and the labeling after execution.  Total:
    no program is rejected.
    """
    if isinstance(c, Skip):
        return ASKIP, Labeling(P, PA)
    if isinstance(c, Asgn):
        return AAsgn(c.name, c.expr), Labeling(
            P.set(c.name, label_of_expr(P, c.expr)), PA
        )
    if isinstance(c, Seq):
        a1, mid = flow_track(c.first, P, PA, pc)
        a2, out = flow_track(c.second, mid.vars, mid.arrs, pc)
        return ASeq(a1, a2, mid), out
    if isinstance(c, If):
        lbl = label_of_expr(P, c.cond)
        pc2 = join(pc, lbl)
        a1, l1 = flow_track(c.then, P, PA, pc2)
        a2, l2 = flow_track(c.other, P, PA, pc2)
        return AIf(c.cond, a1, a2, lbl), l1.join(l2)
    if isinstance(c, While):
        entry = Labeling(P, PA)
        sc, ar = assigned_names(c.body)
        cur = entry
        abody, after = None, None
        # one extra round re-analyzes the body at the fixpoint so the stored
        # annotations are the ones valid there
        for _ in range(len(sc) + len(ar) + 2):
            lbl = label_of_expr(cur.vars, c.cond)
            abody, after = flow_track(c.body, cur.vars, cur.arrs, join(pc, lbl))
            nxt = after.join(entry)
            if nxt == cur:
                break
            cur = nxt
        else:  # pragma: no cover - the bound argument rules this out
            raise AssertionError("loop labeling failed to stabilize within bound")
        lbl = label_of_expr(cur.vars, c.cond)
        return AWhileC(c.cond, abody, lbl, cur), cur
    if isinstance(c, ARead):
        li = label_of_expr(P, c.index)
        lx = join(pc, join(li, PA.get(c.array)))
        return AARead(c.name, c.array, c.index, lx, li), Labeling(
            P.set(c.name, lx), PA
        )
    if isinstance(c, AWrite):
        li = label_of_expr(P, c.index)
        le = label_of_expr(P, c.value)
        lbl = join(PA.get(c.array), join(pc, join(li, le)))
        return AAWrite(c.array, c.index, c.value, li), Labeling(
            P, PA.set(c.array, lbl)
        )
    raise TypeError(f"not a command: {c!r}")


# ---------------------------------------------------------------------------
# Well-labeledness
# ---------------------------------------------------------------------------


def well_labeled(acom: ACom, initial: Labeling, pc: Label, final: Labeling) -> bool:
    """Check that the annotations of ``acom`` over-approximate the flows from
    ``initial`` at context ``pc``, ending below ``final``.

    All intermediate labelings are annotation fields, so the judgment is
    decided without search.  Loop annotations are confirmed to be fixpoints:
    the body must map the annotated labeling to itself at the raised pc, and
    the loop's condition label is checked against that fixpoint labeling
    (any labeling reachable during execution stays below it).
    """
    P, PA = initial.vars, initial.arrs
    if isinstance(acom, ASkip):
        return initial.leq(final)
    if isinstance(acom, AAsgn):
        upd = Labeling(P.set(acom.name, label_of_expr(P, acom.expr)), PA)
        return upd.leq(final)
    if isinstance(acom, ASeq):
        return (
            branch_free(acom.second)
            and well_labeled(acom.first, initial, pc, acom.mid)
            and well_labeled(acom.second, acom.mid, pc_of_acom(acom.first, pc), final)
        )
    if isinstance(acom, AIf):
        pc2 = join(pc, acom.lbl)
        return (
            label_leq(label_of_expr(P, acom.cond), acom.lbl)
            and branch_free(acom.then)
            and branch_free(acom.other)
            and well_labeled(acom.then, initial, pc2, final)
            and well_labeled(acom.other, initial, pc2, final)
        )
    if isinstance(acom, AWhileC):
        pc2 = join(pc, acom.lbl)
        return (
            label_leq(label_of_expr(acom.fix.vars, acom.cond), acom.lbl)
            and branch_free(acom.body)
            and initial.leq(acom.fix)
            and acom.fix.leq(final)
            and well_labeled(acom.body, acom.fix, pc2, acom.fix)
        )
    if isinstance(acom, AARead):
        upd = Labeling(P.set(acom.name, acom.lbl_target), PA)
        return (
            label_leq(label_of_expr(P, acom.index), acom.lbl_index)
            and label_leq(pc, acom.lbl_target)
            and label_leq(acom.lbl_index, acom.lbl_target)
            and label_leq(PA.get(acom.array), acom.lbl_target)
            and upd.leq(final)
        )
    if isinstance(acom, AAWrite):
        lbl = join(
            PA.get(acom.array),
            join(pc, join(acom.lbl_index, label_of_expr(P, acom.value))),
        )
        upd = Labeling(P, PA.set(acom.array, lbl))
        return (
            label_leq(label_of_expr(P, acom.index), acom.lbl_index)
            and upd.leq(final)
        )
    if isinstance(acom, ABranch):
        return well_labeled(acom.body, initial, pc, final)
    raise TypeError(f"not an annotated command: {acom!r}")


# ---------------------------------------------------------------------------
# Printing (for the analyze CLI subcommand)
# ---------------------------------------------------------------------------


def pretty_acom(acom: ACom) -> str:
    from .lang import pretty_aexp, pretty_bexp

    def lines(a: ACom, indent: int):
        pad = "  " * indent
        if isinstance(a, ASeq):
            parts = []
            node = a
            while isinstance(node, ASeq):
                parts.append(node.first)
                node = node.second
            parts.append(node)
            for i, part in enumerate(parts):
                sub = list(lines(part, indent))
                if i < len(parts) - 1:
                    # the separator goes before any trailing annotation comment
                    head, _, comment = sub[-1].partition("  #")
                    sub[-1] = head + ";" + ("  #" + comment if comment else "")
                yield from sub
            return
        if isinstance(a, ASkip):
            yield pad + "skip"
        elif isinstance(a, AAsgn):
            yield pad + f"{a.name} := {pretty_aexp(a.expr)}"
        elif isinstance(a, AARead):
            yield (
                pad
                + f"{a.name} <- {a.array}[{pretty_aexp(a.index)}]"
                + f"  # target={a.lbl_target} index={a.lbl_index}"
            )
        elif isinstance(a, AAWrite):
            yield (
                pad
                + f"{a.array}[{pretty_aexp(a.index)}] <- {pretty_aexp(a.value)}"
                + f"  # index={a.lbl_index}"
            )
        elif isinstance(a, AIf):
            yield pad + f"if {pretty_bexp(a.cond)} then  # cond={a.lbl}"
            yield from lines(a.then, indent + 1)
            yield pad + "else"
            yield from lines(a.other, indent + 1)
            yield pad + "end"
        elif isinstance(a, AWhileC):
            yield pad + f"while {pretty_bexp(a.cond)} do  # cond={a.lbl}"
            yield from lines(a.body, indent + 1)
            yield pad + "end"
        elif isinstance(a, ABranch):
            yield pad + f"# branch pc={a.lbl}"
            yield from lines(a.body, indent)
        else:
            raise TypeError(f"not an annotated command: {a!r}")

    return "\n".join(lines(acom, 0))
