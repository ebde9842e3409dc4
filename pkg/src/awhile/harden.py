"""The speculative-load-hardening transformation family.

All variants share one structural recursion: branching commands update a
reserved flag variable through a constant-time conditional so that it holds
1 exactly while the processor is misspeculating, and the flag is then used
to mask branch conditions, access indices, or loaded values.  The variants
differ only in *which* of those get masked:

  islh    every read/write index is masked; branch conditions untouched
  sislh   reads into public variables and writes of secret values are
          index-masked (store masking can be disabled to reproduce the
          known counterexample; that configuration is insecure)
  fislh   secret branch conditions are flag-masked; reads are index-masked
          when the destination is public or the index secret; writes when
          the value or the index is secret
  uslh    every condition and every index is masked
  svslh   reads into public variables are value-masked after the load; no
          index is ever masked
  fvslh   reads are value-masked when destination and index are public,
          index-masked when the index is secret; writes index-masked when
          the index is secret

The flow-sensitive translation (harden_fs) applies the fvslh scheme driven
by per-node annotations instead of a fixed labeling.
"""

from __future__ import annotations

from dataclasses import dataclass

from .flow_ifc import (
    AARead,
    AAsgn,
    AAWrite,
    ABranch,
    ACom,
    AIf,
    ASeq,
    ASkip,
    AWhileC,
    erase_acom,
)
from .ifc_static import Label, LabelMap, label_of_expr
from .lang import (
    And,
    ARead,
    Asgn,
    AWrite,
    AExp,
    BExp,
    Cmp,
    Com,
    CTCond,
    If,
    Num,
    Seq,
    Skip,
    SKIP,
    Var,
    While,
    used_vars,
)

DEFAULT_FLAG_VAR = "b"


@dataclass(frozen=True)
class HardenVariant:
    kind: str  # islh | sislh | fislh | uslh | svslh | fvslh
    mask_stores: bool = True  # only meaningful for sislh


ISLH = HardenVariant("islh")
SISLH = HardenVariant("sislh")
SISLH_NO_STORE_MASK = HardenVariant("sislh", mask_stores=False)
FISLH = HardenVariant("fislh")
USLH = HardenVariant("uslh")
SVSLH = HardenVariant("svslh")
FVSLH = HardenVariant("fvslh")

_VALUE_KINDS = ("svslh", "fvslh")


class FlagCollisionError(Exception):
    pass


def _masked(index: AExp, flag_var: str) -> AExp:
    """(b = 1 ? 0 : index)"""
    return CTCond(Cmp("=", Var(flag_var), Num(1)), Num(0), index)


def _guarded(cond: BExp, flag_var: str) -> BExp:
    """b = 0 && cond"""
    return And(Cmp("=", Var(flag_var), Num(0)), cond)


def _flag_update(cond: BExp, entering_true_branch: bool, flag_var: str) -> Com:
    # entering the true branch: flag stays if the condition really held,
    # becomes 1 otherwise; symmetric on the false side
    b = Var(flag_var)
    if entering_true_branch:
        return Asgn(flag_var, CTCond(cond, b, Num(1)))
    return Asgn(flag_var, CTCond(cond, Num(1), b))


def _seq(first: Com, second: Com) -> Com:
    # a hardened skip branch reduces to the bare flag update
    return first if second == SKIP else Seq(first, second)


def _branch_cond(variant: HardenVariant, P: LabelMap, cond: BExp, flag_var: str) -> BExp:
    if variant.kind == "uslh":
        return _guarded(cond, flag_var)
    if variant.kind in ("fislh", "fvslh"):
        if not label_of_expr(P, cond).is_public:
            return _guarded(cond, flag_var)
        return cond
    return cond  # islh, sislh, svslh


def _read_index(
    variant: HardenVariant, P: LabelMap, target: str, index: AExp, flag_var: str
) -> AExp:
    k = variant.kind
    if k in ("islh", "uslh"):
        return _masked(index, flag_var)
    if k == "sislh":
        return _masked(index, flag_var) if P.get(target).is_public else index
    if k == "fislh":
        if P.get(target).is_public or not label_of_expr(P, index).is_public:
            return _masked(index, flag_var)
        return index
    if k == "svslh":
        return index
    if k == "fvslh":
        if not label_of_expr(P, index).is_public:
            return _masked(index, flag_var)
        return index
    raise ValueError(f"unknown variant {k!r}")


def _write_index(
    variant: HardenVariant, P: LabelMap, index: AExp, value: AExp, flag_var: str
) -> AExp:
    k = variant.kind
    if k in ("islh", "uslh"):
        return _masked(index, flag_var)
    if k == "sislh":
        if not variant.mask_stores:
            return index
        return index if label_of_expr(P, value).is_public else _masked(index, flag_var)
    if k == "fislh":
        if not label_of_expr(P, value).is_public or not label_of_expr(P, index).is_public:
            return _masked(index, flag_var)
        return index
    if k == "svslh":
        return index
    if k == "fvslh":
        if not label_of_expr(P, index).is_public:
            return _masked(index, flag_var)
        return index
    raise ValueError(f"unknown variant {k!r}")


def _value_check(variant: HardenVariant, P: LabelMap, target: str, index: AExp) -> bool:
    if variant.kind == "svslh":
        return P.get(target).is_public
    if variant.kind == "fvslh":
        return P.get(target).is_public and label_of_expr(P, index).is_public
    return False


def harden(
    variant: HardenVariant,
    c: Com,
    P: LabelMap,
    PA: LabelMap,
    flag_var: str = DEFAULT_FLAG_VAR,
) -> Com:
    """Apply an SLH variant to ``c``.  The flag variable must be reserved:
    a program that already uses it is rejected."""
    if flag_var in used_vars(c):
        raise FlagCollisionError(
            f"flag variable {flag_var!r} is used by the program"
        )
    return _harden(variant, c, P, flag_var)


def _harden(variant: HardenVariant, c: Com, P: LabelMap, flag_var: str) -> Com:
    if isinstance(c, Skip):
        return SKIP
    if isinstance(c, Asgn):
        return c
    if isinstance(c, Seq):
        return Seq(
            _harden(variant, c.first, P, flag_var),
            _harden(variant, c.second, P, flag_var),
        )
    if isinstance(c, If):
        guard = _branch_cond(variant, P, c.cond, flag_var)
        return If(
            guard,
            _seq(_flag_update(guard, True, flag_var), _harden(variant, c.then, P, flag_var)),
            _seq(_flag_update(guard, False, flag_var), _harden(variant, c.other, P, flag_var)),
        )
    if isinstance(c, While):
        guard = _branch_cond(variant, P, c.cond, flag_var)
        loop = While(
            guard,
            _seq(_flag_update(guard, True, flag_var), _harden(variant, c.body, P, flag_var)),
        )
        return Seq(loop, _flag_update(guard, False, flag_var))
    if isinstance(c, ARead):
        if variant.kind in _VALUE_KINDS and _value_check(variant, P, c.name, c.index):
            mask = Asgn(c.name, CTCond(Cmp("=", Var(flag_var), Num(1)), Num(0), Var(c.name)))
            return Seq(ARead(c.name, c.array, c.index), mask)
        return ARead(c.name, c.array, _read_index(variant, P, c.name, c.index, flag_var))
    if isinstance(c, AWrite):
        return AWrite(c.array, _write_index(variant, P, c.index, c.value, flag_var), c.value)
    raise TypeError(f"not a command: {c!r}")


# ---------------------------------------------------------------------------
# Flow-sensitive translation (annotation-driven fvslh)
# ---------------------------------------------------------------------------


class BranchNodeError(Exception):
    """Raised when the input contains a runtime branch wrapper; the
    translation is defined on analysis output only."""


def harden_fs(acom: ACom, flag_var: str = DEFAULT_FLAG_VAR) -> Com:
    """Translate an annotated command, taking masking decisions from its
    annotations: conditions are flag-guarded when annotated secret; a read
    with public target and public index is value-masked; a read with secret
    target keeps a public index unmasked and masks any other; writes mask
    secret indices."""
    if flag_var in used_vars(erase_acom(acom)):
        raise FlagCollisionError(
            f"flag variable {flag_var!r} is used by the program"
        )
    return _harden_fs(acom, flag_var)


def _fs_cond(cond: BExp, lbl: Label, flag_var: str) -> BExp:
    return cond if lbl.is_public else _guarded(cond, flag_var)


def _harden_fs(acom: ACom, flag_var: str) -> Com:
    if isinstance(acom, ASkip):
        return SKIP
    if isinstance(acom, AAsgn):
        return Asgn(acom.name, acom.expr)
    if isinstance(acom, ASeq):
        return Seq(_harden_fs(acom.first, flag_var), _harden_fs(acom.second, flag_var))
    if isinstance(acom, AIf):
        guard = _fs_cond(acom.cond, acom.lbl, flag_var)
        return If(
            guard,
            _seq(_flag_update(guard, True, flag_var), _harden_fs(acom.then, flag_var)),
            _seq(_flag_update(guard, False, flag_var), _harden_fs(acom.other, flag_var)),
        )
    if isinstance(acom, AWhileC):
        guard = _fs_cond(acom.cond, acom.lbl, flag_var)
        loop = While(
            guard,
            _seq(_flag_update(guard, True, flag_var), _harden_fs(acom.body, flag_var)),
        )
        return Seq(loop, _flag_update(guard, False, flag_var))
    if isinstance(acom, AARead):
        if acom.lbl_target.is_public and acom.lbl_index.is_public:
            mask = Asgn(
                acom.name,
                CTCond(Cmp("=", Var(flag_var), Num(1)), Num(0), Var(acom.name)),
            )
            return Seq(ARead(acom.name, acom.array, acom.index), mask)
        if acom.lbl_index.is_public:  # secret target, public index
            return ARead(acom.name, acom.array, acom.index)
        return ARead(acom.name, acom.array, _masked(acom.index, flag_var))
    if isinstance(acom, AAWrite):
        idx = acom.index if acom.lbl_index.is_public else _masked(acom.index, flag_var)
        return AWrite(acom.array, idx, acom.value)
    if isinstance(acom, ABranch):
        raise BranchNodeError("branch wrappers only occur in runtime configurations")
    raise TypeError(f"not an annotated command: {acom!r}")
