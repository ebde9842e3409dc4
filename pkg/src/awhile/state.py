"""Machine states, observations, attacker directives, and their text formats.

All values here are immutable; updates return fresh states, so states can be
shared freely between the checker's parallel explorations.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

from .ifc_static import LabelMap
from .lang import Com


class ScalarState:
    """Total map from scalar names to naturals, default 0."""

    __slots__ = ("_m",)

    def __init__(self, entries: Optional[Mapping[str, int]] = None):
        # zero entries equal the default; dropping them makes dict equality
        # coincide with semantic equality
        self._m: Dict[str, int] = {
            k: v for k, v in (entries or {}).items() if v != 0
        }

    def get(self, name: str) -> int:
        return self._m.get(name, 0)

    def set(self, name: str, value: int) -> "ScalarState":
        m = dict(self._m)
        if value == 0:
            m.pop(name, None)
        else:
            m[name] = value
        out = ScalarState.__new__(ScalarState)
        out._m = m
        return out

    def names(self) -> frozenset:
        return frozenset(self._m)

    def items(self):
        return self._m.items()

    def __eq__(self, other) -> bool:
        return isinstance(other, ScalarState) and self._m == other._m

    def __hash__(self):
        return hash(frozenset(self._m.items()))

    def __repr__(self):
        inner = ", ".join(f"{k}={v}" for k, v in sorted(self._m.items()))
        return f"ScalarState({inner})"


class ArrayState:
    """Map from array names to fixed-length vectors of naturals.

    An array's size is fixed for the lifetime of a state; names not present
    behave as size-0 arrays (every access is out of bounds).
    """

    __slots__ = ("_m",)

    def __init__(self, entries: Optional[Mapping[str, Sequence[int]]] = None):
        self._m: Dict[str, Tuple[int, ...]] = {
            k: tuple(v) for k, v in (entries or {}).items() if len(v) > 0
        }

    def size(self, name: str) -> int:
        return len(self._m.get(name, ()))

    def get(self, name: str, index: int) -> int:
        return self._m[name][index]

    def set(self, name: str, index: int, value: int) -> "ArrayState":
        vec = self._m[name]
        if not (0 <= index < len(vec)):
            raise IndexError(f"{name}[{index}] out of bounds (size {len(vec)})")
        m = dict(self._m)
        m[name] = vec[:index] + (value,) + vec[index + 1:]
        out = ArrayState.__new__(ArrayState)
        out._m = m
        return out

    def vector(self, name: str) -> Tuple[int, ...]:
        return self._m.get(name, ())

    def names(self) -> frozenset:
        return frozenset(self._m)

    def items(self):
        return self._m.items()

    def __eq__(self, other) -> bool:
        return isinstance(other, ArrayState) and self._m == other._m

    def __hash__(self):
        return hash(frozenset(self._m.items()))

    def __repr__(self):
        inner = ", ".join(f"{k}={list(v)}" for k, v in sorted(self._m.items()))
        return f"ArrayState({inner})"


# ---------------------------------------------------------------------------
# Observations and directives
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class OBranch:
    taken: bool

    def __str__(self):
        return f"branch {'true' if self.taken else 'false'}"


@dataclass(frozen=True)
class ORead:
    array: str
    index: int

    def __str__(self):
        return f"read {self.array} {self.index}"


@dataclass(frozen=True)
class OWrite:
    array: str
    index: int

    def __str__(self):
        return f"write {self.array} {self.index}"


Obs = Union[OBranch, ORead, OWrite]


@dataclass(frozen=True)
class DStep:
    def __str__(self):
        return "step"


@dataclass(frozen=True)
class DForce:
    def __str__(self):
        return "force"


@dataclass(frozen=True)
class DLoad:
    array: str
    index: int

    def __str__(self):
        return f"load {self.array} {self.index}"


@dataclass(frozen=True)
class DStore:
    array: str
    index: int

    def __str__(self):
        return f"store {self.array} {self.index}"


Dir = Union[DStep, DForce, DLoad, DStore]

STEP = DStep()
FORCE = DForce()


def dir_sort_key(d: Dir):
    """Canonical ordering: step < force < loads < stores, loads and stores
    by (array, index).  Used for deterministic exploration and witness
    selection."""
    if isinstance(d, DStep):
        return (0, "", 0)
    if isinstance(d, DForce):
        return (1, "", 0)
    if isinstance(d, DLoad):
        return (2, d.array, d.index)
    return (3, d.array, d.index)


@dataclass(frozen=True)
class SpecConfig:
    """Configuration of the speculative semantics: command, stores, and the
    misspeculation flag (False at execution start)."""

    com: Com
    rho: ScalarState
    mu: ArrayState
    flag: bool


# ---------------------------------------------------------------------------
# Text formats
# ---------------------------------------------------------------------------


class StateFormatError(Exception):
    pass


_SCALAR_RE = re.compile(r"^([A-Za-z_][A-Za-z_0-9]*)\s*=\s*(\d+)$")
_ARRAY_RE = re.compile(r"^([A-Za-z_][A-Za-z_0-9]*)\s*=\s*\[([\d\s,]*)\]$")


def parse_state_full(text: str):
    """Parse a state file: one binding per line, ``NAME = NAT`` for scalars
    and ``NAME = [NAT,...,NAT]`` for arrays; '#' starts a comment.

    Returns (scalars, arrays, warnings).  Empty array literals are accepted
    but flagged with a warning, since the security results assume every
    array is non-empty.
    """
    scalars: Dict[str, int] = {}
    arrays: Dict[str, Tuple[int, ...]] = {}
    warnings: List[str] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = _ARRAY_RE.match(line)
        if m:
            name, body = m.group(1), m.group(2).strip()
            if name in arrays or name in scalars:
                raise StateFormatError(f"line {lineno}: duplicate name {name!r}")
            if body:
                values = tuple(int(v.strip()) for v in body.split(","))
            else:
                values = ()
                warnings.append(
                    f"line {lineno}: array {name!r} is empty; "
                    "security checks assume non-empty arrays"
                )
            arrays[name] = values
            continue
        m = _SCALAR_RE.match(line)
        if m:
            name = m.group(1)
            if name in scalars or name in arrays:
                raise StateFormatError(f"line {lineno}: duplicate name {name!r}")
            scalars[name] = int(m.group(2))
            continue
        raise StateFormatError(
            f"line {lineno}: expected 'NAME = NAT' or 'NAME = [NAT,...]'"
        )
    return ScalarState(scalars), ArrayState(arrays), warnings


def parse_state(text: str) -> Tuple[ScalarState, ArrayState]:
    rho, mu, _ = parse_state_full(text)
    return rho, mu


def format_state(rho: ScalarState, mu: ArrayState) -> str:
    lines = [f"{k} = {v}" for k, v in sorted(rho.items())]
    lines += [f"{k} = [{','.join(map(str, v))}]" for k, v in sorted(mu.items())]
    return "\n".join(lines)


def parse_dirs(text: str) -> List[Dir]:
    """Parse a directive string: whitespace-separated tokens ``step``,
    ``force``, ``load NAME NAT``, ``store NAME NAT``."""
    tokens = text.split()
    out: List[Dir] = []
    i = 0
    while i < len(tokens):
        t = tokens[i]
        if t == "step":
            out.append(STEP)
            i += 1
        elif t == "force":
            out.append(FORCE)
            i += 1
        elif t in ("load", "store"):
            if i + 2 >= len(tokens):
                raise StateFormatError(f"{t!r} needs an array name and an index")
            name, idx = tokens[i + 1], tokens[i + 2]
            if not idx.isdigit():
                raise StateFormatError(f"{t!r} index must be a natural, got {idx!r}")
            out.append(DLoad(name, int(idx)) if t == "load" else DStore(name, int(idx)))
            i += 3
        else:
            raise StateFormatError(f"unknown directive token {t!r}")
    return out


def format_dirs(dirs: Iterable[Dir]) -> str:
    return " ".join(str(d) for d in dirs)


def format_trace(trace: Iterable[Obs]) -> str:
    """One line per observation: ``branch true|false``, ``read NAME NAT``,
    ``write NAME NAT``."""
    return "\n".join(str(o) for o in trace)


# ---------------------------------------------------------------------------
# Public equivalence
# ---------------------------------------------------------------------------


def pub_equiv_scalars(P: LabelMap, rho1: ScalarState, rho2: ScalarState) -> bool:
    return all(rho1.get(n) == rho2.get(n) for n in P.public_names())


def pub_equiv_arrays(PA: LabelMap, mu1: ArrayState, mu2: ArrayState) -> bool:
    # public arrays must agree in size and contents; arrays absent from both
    # states agree trivially (size 0)
    return all(mu1.vector(n) == mu2.vector(n) for n in PA.public_names())


def pub_equiv(
    P: LabelMap,
    PA: LabelMap,
    s1: Tuple[ScalarState, ArrayState],
    s2: Tuple[ScalarState, ArrayState],
) -> bool:
    """True iff the two states agree on all public scalars and on the sizes
    and contents of all public arrays.  Names outside the labeling default
    to secret, hence are unconstrained."""
    return pub_equiv_scalars(P, s1[0], s2[0]) and pub_equiv_arrays(PA, s1[1], s2[1])
