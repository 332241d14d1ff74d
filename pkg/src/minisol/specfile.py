"""Line-oriented property spec files (``.spec``).

    # comment
    entry <function>
    set <lvalue> = <int|true|false>
    sym <name> : bool
    sym <name> : int <lo>..<hi>
    require <boolean expression over symbols and literals>
    post throw-state
    post <name> == <int|true|false>
    post unchanged <name>

``set`` lines seed memory before the snapshot that a throw restores;
``sym`` lines declare symbolic inputs over finite domains; ``require``
constrains them; ``post`` lines are conjoined into the postcondition.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .engine import SymbolicValue
from .parser import EBin, EBool, EId, ENum, EUn, ParseError, SExpr, parse_expr_text
from .symbolic import SymConst, SymExpr, SymOp, SymVar


class SpecError(Exception):
    pass


@dataclass
class PostSpec:
    kind: str          # "throw-state" | "equals" | "unchanged"
    name: str = ""
    value: object = None


@dataclass
class SpecFile:
    entry: str | None = None
    sets: list = field(default_factory=list)      # (lvalue text, raw literal)
    symbols: list = field(default_factory=list)   # SymbolicValue
    requires: list = field(default_factory=list)  # SymExpr trees
    posts: list = field(default_factory=list)     # PostSpec


_INT_RANGE = re.compile(r"^(-?\d+)\.\.(-?\d+)$")


def parse_literal(text: str):
    text = text.strip()
    if text == "true":
        return True
    if text == "false":
        return False
    try:
        return int(text)
    except ValueError:
        raise SpecError(f"expected an integer or boolean literal, got {text!r}")


def parse_symbol_decl(name: str, rest: str) -> SymbolicValue:
    rest = rest.strip()
    if rest == "bool":
        return SymbolicValue(name, "bool")
    if rest.startswith("int"):
        rng = rest[3:].strip()
        m = _INT_RANGE.match(rng)
        if not m:
            raise SpecError(f"symbol {name!r} needs a finite range, e.g. int 0..7")
        lo, hi = int(m.group(1)), int(m.group(2))
        if hi < lo:
            raise SpecError(f"empty range for symbol {name!r}")
        return SymbolicValue(name, "int", lo=lo, hi=hi)
    raise SpecError(f"unknown symbol kind in {rest!r}")


def surface_to_symexpr(e: SExpr) -> SymExpr:
    """Lower a parsed surface expression into a constraint tree."""
    if isinstance(e, ENum):
        return SymConst(e.value)
    if isinstance(e, EBool):
        return SymConst(e.value)
    if isinstance(e, EId):
        return SymVar(e.name)
    if isinstance(e, EBin):
        left, right = surface_to_symexpr(e.left), surface_to_symexpr(e.right)
        if e.op in ("+", "-", "*", "/", "%"):
            return SymOp(e.op, (left, right), width=64, signed=False)
        return SymOp(e.op, (left, right))
    if isinstance(e, EUn):
        if e.op == "!":
            return SymOp("!", (surface_to_symexpr(e.operand),))
        return SymOp("neg", (surface_to_symexpr(e.operand),), width=64, signed=True)
    raise SpecError(f"unsupported construct in a constraint: {type(e).__name__}")


def parse_spec(text: str) -> SpecFile:
    spec = SpecFile()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        try:
            head, _, rest = line.partition(" ")
            rest = rest.strip()
            if head == "entry":
                spec.entry = rest
            elif head == "set":
                lhs, eq, value = rest.rpartition("=")
                if not eq:
                    raise SpecError("set needs the form: set <lvalue> = <literal>")
                spec.sets.append((lhs.strip(), parse_literal(value)))
            elif head == "sym":
                name, colon, kind = rest.partition(":")
                if not colon:
                    raise SpecError("sym needs the form: sym <name> : <kind>")
                spec.symbols.append(parse_symbol_decl(name.strip(), kind))
            elif head == "require":
                spec.requires.append(surface_to_symexpr(parse_expr_text(rest)))
            elif head == "post":
                spec.posts.append(_parse_post(rest))
            else:
                raise SpecError(f"unknown directive {head!r}")
        except (SpecError, ParseError) as exc:
            raise SpecError(f"line {lineno}: {exc}") from exc
    return spec


def _parse_post(rest: str) -> PostSpec:
    if rest == "throw-state":
        return PostSpec("throw-state")
    if rest.startswith("unchanged"):
        name = rest[len("unchanged"):].strip()
        if not name:
            raise SpecError("post unchanged needs a block name")
        return PostSpec("unchanged", name)
    lhs, eq, value = rest.partition("==")
    if not eq:
        raise SpecError(f"unrecognized postcondition {rest!r}")
    return PostSpec("equals", lhs.strip(), parse_literal(value))
