"""Symbolic expression trees carried inside memory payloads.

A payload's value slot may hold a concrete Python int/bool, ``None``
(declared but unset), or one of the trees below. Trees are built by the
operator evaluators when an operand is symbolic and are discharged by the
bounded enumerator in the engine, which evaluates them under concrete
assignments drawn from each symbol's declared finite domain.

Arithmetic nodes record the fixed width and signedness of their operands
so that evaluating a tree under an assignment reproduces the concrete
evaluator bit for bit (wraparound included).
"""

from __future__ import annotations

from dataclasses import dataclass


class SymExpr:
    """Base class for symbolic expression nodes."""

    def eval(self, assignment):
        raise NotImplementedError


class SymEvalError(Exception):
    """Raised when a tree cannot be evaluated under an assignment."""


@dataclass(frozen=True)
class SymVar(SymExpr):
    name: str

    def eval(self, assignment):
        if self.name not in assignment:
            raise SymEvalError(f"no value for symbol {self.name!r}")
        return assignment[self.name]

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class SymConst(SymExpr):
    value: object  # int or bool

    def eval(self, assignment):
        return self.value

    def __str__(self):
        return str(self.value).lower() if isinstance(self.value, bool) else str(self.value)


@dataclass(frozen=True)
class SymOp(SymExpr):
    op: str
    args: tuple[SymExpr, ...]
    width: int = 0     # nonzero for arithmetic over fixed-width integers
    signed: bool = False

    def eval(self, assignment):
        vals = [a.eval(assignment) for a in self.args]
        out = _apply(self.op, vals)
        if self.width and isinstance(out, int) and not isinstance(out, bool):
            out = wrap_int(out, self.width, self.signed)
        return out

    def __str__(self):
        if len(self.args) == 1:
            return f"({self.op}{self.args[0]})"
        return "(" + f" {self.op} ".join(str(a) for a in self.args) + ")"


def wrap_int(v: int, width: int, signed: bool) -> int:
    """Reduce v to the representable range: two's complement if signed."""
    v %= 1 << width
    if signed and v >= 1 << (width - 1):
        v -= 1 << width
    return v


def trunc_div(a: int, b: int) -> int:
    """Division truncating toward zero (Solidity style)."""
    q = abs(a) // abs(b)
    return -q if (a < 0) != (b < 0) else q


def trunc_mod(a: int, b: int) -> int:
    """Remainder matching trunc_div: sign follows the dividend."""
    return a - trunc_div(a, b) * b


def _apply(op, vals):
    try:
        if op == "+":
            return vals[0] + vals[1]
        if op == "-":
            return vals[0] - vals[1]
        if op == "*":
            return vals[0] * vals[1]
        if op == "/":
            if vals[1] == 0:
                raise SymEvalError("division by zero")
            return trunc_div(vals[0], vals[1])
        if op == "%":
            if vals[1] == 0:
                raise SymEvalError("modulo by zero")
            return trunc_mod(vals[0], vals[1])
        if op == "<":
            return vals[0] < vals[1]
        if op == ">":
            return vals[0] > vals[1]
        if op == "<=":
            return vals[0] <= vals[1]
        if op == ">=":
            return vals[0] >= vals[1]
        if op == "==":
            return vals[0] == vals[1]
        if op == "!=":
            return vals[0] != vals[1]
        if op == "&&":
            return bool(vals[0]) and bool(vals[1])
        if op == "||":
            return bool(vals[0]) or bool(vals[1])
        if op == "!":
            return not vals[0]
        if op == "neg":
            return -vals[0]
    except TypeError as exc:
        raise SymEvalError(str(exc)) from exc
    raise SymEvalError(f"unknown operator {op!r}")


def is_symbolic(x) -> bool:
    return isinstance(x, SymExpr)


def to_symexpr(x) -> SymExpr:
    """Lift a concrete int/bool to a tree; pass trees through."""
    if isinstance(x, SymExpr):
        return x
    return SymConst(x)


def collect_symbols(e: SymExpr) -> set[str]:
    if isinstance(e, SymVar):
        return {e.name}
    if isinstance(e, SymOp):
        out: set[str] = set()
        for a in e.args:
            out |= collect_symbols(a)
        return out
    return set()
