"""Expression-layer semantics.

Expressions evaluate in two positions: the l-position yields a memory
address, the r-position a memory value. Only array and mapping constants
and the four reference forms are addressable; everything else is banned
on the left. Operator evaluation is centralized in ``eval_bop`` and
``eval_uop``: fixed-width integer arithmetic wraps (two's complement
when signed), division and modulo by zero are absent, and both operands
are always evaluated (no short circuit). When an operand is symbolic the
result is a symbolic tree of the same kind.
"""

from __future__ import annotations

from dataclasses import replace

from . import memory as gm
from .memory import (
    Address,
    BoolPayload,
    FunctionInfo,
    IntPayload,
    MemoryState,
    MemoryValue,
    StatementBody,
    StructInstance,
    StructTypeInfo,
)
from .symbolic import SymOp, is_symbolic, to_symexpr, trunc_div, trunc_mod, wrap_int
from .syntax import (
    Ebop,
    Econ,
    Econst,
    Efun,
    Emodifier,
    Epar,
    Estruct,
    Euop,
    Evar,
    LExpr,
    Varray,
    Vmap,
    payload_matches_type,
)
from .values import (
    BlockInfo,
    Env,
    _concrete_indices,
    eval_value,
    locate_array_element,
    resolve_map_path,
)


def eval_lvalue(K: int, e: LExpr, sigma: MemoryState, binfo: BlockInfo,
                env: Env) -> Address | None:
    if K <= 0:
        return None
    if isinstance(e, Econst):
        v = e.value
        if isinstance(v, Varray):
            indices = _concrete_indices(K - 1, v.indices, sigma, binfo, env)
            if indices is None:
                return None
            return locate_array_element(v.arr_type, v.base, indices, sigma, env)
        if isinstance(v, Vmap):
            return resolve_map_path(K - 1, v, sigma, binfo, env)
        return None
    if isinstance(e, (Evar, Efun, Econ, Epar)):
        return e.addr
    # Estruct, Ebop, Euop and the modifier expression are never addresses.
    return None


def eval_rvalue(K: int, e: LExpr, sigma: MemoryState, binfo: BlockInfo,
                env: Env) -> MemoryValue | None:
    if K <= 0:
        return None
    if isinstance(e, Econst):
        return eval_value(K - 1, e.value, sigma, binfo, env)
    if isinstance(e, Estruct):
        return eval_str(K - 1, e, sigma, binfo, env)
    if isinstance(e, (Evar, Econ, Epar)):
        if e.addr is None:
            return None
        return gm.read(sigma, e.addr, "chck", env, binfo)
    if isinstance(e, Efun):
        if e.addr is None:
            return None
        block = gm.read(sigma, e.addr, "chck", env, binfo)
        if block is None or not isinstance(block.payload, FunctionInfo):
            return None
        lam = block.payload.ret_addr
        if lam is None:
            return None
        return gm.read(sigma, lam, "chck", env, binfo)
    if isinstance(e, Ebop):
        left = eval_rvalue(K - 1, e.left, sigma, binfo, env)
        right = eval_rvalue(K - 1, e.right, sigma, binfo, env)
        return eval_bop(e.op, left, right)
    if isinstance(e, Euop):
        operand = eval_rvalue(K - 1, e.operand, sigma, binfo, env)
        return eval_uop(e.op, operand)
    if isinstance(e, Emodifier):
        return None
    return None


def eval_str(K: int, e: Estruct, sigma: MemoryState, binfo: BlockInfo,
             env: Env) -> MemoryValue | None:
    """Build a struct instance: per-field type match, then evaluation.

    Fields evaluate left to right and any failure fails the whole
    construction.
    """
    ty_block = gm.read(sigma, e.type_addr, "chck", env, binfo)
    if ty_block is None or not isinstance(ty_block.payload, StructTypeInfo):
        return None
    members = ty_block.payload.members
    if len(members) != len(e.values):
        return None
    out = []
    for v, (_name, mt) in zip(e.values, members):
        mv = eval_value(K - 1, v, sigma, binfo, env)
        if mv is None or not payload_matches_type(mv.payload, mt):
            return None
        out.append(mv.payload)
    return gm.mvalue(StructInstance(e.type_addr, tuple(out)), env)


# ---------------------------------------------------------------------------
# Operators

_CMP = {"<", ">", "<=", ">=", "==", "!="}
_ARITH = {"+", "-", "*", "/", "%"}
_LOGIC = {"&&", "||"}


def _sym_any(*vals) -> bool:
    return any(is_symbolic(v) for v in vals)


def eval_bop(op: str, lhs: MemoryValue | None,
             rhs: MemoryValue | None) -> MemoryValue | None:
    if lhs is None or rhs is None:
        return None
    lp, rp = lhs.payload, rhs.payload

    if isinstance(lp, IntPayload) and isinstance(rp, IntPayload):
        if lp.width != rp.width or lp.signed != rp.signed:
            return None
        a, b = lp.value, rp.value
        if a is None or b is None:
            return None
        if op in _ARITH:
            if _sym_any(a, b):
                tree = SymOp(op, (to_symexpr(a), to_symexpr(b)), lp.width, lp.signed)
                return replace(lhs, payload=IntPayload(tree, lp.width, lp.signed))
            if op == "+":
                r = a + b
            elif op == "-":
                r = a - b
            elif op == "*":
                r = a * b
            elif op == "/":
                if b == 0:
                    return None
                r = trunc_div(a, b)
            else:
                if b == 0:
                    return None
                r = trunc_mod(a, b)
            return replace(lhs, payload=IntPayload(wrap_int(r, lp.width, lp.signed),
                                                   lp.width, lp.signed))
        if op in _CMP:
            if _sym_any(a, b):
                tree = SymOp(op, (to_symexpr(a), to_symexpr(b)))
                return replace(lhs, payload=BoolPayload(tree))
            if op == "<":
                r = a < b
            elif op == ">":
                r = a > b
            elif op == "<=":
                r = a <= b
            elif op == ">=":
                r = a >= b
            elif op == "==":
                r = a == b
            else:
                r = a != b
            return replace(lhs, payload=BoolPayload(r))
        return None

    if isinstance(lp, BoolPayload) and isinstance(rp, BoolPayload):
        a, b = lp.bit, rp.bit
        if a is None or b is None:
            return None
        if op in _LOGIC or op in ("==", "!="):
            if _sym_any(a, b):
                tree = SymOp(op, (to_symexpr(a), to_symexpr(b)))
                return replace(lhs, payload=BoolPayload(tree))
            if op == "&&":
                r = a and b
            elif op == "||":
                r = a or b
            elif op == "==":
                r = a == b
            else:
                r = a != b
            return replace(lhs, payload=BoolPayload(bool(r)))
        return None

    return None


def eval_uop(op: str, v: MemoryValue | None) -> MemoryValue | None:
    if v is None:
        return None
    p = v.payload
    if op == "!":
        if not isinstance(p, BoolPayload) or p.bit is None:
            return None
        if is_symbolic(p.bit):
            return replace(v, payload=BoolPayload(SymOp("!", (to_symexpr(p.bit),))))
        return replace(v, payload=BoolPayload(not p.bit))
    if op == "neg":
        if not isinstance(p, IntPayload) or not p.signed or p.value is None:
            return None
        if is_symbolic(p.value):
            tree = SymOp("neg", (to_symexpr(p.value),), p.width, p.signed)
            return replace(v, payload=IntPayload(tree, p.width, p.signed))
        return replace(v, payload=IntPayload(wrap_int(-p.value, p.width, p.signed),
                                             p.width, p.signed))
    return None


def extract(v: MemoryValue | None, kind: str):
    """Pull a native payload out of a memory value.

    kind "bool" returns the bit (possibly a symbolic tree), kind "stmts"
    the statement list of a stored body. Absent input or a wrong payload
    kind is absent.
    """
    if v is None:
        return None
    p = v.payload
    if kind == "bool":
        if isinstance(p, BoolPayload) and p.bit is not None:
            return p.bit
        return None
    if kind == "stmts":
        if isinstance(p, FunctionInfo):
            return tuple(p.body)
        if isinstance(p, StatementBody):
            return tuple(p.body)
        return None
    raise ValueError(f"unknown extract kind {kind!r}")
