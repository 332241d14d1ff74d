"""World construction for whole-program runs.

A run needs: a fresh memory with the standard library, the message
instance written from the chain context, the declaration statements
executed, seed writes and symbol blocks applied, and finally the entry
call. Declarations execute under their own generous budget so that the
user-facing gas limit measures the entry program alone.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from . import memory as gm
from .binder import BindError, BoundProgram
from .engine import interpret
from .memory import BoolPayload, IntPayload, MemoryState
from .parser import parse_expr_text
from .stdlib import fresh_memory, write_message
from .stmts import Assign, ExecContext
from .symbolic import SymVar
from .syntax import Contract, Econst, Tbool, Tint, Tmap, Vbool, Vint, Vmap
from .values import BlockInfo, initial_env

SETUP_GAS = 200_000
SETUP_K = 10_000


class RunnerError(Exception):
    pass


@dataclass
class World:
    sigma: MemoryState
    env: object
    fenv: object
    ctx: ExecContext
    bound: BoundProgram = field(repr=False, default=None)


def _literal_expr(ltype, raw):
    if isinstance(ltype, Tbool):
        if not isinstance(raw, bool):
            raise RunnerError(f"expected a boolean for a bool block, got {raw!r}")
        return Econst(Vbool(raw))
    if isinstance(ltype, Tint):
        if isinstance(raw, bool) or not isinstance(raw, int):
            raise RunnerError(f"expected an integer, got {raw!r}")
        return Econst(Vint(raw, ltype.width, ltype.signed))
    raise RunnerError(f"cannot build a literal of type {type(ltype).__name__}")


def _target_type(bound: BoundProgram, lowered):
    from .syntax import Evar
    if isinstance(lowered, Evar):
        return lowered.ltype
    if isinstance(lowered, Econst) and isinstance(lowered.value, Vmap):
        v = lowered.value
        t = v.value_type
        for _ in range(len(v.keys) - 1):
            if not isinstance(t, Tmap):
                raise RunnerError("over-indexed mapping in seed write")
            t = t.value
        return t
    raise RunnerError("seed writes support plain variables and mapping entries")


def build_world(bound: BoundProgram, gas: int, binfo: BlockInfo,
                sets=(), arg_writes=(), symbols=(), assignment=None) -> World:
    """Construct the pre-state of a run.

    sets/arg_writes are (surface lvalue text, literal) pairs executed as
    assignments after the declarations; symbols are written last, either
    as symbolic payloads or, when an assignment is given, as concrete
    values drawn from it.
    """
    sigma = fresh_memory(bound.mem_size)
    sigma = replace(sigma, alloc_floor=bound.floor,
                    symbol_table={**sigma.symbol_table, **bound.bindings})
    sigma = write_message(sigma, binfo)

    registry = {s.name: tuple(s.inherits) for s in bound.decls
                if isinstance(s, Contract)}
    ctx = ExecContext(binfo=binfo, registry=registry)

    setup_env = initial_env(SETUP_GAS, sigma.addr_of("0xglobal"))
    sigma = interpret(SETUP_K, sigma, setup_env, setup_env, None, bound.decls, ctx)
    if sigma is None:
        raise RunnerError("declarations failed to execute: "
                          + "; ".join(ctx.diagnostics[-3:]))

    # The block timestamp is an ordinary global, written from the context.
    sigma = _poke(sigma, bound.bindings["now"], IntPayload(binfo.now, 64, False))

    for lvalue_text, raw in list(sets) + list(arg_writes):
        sigma = _apply_set(bound, sigma, ctx, lvalue_text, raw)

    for sym in symbols:
        if sym.name not in bound.bindings:
            raise RunnerError(f"symbol {sym.name!r} does not name a declared block")
        addr = bound.bindings[sym.name]
        if assignment is not None:
            if sym.name not in assignment:
                raise RunnerError(f"no concrete value for symbol {sym.name!r}")
            value = assignment[sym.name]
            payload = (BoolPayload(bool(value)) if sym.kind == "bool"
                       else IntPayload(int(value), sym.width, sym.signed))
        else:
            payload = (BoolPayload(SymVar(sym.name)) if sym.kind == "bool"
                       else IntPayload(SymVar(sym.name), sym.width, sym.signed))
        sigma = _poke(sigma, addr, payload)

    ctx.sigma_init = None  # the entry run snapshots on entry
    env = initial_env(gas, sigma.addr_of("0xglobal"))
    return World(sigma, env, env, ctx, bound)


def _poke(sigma, addr, payload):
    block = sigma.blocks[addr.index]
    if block.occupancy != gm.OCCUPY:
        raise RunnerError(f"block {addr} is not declared")
    return gm.write(sigma, addr, replace(block, payload=payload), "dir")


def _apply_set(bound: BoundProgram, sigma, ctx, lvalue_text: str, raw):
    try:
        lowered = bound.binder.lower_expr(parse_expr_text(lvalue_text))
    except BindError as exc:
        raise RunnerError(f"cannot resolve {lvalue_text!r}: {exc}") from exc
    ltype = _target_type(bound, lowered)
    stmt = Assign(lowered, _literal_expr(ltype, raw))
    env = initial_env(SETUP_GAS, sigma.addr_of("0xglobal"))
    out = interpret(SETUP_K, sigma, env, env, None, (stmt,), ctx)
    if out is None:
        raise RunnerError(f"seed write to {lvalue_text!r} failed: "
                          + "; ".join(ctx.diagnostics[-2:]))
    return out


def entry_program(bound: BoundProgram, entry: str, arg_map=None):
    """The entry invocation; named arguments fill the parameter list."""
    rec = bound.functions.get(entry)
    if rec is None:
        raise RunnerError(f"no function named {entry!r}")
    args = []
    arg_map = dict(arg_map or {})
    for pname, ptype, _addr in rec.params:
        if pname not in arg_map:
            raise RunnerError(f"missing argument {pname!r} for entry {entry!r}")
        args.append(_literal_expr(ptype, arg_map.pop(pname)))
    return (bound.entry_call(entry, args),), arg_map


def make_pre(bound: BoundProgram, gas: int, binfo: BlockInfo,
             sets=(), arg_writes=(), symbols=()):
    """A builder suitable for triple verification: assignment -> world."""
    def pre(assignment):
        world = build_world(bound, gas, binfo, sets=sets,
                            arg_writes=arg_writes, symbols=symbols,
                            assignment=assignment)
        return world.sigma, world.env, world.fenv, world.ctx
    return pre


def compile_posts(bound: BoundProgram, posts) -> "callable":
    """Conjoin post lines into one predicate over (final, initial)."""
    from .engine import throw_state_post

    checks = []
    for p in posts:
        if p.kind == "throw-state":
            checks.append(throw_state_post)
        elif p.kind == "equals":
            if p.name not in bound.bindings:
                raise RunnerError(f"post names unknown block {p.name!r}")
            addr = bound.bindings[p.name]
            expected = p.value

            def eq_check(final, initial, addr=addr, expected=expected):
                if final is None:
                    return False
                payload = final.blocks[addr.index].payload
                if isinstance(payload, BoolPayload):
                    return payload.bit is (expected if isinstance(expected, bool)
                                           else bool(expected))
                if isinstance(payload, IntPayload):
                    return payload.value == expected
                return False
            checks.append(eq_check)
        elif p.kind == "unchanged":
            if p.name not in bound.bindings:
                raise RunnerError(f"post names unknown block {p.name!r}")
            addr = bound.bindings[p.name]

            def unchanged(final, initial, addr=addr):
                return (final is not None and initial is not None
                        and final.blocks[addr.index] == initial.blocks[addr.index])
            checks.append(unchanged)
        else:
            raise RunnerError(f"unknown post kind {p.kind!r}")
    if not checks:
        checks.append(lambda final, initial: final is not None)

    def post(final, initial):
        return all(c(final, initial) for c in checks)
    return post
