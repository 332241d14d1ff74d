"""Statement-layer semantics: execute statement lists over memory states.

Execution is head-of-list: each dispatched statement costs one unit of
gas, transforms the state, and may rewrite the remaining statement list
(branches prepend the chosen arm, loops re-enqueue themselves, calls
unfold the stored body). The environment check guards every step; when
it fails the incoming state is returned as the result.

``exec_statement`` performs exactly one dispatch and is shared by the
batch runner here and by the stepping and path-forking drivers in the
engine module.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import lru_cache

from . import memory as gm
from .layout import LayoutInfo, array_layout, elem_offset
from .memory import (
    Address,
    BoolPayload,
    ContractInfo,
    Fid,
    FunctionInfo,
    MapNode,
    MemoryState,
    MemoryValue,
    StructTypeInfo,
    Undef,
)
from .symbolic import SymExpr
from .syntax import (
    Assign,
    Contract,
    Econst,
    Efun,
    Fun,
    FunCall,
    FunStop,
    If,
    LoopFor,
    LoopWhile,
    LStatement,
    Modifier,
    Return,
    Returns,
    Snil,
    StructDecl,
    Tarray,
    Tbool,
    Throw,
    Tmap,
    Var,
    Vmap,
    array_dims,
)
from .values import BlockInfo, Env  # noqa: F401  (Env re-exported)

__all__ = [
    "ExecContext", "StepResult", "LayoutInfo", "array_layout", "elem_offset",
    "env_check", "init_array", "init_var", "exec_statement", "exec_stmts",
]


@dataclass
class ExecContext:
    """Ambient execution context threaded through a run."""
    binfo: BlockInfo = field(default_factory=BlockInfo)
    sigma_init: MemoryState | None = None  # snapshot restored by throw
    registry: dict = field(default_factory=dict)  # contract name -> inheritance
    diagnostics: list = field(default_factory=list)

    def fail(self, msg: str):
        self.diagnostics.append(msg)
        return None


def env_check(env: Env, fenv: Env) -> bool:
    """Gas remains and the level/domain pair is still coherent.

    A domain that has been switched back to the super-environment's
    while the level still differs marks a finished function body.
    """
    if env.gas <= 0:
        return False
    return not (env.domain == fenv.domain and env.level != fenv.level)


# ---------------------------------------------------------------------------
# Variable and array initialization

def _write_payload(sigma, addr, payload, env, access=gm.PUBLIC):
    value = MemoryValue(payload, domain=env.domain, level=env.level,
                        access=access, occupancy=gm.OCCUPY)
    return gm.write(sigma, addr, value, "dir")


@lru_cache(maxsize=None)
def _leaf_template(domain, level):
    return MemoryValue(Undef(), domain=domain, level=level,
                       access=gm.PUBLIC, occupancy=gm.OCCUPY)


@lru_cache(maxsize=None)
def _header_template(dim, group, domain, level):
    return MemoryValue(gm.ArrayGroup(dim, group), domain=domain, level=level,
                       access=gm.PUBLIC, occupancy=gm.OCCUPY)


@lru_cache(maxsize=None)
def _group_run(suffix: tuple, domain, level) -> tuple:
    """Blocks of one group whose own dimension sizes are ``suffix``.

    A final-dimension group is a single default leaf; any other group is
    its header (carrying the sibling count and group size) followed by
    the runs of its subgroups. Runs are immutable and depend only on the
    dimension suffix, so they are shared across arrays and calls.
    """
    if len(suffix) == 1:
        return (_leaf_template(domain, level),)
    group_size = array_layout(suffix).group_sizes[0]
    header = _header_template(suffix[0], group_size, domain, level)
    return (header,) + _group_run(suffix[1:], domain, level) * suffix[1]


def init_array(K: int, sigma: MemoryState, base: Address, arr_type,
               env: Env) -> MemoryState | None:
    """Depth-first tree initialization of an allocated array run.

    Every non-final dimension group gets a header block at its base;
    final-dimension elements become default leaves. Budget K is spent
    one unit per written block, checked up front.
    """
    dims, _final = array_dims(arr_type)
    if not dims:
        return None
    layout = array_layout(dims)
    total = layout.array_size
    if base.index + total > sigma.size:
        return None
    if K < total:
        return None
    run = _group_run(tuple(dims), env.domain, env.level)
    blocks = list(sigma.blocks)
    blocks[base.index:base.index + total] = run * dims[0]
    return MemoryState(tuple(blocks), sigma.symbol_table, sigma.alloc_floor)


def init_var(sigma: MemoryState, env: Env, binfo: BlockInfo, access,
             ltype, addr: Address, K: int | None = None) -> MemoryState | None:
    """First write of a declared block: default value, declared access."""
    if addr is None or not 0 <= addr.index < sigma.size:
        return None
    if sigma.blocks[addr.index].occupancy == gm.OCCUPY:
        return None
    acc = access or gm.PUBLIC
    if isinstance(ltype, Tarray):
        dims, _final = array_dims(ltype)
        layout = array_layout(dims)
        sig = gm.allocate_at(sigma, addr, layout.array_size)
        if sig is None:
            return None
        return init_array(K if K is not None else 2 * layout.array_size + 2,
                          sig, addr, ltype, env)
    if isinstance(ltype, Tmap):
        head = MapNode(init=addr, kv=None, key_type=ltype.key,
                       value_type=ltype.value, next=None)
        value = MemoryValue(head, domain=env.domain, level=env.level,
                            access=acc, occupancy=gm.OCCUPY)
        return gm.write(sigma, addr, value, "dir")
    value = MemoryValue(Undef(), domain=env.domain, level=env.level,
                        access=acc, occupancy=gm.OCCUPY)
    return gm.write(sigma, addr, value, "dir")


# ---------------------------------------------------------------------------
# Single-statement dispatch

@dataclass
class StepResult:
    sigma: MemoryState | None
    env: Env
    remaining: tuple
    error: str | None = None
    symbolic_cond: SymExpr | None = None  # branch condition needs a fork
    halted: bool = False                  # throw-style termination


def _fail(env, rest, msg, ctx) -> StepResult:
    ctx.fail(msg)
    return StepResult(None, env, tuple(rest), error=msg)


def _eval_r(K, e, sigma, ctx, env):
    from .exprs import eval_rvalue
    return eval_rvalue(K, e, sigma, ctx.binfo, env)


def _eval_l(K, e, sigma, ctx, env):
    from .exprs import eval_lvalue
    return eval_lvalue(K, e, sigma, ctx.binfo, env)


def _cond_bit(K, e, sigma, ctx, env):
    from .exprs import eval_rvalue, extract
    return extract(eval_rvalue(K, e, sigma, ctx.binfo, env), "bool")


def exec_statement(K: int, sigma: MemoryState, args, env: Env, fenv: Env,
                   head: LStatement, rest, ctx: ExecContext,
                   assume: bool | None = None) -> StepResult:
    """Dispatch one statement. Gas must already be spent by the caller."""
    rest = tuple(rest)

    if isinstance(head, Snil):
        return StepResult(sigma, env, rest)

    if isinstance(head, Throw):
        base = ctx.sigma_init if ctx.sigma_init is not None else sigma
        names = gm.reserved_addresses(base.size)
        flag = MemoryValue(BoolPayload(True), domain=names["0xglobal"],
                           level=0, access=gm.PUBLIC, occupancy=gm.OCCUPY)
        thrown = gm.write(base, names["0xthrow"], flag, "dir")
        return StepResult(thrown, env, (), halted=True)

    if isinstance(head, FunStop):
        env2 = replace(env, level=fenv.level, domain=fenv.domain)
        return StepResult(sigma, env2, rest)

    if isinstance(head, Contract):
        declared = tuple(head.inherits)
        expected = tuple(ctx.registry.get(head.name, declared))
        if declared != expected:
            return StepResult(sigma, env, rest)
        info = ContractInfo(head.name, tuple(head.members), declared)
        sig = _write_payload(sigma, head.name, info, env)
        if sig is None:
            return _fail(env, rest, f"contract block {head.name} out of range", ctx)
        return StepResult(sig, env, rest)

    if isinstance(head, Var):
        decl = head.decl
        if decl.addr is None:
            return _fail(env, rest, "declaration without an address", ctx)
        sig = init_var(sigma, env, ctx.binfo, head.access, decl.ltype,
                       decl.addr, K=K)
        if sig is None:
            return _fail(env, rest, f"cannot initialize block {decl.addr}", ctx)
        return StepResult(sig, env, rest)

    if isinstance(head, StructDecl):
        info = StructTypeInfo(head.type_addr, tuple(head.members))
        sig = _write_payload(sigma, head.type_addr, info, env)
        if sig is None:
            return _fail(env, rest, f"struct block {head.type_addr} out of range", ctx)
        return StepResult(sig, env, rest)

    if isinstance(head, FunCall):
        return _exec_call(K, sigma, env, fenv, head, rest, ctx)

    if isinstance(head, If):
        bit = _cond_bit(K, head.cond, sigma, ctx, env)
        if bit is None:
            return _fail(env, rest, "branch condition failed to evaluate", ctx)
        if isinstance(bit, SymExpr):
            if assume is None:
                return StepResult(sigma, env, (head,) + rest, symbolic_cond=bit)
            bit = assume
        chosen = head.then if bit else head.orelse
        return StepResult(sigma, env, tuple(chosen) + rest)

    if isinstance(head, LoopWhile):
        bit = _cond_bit(K, head.cond, sigma, ctx, env)
        if bit is None:
            return _fail(env, rest, "loop condition failed to evaluate", ctx)
        if isinstance(bit, SymExpr):
            if assume is None:
                return StepResult(sigma, env, (head,) + rest, symbolic_cond=bit)
            bit = assume
        if bit:
            return StepResult(sigma, env, tuple(head.body) + (head,) + rest)
        return StepResult(sigma, env, rest)

    if isinstance(head, LoopFor):
        bit = _cond_bit(K, head.cond, sigma, ctx, env)
        if bit is None:
            return _fail(env, rest, "loop condition failed to evaluate", ctx)
        if isinstance(bit, SymExpr):
            if assume is None:
                return StepResult(sigma, env, (head,) + rest, symbolic_cond=bit)
            bit = assume
        if bit:
            unrolled = []
            if head.init is not None:
                unrolled.append(head.init)
            unrolled.extend(head.body)
            if head.post is not None:
                unrolled.append(head.post)
            return StepResult(sigma, env, tuple(unrolled) + (head,) + rest)
        return StepResult(sigma, env, rest)

    if isinstance(head, Modifier):
        return _exec_modifier_decl(K, sigma, env, fenv, head, rest, ctx)

    if isinstance(head, Fun):
        return _exec_fun_decl(K, sigma, env, fenv, head, rest, ctx)

    if isinstance(head, Assign):
        return _exec_assign(K, sigma, env, fenv, head, rest, ctx)

    if isinstance(head, Return):
        value = _eval_r(K, head.value, sigma, ctx, env)
        if value is None:
            return _fail(env, rest, "return value failed to evaluate", ctx)
        sig = _write_returns(sigma, env, ctx, (value,))
        if sig is None:
            return _fail(env, rest, "return slot is not writable", ctx)
        env2 = replace(env, domain=fenv.domain)
        return StepResult(sig, env2, rest)

    if isinstance(head, Returns):
        values = []
        for e in head.values:
            v = _eval_r(K, e, sigma, ctx, env)
            if v is None:
                return _fail(env, rest, "returned value failed to evaluate", ctx)
            values.append(v)
        sig = _write_returns(sigma, env, ctx, tuple(values))
        if sig is None:
            return _fail(env, rest, "return slots are not writable", ctx)
        env2 = replace(env, domain=fenv.domain)
        return StepResult(sig, env2, rest)

    return _fail(env, rest, f"unknown statement {type(head).__name__}", ctx)


def _current_ret_addr(sigma: MemoryState, env: Env) -> Address | None:
    # The executing function is identified by the environment's domain;
    # its stored declaration carries the return-slot base.
    if not 0 <= env.domain.index < sigma.size:
        return None
    block = sigma.blocks[env.domain.index]
    if isinstance(block.payload, FunctionInfo):
        return block.payload.ret_addr
    return None


def _write_returns(sigma, env, ctx, values) -> MemoryState | None:
    lam = _current_ret_addr(sigma, env)
    if lam is None:
        # Top-level return: nothing to store, the domain switch still halts.
        return sigma
    sig = sigma
    for i, v in enumerate(values):
        target = Address(lam.index + i)
        sig = gm.write(sig, target, v, "chck", env, ctx.binfo)
        if sig is None:
            return None
    return sig


def _exec_call(K, sigma, env, fenv, head: FunCall, rest, ctx) -> StepResult:
    callee = head.callee
    fid = None
    if isinstance(callee, Efun):
        if callee.addr is None:
            return _fail(env, rest, "call target has no address", ctx)
        target = callee.addr
    else:
        cv = _eval_r(K, callee, sigma, ctx, env)
        if cv is None or not isinstance(cv.payload, Fid) or cv.payload.fun is None:
            return _fail(env, rest, "call target is not a function value", ctx)
        fid = cv.payload
        target = fid.fun
    arg_values = []
    for a in head.args:
        v = _eval_r(K, a, sigma, ctx, env)
        if v is None:
            return _fail(env, rest, "call argument failed to evaluate", ctx)
        arg_values.append(v)
    if fid is not None and fid.args:
        arg_values = list(fid.args) + arg_values
    return _enter_call(K, sigma, env, fenv, target, fid, tuple(arg_values),
                       rest, ctx)


def _enter_call(K, sigma, env, fenv, target: Address, fid, arg_values,
                rest, ctx) -> StepResult:
    from .exprs import extract
    block = gm.read(sigma, target, "chck", env, ctx.binfo)
    if block is None or not isinstance(block.payload, FunctionInfo):
        return _fail(env, rest, f"no function stored at {target}", ctx)
    info = block.payload
    body = extract(block, "stmts")
    if body is None:
        return _fail(env, rest, f"function at {target} has no body", ctx)
    sig = sigma
    if info.params is not None:
        if fid is not None and fid.receiver is not None:
            receiver = gm.read(sigma, fid.receiver, "dir")
            if receiver is not None and len(info.params) == len(arg_values) + 1:
                arg_values = (receiver,) + tuple(arg_values)
        if len(info.params) != len(arg_values):
            return _fail(env, rest,
                         f"call arity {len(arg_values)} != {len(info.params)}", ctx)
        for p, v in zip(info.params, arg_values):
            target_block = gm.read(sig, p.addr, "dir")
            if target_block is None:
                return _fail(env, rest, "parameter block out of range", ctx)
            sig = gm.write(sig, p.addr, replace(target_block, payload=v.payload,
                                                occupancy=gm.OCCUPY), "dir")
    env2 = replace(env, level=0, domain=target)
    return StepResult(sig, env2, tuple(body) + rest)


def _exec_modifier_decl(K, sigma, env, fenv, head: Modifier, rest, ctx) -> StepResult:
    sig = sigma
    for p in head.params:
        sig = init_var(sig, env, ctx.binfo, None, p.ltype, p.addr, K=K)
        if sig is None:
            return _fail(env, rest, "modifier parameter block not free", ctx)
    if head.ret_addr is not None:
        sig = _init_return_slots(sig, env, head.ret_addr, (Tbool(),))
        if sig is None:
            return _fail(env, rest, "modifier return slot not available", ctx)
    body = tuple(head.body)
    if not body or not isinstance(body[-1], FunStop):
        body = body + (FunStop(),)
    info = FunctionInfo((Tbool(),), tuple(head.params), head.ret_addr, body)
    sig = _write_payload(sig, head.name, info, env)
    if sig is None:
        return _fail(env, rest, "modifier block out of range", ctx)
    return StepResult(sig, env, rest)


def _init_return_slots(sigma, env, ret_addr: Address, returns) -> MemoryState | None:
    count = max(1, len(returns))
    sig = sigma
    for i in range(count):
        addr = Address(ret_addr.index + i)
        if not 0 <= addr.index < sig.size:
            return None
        block = sig.blocks[addr.index]
        if block.occupancy == gm.OCCUPY and not isinstance(block.payload, Undef):
            return None
        sig = _write_payload(sig, addr, Undef(), env)
    return sig


def _exec_fun_decl(K, sigma, env, fenv, head: Fun, rest, ctx) -> StepResult:
    if head.modifiers:
        names = gm.reserved_addresses(sigma.size)
        flag_idx = names["0xmodifier"].index
        env_cur = env
        for call in head.modifiers:
            after, env_cur = _run(K, sigma, None, env_cur, fenv, (call,), ctx)
            if after is None:
                return _fail(env_cur, rest, "modifier evaluation failed", ctx)
            verdict = _modif_check(sigma, after, flag_idx)
            if verdict is None:
                return _fail(env_cur, rest,
                             "modifier touched memory outside its flag", ctx)
            if verdict is False:
                # Checks came back false: the guarded function is skipped.
                return StepResult(sigma, env_cur, rest)
        env = env_cur
    sig = sigma
    for p in head.params:
        sig = init_var(sig, env, ctx.binfo, None, p.ltype, p.addr, K=K)
        if sig is None:
            return _fail(env, rest, "parameter block not free", ctx)
    if head.ret_addr is not None:
        sig = _init_return_slots(sig, env, head.ret_addr, head.returns)
        if sig is None:
            return _fail(env, rest, "return slots not available", ctx)
    body = tuple(head.body)
    if not body or not isinstance(body[-1], FunStop):
        body = body + (FunStop(),)
    info = FunctionInfo(tuple(head.returns), tuple(head.params),
                        head.ret_addr, body)
    sig = _write_payload(sig, head.name, info, env)
    if sig is None:
        return _fail(env, rest, "function block out of range", ctx)
    return StepResult(sig, env, rest)


def _modif_check(before: MemoryState, after: MemoryState, flag_idx: int):
    """True: flag set and nothing else changed. False: untouched memory but
    flag false. None: some other block was modified."""
    if before.size != after.size:
        return None
    for i, (a, b) in enumerate(zip(before.blocks, after.blocks)):
        if i == flag_idx:
            continue
        if a != b:
            return None
    flag = after.blocks[flag_idx].payload
    if isinstance(flag, BoolPayload) and flag.bit is True:
        return True
    return False


def _exec_assign(K, sigma, env, fenv, head: Assign, rest, ctx) -> StepResult:
    rhs = _eval_r(K, head.rhs, sigma, ctx, env)
    if rhs is None:
        return _fail(env, rest, "assignment right side failed to evaluate", ctx)
    if isinstance(rhs.payload, Fid) and rhs.payload.fun is not None:
        # Function pointer produced by a field access: run it as a call.
        fid = rhs.payload
        return _enter_call(K, sigma, env, fenv, fid.fun, fid,
                           tuple(fid.args or ()), rest, ctx)
    addr = _eval_l(K, head.lhs, sigma, ctx, env)
    if addr is None:
        if isinstance(head.lhs, Econst) and isinstance(head.lhs.value, Vmap):
            sig = _map_insert(K, sigma, head.lhs.value, rhs, env, ctx)
            if sig is None:
                return _fail(env, rest, "mapping insert failed", ctx)
            return StepResult(sig, env, rest)
        return _fail(env, rest, "assignment target has no address", ctx)
    target = gm.read(sigma, addr, "dir")
    if target is not None and isinstance(target.payload, MapNode):
        node = target.payload
        if node.kv is None:
            return _fail(env, rest, "cannot assign into a mapping head", ctx)
        grafted = replace(target, payload=replace(node, kv=(node.kv[0], rhs.payload)))
        sig = gm.write(sigma, addr, grafted, "chck", env, ctx.binfo)
    else:
        sig = gm.write(sigma, addr, rhs, "chck", env, ctx.binfo)
    if sig is None:
        return _fail(env, rest, f"validated write to {addr} failed", ctx)
    return StepResult(sig, env, rest)


def _map_insert(K, sigma, vmap: Vmap, value: MemoryValue, env: Env,
                ctx: ExecContext) -> MemoryState | None:
    """Create the chain entry for a missing key (insert-only mappings)."""
    from .symbolic import is_symbolic

    key_payloads = []
    for e in vmap.keys:
        kv = _eval_r(K, e, sigma, ctx, env)
        if kv is None:
            return None
        key_payloads.append(kv.payload)
    kt, vt = vmap.key_type, vmap.value_type
    sig = sigma
    base = vmap.base
    for i, key in enumerate(key_payloads):
        # Chains key on concrete payloads only.
        if isinstance(key, BoolPayload) and is_symbolic(key.bit):
            return None
        if isinstance(key, gm.IntPayload) and is_symbolic(key.value):
            return None
        head_block = gm.read(sig, base, "chck", env, ctx.binfo)
        if head_block is None or not isinstance(head_block.payload, MapNode):
            return None
        last = i + 1 == len(key_payloads)
        node_addr = None
        found = None
        cur = base
        for _ in range(sig.size + 1):
            blk = gm.read(sig, cur, "dir")
            if blk is None or not isinstance(blk.payload, MapNode):
                return None
            if blk.payload.kv is not None and blk.payload.kv[0] == key:
                found = cur
                break
            if blk.payload.next is None:
                node_addr = cur  # chain tail
                break
            cur = blk.payload.next
        if found is not None:
            if last:
                blk = gm.read(sig, found, "dir")
                node = blk.payload
                sig = gm.write(sig, found,
                               replace(blk, payload=replace(node, kv=(key, value.payload))),
                               "chck", env, ctx.binfo)
                return sig
            blk = gm.read(sig, found, "dir")
            entry = blk.payload.kv[1]
            if not isinstance(entry, MapNode):
                return None
            base = entry.init
            if isinstance(vt, Tmap):
                kt, vt = vt.key, vt.value
            continue
        # Key missing: allocate a fresh node, link it at the tail.
        alloc = gm.allocate(sig, 1)
        if alloc is None:
            return None
        new_addr, sig = alloc
        if last:
            entry_payload = value.payload
        else:
            inner = gm.allocate(sig, 1)
            if inner is None:
                return None
            inner_addr, sig = inner
            if not isinstance(vt, Tmap):
                return None
            inner_head = MapNode(init=inner_addr, kv=None, key_type=vt.key,
                                 value_type=vt.value, next=None)
            sig = gm.write(sig, inner_addr,
                           replace(head_block, payload=inner_head), "dir")
            entry_payload = MapNode(init=inner_addr, kv=None, key_type=vt.key,
                                    value_type=vt.value, next=None)
        node = MapNode(init=base, kv=(key, entry_payload), key_type=kt,
                       value_type=vt, next=None)
        sig = gm.write(sig, new_addr, replace(head_block, payload=node), "dir")
        tail_block = gm.read(sig, node_addr, "dir")
        sig = gm.write(sig, node_addr,
                       replace(tail_block, payload=replace(tail_block.payload,
                                                           next=new_addr)), "dir")
        if sig is None:
            return None
        if last:
            return sig
        base = entry_payload.init
        kt, vt = vt.key, vt.value
    return sig


# ---------------------------------------------------------------------------
# Batch runner

def _run(K, sigma, args, env: Env, fenv: Env, prog, ctx: ExecContext):
    """Run to completion; returns (optional state, final environment)."""
    remaining = tuple(prog)
    while True:
        if sigma is None:
            return None, env
        if not remaining:
            return sigma, env
        if not env_check(env, fenv):
            return sigma, env
        env = env.spend()
        res = exec_statement(K, sigma, args, env, fenv, remaining[0],
                             remaining[1:], ctx)
        if res.error is not None:
            return None, res.env
        if res.symbolic_cond is not None:
            ctx.fail("symbolic branch condition in concrete execution")
            return None, res.env
        sigma, env, remaining = res.sigma, res.env, res.remaining


def exec_stmts(K: int, sigma: MemoryState | None, args, env: Env, fenv: Env,
        prog, ctx: ExecContext | None = None) -> MemoryState | None:
    """Execute a typechecked statement list; absent on any failure."""
    if sigma is None:
        return None
    if ctx is None:
        ctx = ExecContext(sigma_init=sigma)
    elif ctx.sigma_init is None:
        ctx.sigma_init = sigma
    final, _env = _run(K, sigma, args, env, fenv, prog, ctx)
    return final
