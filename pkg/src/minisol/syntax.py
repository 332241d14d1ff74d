"""Typed abstract syntax for the contract language.

Types, values, expressions and statements are plain tagged unions. The
static checker assigns every expression a type pair (source type, result
type) and rejects trees the runtime would otherwise have to re-check:
mixed-width or mixed-signedness arithmetic, non-boolean branch
conditions, struct arity and field type mismatches. Programs are flat
statement lists; the next statement to execute is always the head of the
remaining list, and ``normalize_seq`` flattens any nested sequencing
into that form.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

from .memory import (
    Address,
    BoolPayload,
    Fid,
    IntPayload,
    MapNode,
    StructInstance,
    Undef,
)

ARITH_OPS = ("+", "-", "*", "/", "%")
CMP_OPS = ("<", ">", "<=", ">=", "==", "!=")
LOGIC_OPS = ("&&", "||")
UNARY_OPS = ("!", "neg")


class LTypeError(Exception):
    """Static type violation."""


# ---------------------------------------------------------------------------
# Types

class LType:
    pass


@dataclass(frozen=True)
class Tbool(LType):
    pass


@dataclass(frozen=True)
class Tint(LType):
    width: int = 64
    signed: bool = False


def Tuint(width: int = 64) -> Tint:
    return Tint(width, signed=False)


def Tsint(width: int = 64) -> Tint:
    return Tint(width, signed=True)


@dataclass(frozen=True)
class Tarray(LType):
    length: int
    element: LType


@dataclass(frozen=True)
class Tmap(LType):
    key: LType
    value: LType


@dataclass(frozen=True)
class Tfid(LType):
    fun: Address | None = None


@dataclass(frozen=True)
class Tstruct(LType):
    type_addr: Address


@dataclass(frozen=True)
class Teaddr(LType):
    addr: Address | None = None


@dataclass(frozen=True)
class Tunit(LType):
    pass


def array_dims(t: LType) -> tuple[tuple[int, ...], LType]:
    """Peel a nested array type into its dimension vector and base type."""
    dims: list[int] = []
    while isinstance(t, Tarray):
        dims.append(t.length)
        t = t.element
    return tuple(dims), t


def is_normal_type(t: LType) -> bool:
    """Normal types terminate array nesting: no arrays or mappings inside."""
    return isinstance(t, (Tbool, Tint, Tfid, Tstruct, Teaddr, Tunit))


def type_text(t: LType) -> str:
    if isinstance(t, Tbool):
        return "bool"
    if isinstance(t, Tint):
        return f"{'int' if t.signed else 'uint'}{t.width}"
    if isinstance(t, Tarray):
        dims, base = array_dims(t)
        return type_text(base) + "".join(f"[{d}]" for d in dims)
    if isinstance(t, Tmap):
        return f"mapping({type_text(t.key)}=>{type_text(t.value)})"
    if isinstance(t, Tfid):
        return f"fid({t.fun.index if t.fun else '-'})"
    if isinstance(t, Tstruct):
        return f"struct@{t.type_addr.index}"
    if isinstance(t, Teaddr):
        return f"eaddr({t.addr.index if t.addr else '-'})"
    if isinstance(t, Tunit):
        return "unit"
    return f"<{type(t).__name__}>"


# ---------------------------------------------------------------------------
# Values

class LValue:
    pass


@dataclass(frozen=True)
class Vbool(LValue):
    bit: bool


@dataclass(frozen=True)
class Vint(LValue):
    value: int
    width: int = 64
    signed: bool = False


@dataclass
class Varray(LValue):
    # Carries the whole array type so address resolution has the dimension
    # vector without consulting a typing context.
    arr_type: LType = None
    indices: tuple = ()
    base: Address = None


@dataclass
class Vmap(LValue):
    base: Address = None
    keys: tuple = ()          # one key expression per mapping dimension
    key_type: LType = None
    value_type: LType = None
    next: Address | None = None


@dataclass(frozen=True)
class Vstruct(LValue):
    type_addr: Address
    inst_addr: Address


@dataclass
class Vfield(LValue):
    result_type: LType = None
    type_addr: Address = None
    inst_addr: Address = None
    members: tuple = ()       # nonempty member-name path
    args: tuple | None = None  # call arguments for function-valued members


# ---------------------------------------------------------------------------
# Expressions

class LExpr:
    pass


def _tpair_field():
    return field(default=None, compare=False, repr=False)


@dataclass
class Econst(LExpr):
    value: LValue
    tpair: tuple | None = _tpair_field()


@dataclass
class Evar(LExpr):
    addr: Address | None
    ltype: LType
    tpair: tuple | None = _tpair_field()


@dataclass
class Efun(LExpr):
    addr: Address | None
    ltype: LType
    tpair: tuple | None = _tpair_field()


@dataclass
class Econ(LExpr):
    addr: Address | None
    tpair: tuple | None = _tpair_field()


@dataclass
class Epar(LExpr):
    addr: Address | None
    tpair: tuple | None = _tpair_field()


@dataclass
class Estruct(LExpr):
    type_addr: Address
    values: tuple = ()
    tpair: tuple | None = _tpair_field()


@dataclass
class Ebop(LExpr):
    op: str
    left: LExpr = None
    right: LExpr = None
    tpair: tuple | None = _tpair_field()


@dataclass
class Euop(LExpr):
    op: str
    operand: LExpr = None
    tpair: tuple | None = _tpair_field()


@dataclass
class Emodifier(LExpr):
    tpair: tuple | None = _tpair_field()


# ---------------------------------------------------------------------------
# Statements

class LStatement:
    pass


@dataclass
class Contract(LStatement):
    name: Address
    inherits: tuple = ()
    members: tuple = ()  # (member name, member address) pairs


@dataclass
class Modifier(LStatement):
    name: Address
    params: tuple = ()
    body: tuple = ()
    ret_addr: Address | None = None


@dataclass
class Var(LStatement):
    access: str | None
    decl: Evar = None


@dataclass
class StructDecl(LStatement):
    type_addr: Address
    members: tuple = ()  # (field name, field type) pairs


@dataclass
class Assign(LStatement):
    lhs: LExpr
    rhs: LExpr


@dataclass
class Return(LStatement):
    value: LExpr


@dataclass
class Returns(LStatement):
    values: tuple = ()


@dataclass
class Throw(LStatement):
    pass


@dataclass
class Snil(LStatement):
    pass


@dataclass
class FunStop(LStatement):
    pass


@dataclass
class Fun(LStatement):
    name: Address
    modifiers: tuple = ()  # FunCall statements run before the body is stored
    params: tuple = ()     # Evar declarations with pre-assigned addresses
    returns: tuple = ()
    body: tuple = ()
    ret_addr: Address | None = None


@dataclass
class LoopFor(LStatement):
    cond: LExpr
    init: LStatement = None
    body: tuple = ()
    post: LStatement = None


@dataclass
class LoopWhile(LStatement):
    cond: LExpr
    body: tuple = ()


@dataclass
class FunCall(LStatement):
    callee: LExpr
    args: tuple = ()


@dataclass
class If(LStatement):
    cond: LExpr
    then: tuple = ()
    orelse: tuple = ()


# ---------------------------------------------------------------------------
# Sequence normalization

def normalize_seq(raw) -> list[LStatement]:
    """Flatten arbitrarily nested statement sequences into one list.

    Bodies inside branching and looping statements are normalized in
    place as well. Order preserving and idempotent.
    """
    out: list[LStatement] = []
    _flatten(raw, out)
    return [_normalize_stmt(s) for s in out]


def _flatten(node, out: list):
    if node is None:
        return
    if isinstance(node, (list, tuple)):
        for item in node:
            _flatten(item, out)
        return
    if isinstance(node, LStatement):
        out.append(node)
        return
    raise TypeError(f"not a statement: {type(node).__name__}")


def _normalize_stmt(s: LStatement) -> LStatement:
    if isinstance(s, If):
        return If(s.cond, tuple(normalize_seq(s.then)), tuple(normalize_seq(s.orelse)))
    if isinstance(s, LoopWhile):
        return LoopWhile(s.cond, tuple(normalize_seq(s.body)))
    if isinstance(s, LoopFor):
        return LoopFor(s.cond, s.init, tuple(normalize_seq(s.body)), s.post)
    if isinstance(s, Fun):
        return Fun(s.name, s.modifiers, s.params, s.returns,
                   tuple(normalize_seq(s.body)), s.ret_addr)
    if isinstance(s, Modifier):
        return Modifier(s.name, s.params, tuple(normalize_seq(s.body)), s.ret_addr)
    return s


# ---------------------------------------------------------------------------
# Typing context and checker

@dataclass
class TypeContext:
    vars: dict = field(default_factory=dict)       # Address -> LType
    structs: dict = field(default_factory=dict)    # Address -> member descriptor tuple
    functions: dict = field(default_factory=dict)  # Address -> (param types, return types)
    contracts: dict = field(default_factory=dict)  # Address -> inheritance tuple
    _fun_returns: list = field(default_factory=list)

    def copy(self) -> "TypeContext":
        return TypeContext(dict(self.vars), dict(self.structs),
                           dict(self.functions), dict(self.contracts))

    def struct_members(self, addr: Address):
        if addr not in self.structs:
            raise LTypeError(f"unknown struct type at {addr}")
        return self.structs[addr]


def _require(cond: bool, msg: str):
    if not cond:
        raise LTypeError(msg)


def _int_kind(t: LType) -> bool:
    return isinstance(t, Tint)


def _types_equal(a: LType, b: LType) -> bool:
    # Function-id types match regardless of which function they point at.
    if isinstance(a, Tfid) and isinstance(b, Tfid):
        return True
    return a == b


def typecheck_expr(e: LExpr, ctx: TypeContext) -> tuple[LType, LType]:
    """Assign and return the expression's (source, result) type pair."""
    pair = _check_expr(e, ctx)
    e.tpair = pair
    return pair


def _check_expr(e: LExpr, ctx: TypeContext) -> tuple[LType, LType]:
    if isinstance(e, Econst):
        t = _value_type(e.value, ctx)
        return (t, t)
    if isinstance(e, (Evar, Efun)):
        return (e.ltype, e.ltype)
    if isinstance(e, (Econ, Epar)):
        return (Tunit(), Tunit())
    if isinstance(e, Estruct):
        members = ctx.struct_members(e.type_addr)
        _require(len(e.values) == len(members),
                 f"struct literal arity {len(e.values)} != {len(members)}")
        for v, (name, mt) in zip(e.values, members):
            vt = _value_type(v, ctx)
            _require(_types_equal(vt, mt),
                     f"struct field {name}: {type_text(vt)} != {type_text(mt)}")
        t = Tstruct(e.type_addr)
        return (t, t)
    if isinstance(e, Ebop):
        (_, lt) = typecheck_expr(e.left, ctx)
        (_, rt) = typecheck_expr(e.right, ctx)
        if e.op in ARITH_OPS:
            _require(_int_kind(lt) and lt == rt,
                     f"arithmetic {e.op} needs one shared integer type, "
                     f"got {type_text(lt)} and {type_text(rt)}")
            return (lt, lt)
        if e.op in CMP_OPS:
            _require(lt == rt, f"comparison {e.op} over unequal types "
                               f"{type_text(lt)} and {type_text(rt)}")
            if e.op in ("==", "!="):
                _require(_int_kind(lt) or isinstance(lt, Tbool),
                         f"equality needs integers or booleans, got {type_text(lt)}")
            else:
                _require(_int_kind(lt),
                         f"ordered comparison needs integers, got {type_text(lt)}")
            return (lt, Tbool())
        if e.op in LOGIC_OPS:
            _require(isinstance(lt, Tbool) and isinstance(rt, Tbool),
                     f"logical {e.op} needs booleans")
            return (Tbool(), Tbool())
        raise LTypeError(f"unknown binary operator {e.op!r}")
    if isinstance(e, Euop):
        (_, t) = typecheck_expr(e.operand, ctx)
        if e.op == "!":
            _require(isinstance(t, Tbool), "logical not needs a boolean")
            return (Tbool(), Tbool())
        if e.op == "neg":
            _require(_int_kind(t) and t.signed, "negation needs a signed integer")
            return (t, t)
        raise LTypeError(f"unknown unary operator {e.op!r}")
    if isinstance(e, Emodifier):
        raise LTypeError("modifier expressions cannot appear in executable positions")
    raise LTypeError(f"unknown expression {type(e).__name__}")


def _value_type(v: LValue, ctx: TypeContext) -> LType:
    if isinstance(v, Vbool):
        return Tbool()
    if isinstance(v, Vint):
        return Tint(v.width, v.signed)
    if isinstance(v, Varray):
        dims, base = array_dims(v.arr_type)
        _require(bool(dims), "array value over a non-array type")
        _require(len(v.indices) == len(dims),
                 f"index path length {len(v.indices)} != dimension count {len(dims)}")
        _require(is_normal_type(base), "array base must be a normal type")
        for ix in v.indices:
            (_, it) = typecheck_expr(ix, ctx)
            _require(_int_kind(it), "array index must be an integer")
        return base
    if isinstance(v, Vmap):
        _require(bool(v.keys), "mapping value needs at least one key")
        kt, vt = v.key_type, v.value_type
        for i, k in enumerate(v.keys):
            (_, at) = typecheck_expr(k, ctx)
            _require(_types_equal(at, kt),
                     f"mapping key {i}: {type_text(at)} != {type_text(kt)}")
            if i + 1 < len(v.keys):
                _require(isinstance(vt, Tmap),
                         "too many keys for the mapping's nesting depth")
                kt, vt = vt.key, vt.value
        return vt
    if isinstance(v, Vstruct):
        return Tstruct(v.type_addr)
    if isinstance(v, Vfield):
        _require(bool(v.members), "field access needs a nonempty member path")
        cur = v.type_addr
        mt: LType | None = None
        for i, name in enumerate(v.members):
            members = ctx.struct_members(cur)
            found = dict(members)
            _require(name in found, f"unknown member {name!r} of struct@{cur.index}")
            mt = found[name]
            if i + 1 < len(v.members):
                _require(isinstance(mt, Tstruct),
                         f"member {name!r} is not a struct, cannot descend")
                cur = mt.type_addr
        if v.args is not None:
            _require(isinstance(mt, Tfid), "call arguments on a non-function member")
        _require(_types_equal(mt, v.result_type),
                 f"field access result {type_text(v.result_type)} != "
                 f"member type {type_text(mt)}")
        return v.result_type
    raise LTypeError(f"unknown value {type(v).__name__}")


def typecheck_stmt(stmts, ctx: TypeContext) -> None:
    """Check a statement list, registering declarations as they appear."""
    for s in stmts:
        _check_stmt(s, ctx)


def _declare_var(decl: Evar, ctx: TypeContext):
    _require(decl.addr is not None, "declaration without a bound address")
    _require(decl.addr not in ctx.vars, f"duplicate declaration at {decl.addr}")
    if isinstance(decl.ltype, Tarray):
        dims, base = array_dims(decl.ltype)
        _require(all(d > 0 for d in dims), "array dimensions must be positive")
        _require(is_normal_type(base), "array base must be a normal type")
    ctx.vars[decl.addr] = decl.ltype
    decl.tpair = (decl.ltype, decl.ltype)


def _check_stmt(s: LStatement, ctx: TypeContext) -> None:
    if isinstance(s, Contract):
        ctx.contracts[s.name] = tuple(s.inherits)
        return
    if isinstance(s, Var):
        _require(isinstance(s.decl, Evar), "variable declaration needs a reference")
        _declare_var(s.decl, ctx)
        return
    if isinstance(s, StructDecl):
        ctx.structs[s.type_addr] = tuple(s.members)
        return
    if isinstance(s, Assign):
        (_, rt) = typecheck_expr(s.rhs, ctx)
        _require(_is_lvalue_expr(s.lhs), "left side is not assignable")
        (_, lt) = typecheck_expr(s.lhs, ctx)
        if isinstance(rt, Tfid):
            # Field-access call in value position: the call runs for its
            # effect and the left side is left untouched.
            return
        _require(_types_equal(lt, rt),
                 f"assignment type mismatch: {type_text(lt)} != {type_text(rt)}")
        return
    if isinstance(s, Return):
        (_, t) = typecheck_expr(s.value, ctx)
        if ctx._fun_returns:
            rets = ctx._fun_returns[-1]
            _require(len(rets) == 1 and _types_equal(t, rets[0]),
                     "return value does not match the declared return type")
        return
    if isinstance(s, Returns):
        ts = [typecheck_expr(e, ctx)[1] for e in s.values]
        if ctx._fun_returns:
            rets = ctx._fun_returns[-1]
            _require(len(ts) == len(rets) and
                     all(_types_equal(a, b) for a, b in zip(ts, rets)),
                     "returned values do not match the declared return types")
        return
    if isinstance(s, (Throw, Snil, FunStop)):
        return
    if isinstance(s, If):
        (_, ct) = typecheck_expr(s.cond, ctx)
        _require(isinstance(ct, Tbool), "branch condition must be boolean")
        typecheck_stmt(s.then, ctx)
        typecheck_stmt(s.orelse, ctx)
        return
    if isinstance(s, LoopWhile):
        (_, ct) = typecheck_expr(s.cond, ctx)
        _require(isinstance(ct, Tbool), "loop condition must be boolean")
        typecheck_stmt(s.body, ctx)
        return
    if isinstance(s, LoopFor):
        (_, ct) = typecheck_expr(s.cond, ctx)
        _require(isinstance(ct, Tbool), "loop condition must be boolean")
        if s.init is not None:
            _check_stmt(s.init, ctx)
        typecheck_stmt(s.body, ctx)
        if s.post is not None:
            _check_stmt(s.post, ctx)
        return
    if isinstance(s, Modifier):
        ctx.functions[s.name] = ((), (Tbool(),))
        for p in s.params:
            _declare_var(p, ctx)
        ctx._fun_returns.append((Tbool(),))
        try:
            typecheck_stmt(s.body, ctx)
        finally:
            ctx._fun_returns.pop()
        return
    if isinstance(s, Fun):
        ctx.functions[s.name] = (tuple(p.ltype for p in s.params), tuple(s.returns))
        for p in s.params:
            _declare_var(p, ctx)
        for m in s.modifiers:
            _require(isinstance(m, FunCall), "modifier attachments must be calls")
            _check_stmt(m, ctx)
        ctx._fun_returns.append(tuple(s.returns))
        try:
            typecheck_stmt(s.body, ctx)
        finally:
            ctx._fun_returns.pop()
        return
    if isinstance(s, FunCall):
        callee = s.callee
        if isinstance(callee, Efun):
            typecheck_expr(callee, ctx)
            if callee.addr in ctx.functions:
                ptypes, _ = ctx.functions[callee.addr]
                if ptypes is not None and len(ptypes) > 0:
                    _require(len(s.args) == len(ptypes),
                             f"call arity {len(s.args)} != {len(ptypes)}")
        elif isinstance(callee, Econst) and isinstance(callee.value, Vfield):
            (_, t) = typecheck_expr(callee, ctx)
            _require(isinstance(t, Tfid), "called field is not a function")
        else:
            raise LTypeError("call target must be a function reference or field")
        for a in s.args:
            typecheck_expr(a, ctx)
        return
    raise LTypeError(f"unknown statement {type(s).__name__}")


def _is_lvalue_expr(e: LExpr) -> bool:
    if isinstance(e, (Evar, Econ, Epar)):
        return True
    return isinstance(e, Econst) and isinstance(e.value, (Varray, Vmap))


def payload_matches_type(payload, t: LType) -> bool:
    """Value-kind form of type preservation, used by the property suites."""
    if isinstance(payload, BoolPayload):
        return isinstance(t, Tbool)
    if isinstance(payload, IntPayload):
        return isinstance(t, Tint) and payload.width == t.width and payload.signed == t.signed
    if isinstance(payload, StructInstance):
        return isinstance(t, Tstruct) and (payload.type_addr is None or
                                           payload.type_addr == t.type_addr)
    if isinstance(payload, Fid):
        return isinstance(t, Tfid)
    if isinstance(payload, MapNode):
        return isinstance(t, Tmap)
    if isinstance(payload, Undef):
        return True  # declared but unset
    return False


# ---------------------------------------------------------------------------
# Interchange format (stable field names, used by --emit-ast and reload)

def type_to_data(t: LType):
    if isinstance(t, Tbool):
        return {"kind": "bool"}
    if isinstance(t, Tint):
        return {"kind": "int", "width": t.width, "signed": t.signed}
    if isinstance(t, Tarray):
        return {"kind": "array", "length": t.length, "element": type_to_data(t.element)}
    if isinstance(t, Tmap):
        return {"kind": "map", "key": type_to_data(t.key), "value": type_to_data(t.value)}
    if isinstance(t, Tfid):
        return {"kind": "fid", "fun": _addr_to_data(t.fun)}
    if isinstance(t, Tstruct):
        return {"kind": "struct", "type_addr": t.type_addr.index}
    if isinstance(t, Teaddr):
        return {"kind": "eaddr", "addr": _addr_to_data(t.addr)}
    if isinstance(t, Tunit):
        return {"kind": "unit"}
    raise TypeError(f"cannot serialize type {type(t).__name__}")


def type_from_data(d) -> LType:
    k = d["kind"]
    if k == "bool":
        return Tbool()
    if k == "int":
        return Tint(d["width"], d["signed"])
    if k == "array":
        return Tarray(d["length"], type_from_data(d["element"]))
    if k == "map":
        return Tmap(type_from_data(d["key"]), type_from_data(d["value"]))
    if k == "fid":
        return Tfid(_addr_from_data(d["fun"]))
    if k == "struct":
        return Tstruct(Address(d["type_addr"]))
    if k == "eaddr":
        return Teaddr(_addr_from_data(d["addr"]))
    if k == "unit":
        return Tunit()
    raise ValueError(f"unknown type kind {k!r}")


def _addr_to_data(a: Address | None):
    return None if a is None else a.index


def _addr_from_data(d) -> Address | None:
    return None if d is None else Address(d)


def value_to_data(v: LValue):
    if isinstance(v, Vbool):
        return {"kind": "vbool", "bit": v.bit}
    if isinstance(v, Vint):
        return {"kind": "vint", "value": v.value, "width": v.width, "signed": v.signed}
    if isinstance(v, Varray):
        return {"kind": "varray", "arr_type": type_to_data(v.arr_type),
                "indices": [expr_to_data(i) for i in v.indices],
                "base": v.base.index}
    if isinstance(v, Vmap):
        return {"kind": "vmap", "base": v.base.index,
                "keys": [expr_to_data(k) for k in v.keys],
                "key_type": type_to_data(v.key_type),
                "value_type": type_to_data(v.value_type),
                "next": _addr_to_data(v.next)}
    if isinstance(v, Vstruct):
        return {"kind": "vstruct", "type_addr": v.type_addr.index,
                "inst_addr": v.inst_addr.index}
    if isinstance(v, Vfield):
        return {"kind": "vfield", "result_type": type_to_data(v.result_type),
                "type_addr": v.type_addr.index, "inst_addr": v.inst_addr.index,
                "members": list(v.members),
                "args": None if v.args is None else [expr_to_data(a) for a in v.args]}
    raise TypeError(f"cannot serialize value {type(v).__name__}")


def value_from_data(d) -> LValue:
    k = d["kind"]
    if k == "vbool":
        return Vbool(d["bit"])
    if k == "vint":
        return Vint(d["value"], d["width"], d["signed"])
    if k == "varray":
        return Varray(type_from_data(d["arr_type"]),
                      tuple(expr_from_data(i) for i in d["indices"]),
                      Address(d["base"]))
    if k == "vmap":
        return Vmap(Address(d["base"]),
                    tuple(expr_from_data(x) for x in d["keys"]),
                    type_from_data(d["key_type"]), type_from_data(d["value_type"]),
                    _addr_from_data(d["next"]))
    if k == "vstruct":
        return Vstruct(Address(d["type_addr"]), Address(d["inst_addr"]))
    if k == "vfield":
        args = d["args"]
        return Vfield(type_from_data(d["result_type"]), Address(d["type_addr"]),
                      Address(d["inst_addr"]), tuple(d["members"]),
                      None if args is None else tuple(expr_from_data(a) for a in args))
    raise ValueError(f"unknown value kind {k!r}")


def expr_to_data(e: LExpr):
    if isinstance(e, Econst):
        return {"kind": "const", "value": value_to_data(e.value)}
    if isinstance(e, Evar):
        return {"kind": "var", "addr": _addr_to_data(e.addr), "type": type_to_data(e.ltype)}
    if isinstance(e, Efun):
        return {"kind": "fun", "addr": _addr_to_data(e.addr), "type": type_to_data(e.ltype)}
    if isinstance(e, Econ):
        return {"kind": "con", "addr": _addr_to_data(e.addr)}
    if isinstance(e, Epar):
        return {"kind": "par", "addr": _addr_to_data(e.addr)}
    if isinstance(e, Estruct):
        return {"kind": "struct", "type_addr": e.type_addr.index,
                "values": [value_to_data(v) for v in e.values]}
    if isinstance(e, Ebop):
        return {"kind": "bop", "op": e.op, "left": expr_to_data(e.left),
                "right": expr_to_data(e.right)}
    if isinstance(e, Euop):
        return {"kind": "uop", "op": e.op, "operand": expr_to_data(e.operand)}
    if isinstance(e, Emodifier):
        return {"kind": "modifier"}
    raise TypeError(f"cannot serialize expression {type(e).__name__}")


def expr_from_data(d) -> LExpr:
    k = d["kind"]
    if k == "const":
        return Econst(value_from_data(d["value"]))
    if k == "var":
        return Evar(_addr_from_data(d["addr"]), type_from_data(d["type"]))
    if k == "fun":
        return Efun(_addr_from_data(d["addr"]), type_from_data(d["type"]))
    if k == "con":
        return Econ(_addr_from_data(d["addr"]))
    if k == "par":
        return Epar(_addr_from_data(d["addr"]))
    if k == "struct":
        return Estruct(Address(d["type_addr"]),
                       tuple(value_from_data(v) for v in d["values"]))
    if k == "bop":
        return Ebop(d["op"], expr_from_data(d["left"]), expr_from_data(d["right"]))
    if k == "uop":
        return Euop(d["op"], expr_from_data(d["operand"]))
    if k == "modifier":
        return Emodifier()
    raise ValueError(f"unknown expression kind {k!r}")


def stmt_to_data(s: LStatement):
    if isinstance(s, Contract):
        return {"kind": "contract", "name": s.name.index,
                "inherits": [a.index for a in s.inherits],
                "members": [[n, a.index] for n, a in s.members]}
    if isinstance(s, Modifier):
        return {"kind": "modifier", "name": s.name.index,
                "params": [expr_to_data(p) for p in s.params],
                "body": [stmt_to_data(b) for b in s.body],
                "ret_addr": _addr_to_data(s.ret_addr)}
    if isinstance(s, Var):
        return {"kind": "var", "access": s.access, "decl": expr_to_data(s.decl)}
    if isinstance(s, StructDecl):
        return {"kind": "structdecl", "type_addr": s.type_addr.index,
                "members": [[n, type_to_data(t)] for n, t in s.members]}
    if isinstance(s, Assign):
        return {"kind": "assign", "lhs": expr_to_data(s.lhs), "rhs": expr_to_data(s.rhs)}
    if isinstance(s, Return):
        return {"kind": "return", "value": expr_to_data(s.value)}
    if isinstance(s, Returns):
        return {"kind": "returns", "values": [expr_to_data(e) for e in s.values]}
    if isinstance(s, Throw):
        return {"kind": "throw"}
    if isinstance(s, Snil):
        return {"kind": "snil"}
    if isinstance(s, FunStop):
        return {"kind": "funstop"}
    if isinstance(s, Fun):
        return {"kind": "fun", "name": s.name.index,
                "modifiers": [stmt_to_data(m) for m in s.modifiers],
                "params": [expr_to_data(p) for p in s.params],
                "returns": [type_to_data(t) for t in s.returns],
                "body": [stmt_to_data(b) for b in s.body],
                "ret_addr": _addr_to_data(s.ret_addr)}
    if isinstance(s, LoopFor):
        return {"kind": "for", "cond": expr_to_data(s.cond),
                "init": None if s.init is None else stmt_to_data(s.init),
                "body": [stmt_to_data(b) for b in s.body],
                "post": None if s.post is None else stmt_to_data(s.post)}
    if isinstance(s, LoopWhile):
        return {"kind": "while", "cond": expr_to_data(s.cond),
                "body": [stmt_to_data(b) for b in s.body]}
    if isinstance(s, FunCall):
        return {"kind": "call", "callee": expr_to_data(s.callee),
                "args": [expr_to_data(a) for a in s.args]}
    if isinstance(s, If):
        return {"kind": "if", "cond": expr_to_data(s.cond),
                "then": [stmt_to_data(b) for b in s.then],
                "orelse": [stmt_to_data(b) for b in s.orelse]}
    raise TypeError(f"cannot serialize statement {type(s).__name__}")


def stmt_from_data(d) -> LStatement:
    k = d["kind"]
    if k == "contract":
        return Contract(Address(d["name"]),
                        tuple(Address(a) for a in d["inherits"]),
                        tuple((n, Address(a)) for n, a in d["members"]))
    if k == "modifier":
        return Modifier(Address(d["name"]),
                        tuple(expr_from_data(p) for p in d["params"]),
                        tuple(stmt_from_data(b) for b in d["body"]),
                        _addr_from_data(d["ret_addr"]))
    if k == "var":
        return Var(d["access"], expr_from_data(d["decl"]))
    if k == "structdecl":
        return StructDecl(Address(d["type_addr"]),
                          tuple((n, type_from_data(t)) for n, t in d["members"]))
    if k == "assign":
        return Assign(expr_from_data(d["lhs"]), expr_from_data(d["rhs"]))
    if k == "return":
        return Return(expr_from_data(d["value"]))
    if k == "returns":
        return Returns(tuple(expr_from_data(e) for e in d["values"]))
    if k == "throw":
        return Throw()
    if k == "snil":
        return Snil()
    if k == "funstop":
        return FunStop()
    if k == "fun":
        return Fun(Address(d["name"]),
                   tuple(stmt_from_data(m) for m in d["modifiers"]),
                   tuple(expr_from_data(p) for p in d["params"]),
                   tuple(type_from_data(t) for t in d["returns"]),
                   tuple(stmt_from_data(b) for b in d["body"]),
                   _addr_from_data(d["ret_addr"]))
    if k == "for":
        return LoopFor(expr_from_data(d["cond"]),
                       None if d["init"] is None else stmt_from_data(d["init"]),
                       tuple(stmt_from_data(b) for b in d["body"]),
                       None if d["post"] is None else stmt_from_data(d["post"]))
    if k == "while":
        return LoopWhile(expr_from_data(d["cond"]),
                         tuple(stmt_from_data(b) for b in d["body"]))
    if k == "call":
        return FunCall(expr_from_data(d["callee"]),
                       tuple(expr_from_data(a) for a in d["args"]))
    if k == "if":
        return If(expr_from_data(d["cond"]),
                  tuple(stmt_from_data(b) for b in d["then"]),
                  tuple(stmt_from_data(b) for b in d["orelse"]))
    raise ValueError(f"unknown statement kind {k!r}")


def program_to_data(stmts) -> list:
    return [stmt_to_data(s) for s in stmts]


def program_from_data(items) -> list[LStatement]:
    return [stmt_from_data(d) for d in items]
