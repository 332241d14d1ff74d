"""Block-addressed formal memory store.

The store is a fixed-size sequence of tagged memory values with value
semantics: every operation returns a fresh state and never mutates one
observed elsewhere. Blocks are read and written either directly ("dir")
or after validation ("chck"). The validation predicate is deliberately
centralized here so it can be swapped: a chck access succeeds iff the
block is occupied and either the block is public or the caller's domain
matches the block's domain tag.

The top of the address space is reserved for built-in blocks: the two
flag blocks (throw, modifier), the standard-library struct type blocks,
the message instance, and the built-in no-op functions with their return
slots. ``free_mem`` refuses to release reserved blocks.

Dump format (one line per block, tab separated):

    index<TAB>occupancy<TAB>access<TAB>domain<TAB>payload

The payload rendering is the stable text form documented in the README
and relied on by golden tests.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from .symbolic import SymExpr, is_symbolic

DEFAULT_MEMORY_SIZE = 100

PUBLIC = "public"
PRIVATE = "private"
INTERNAL = "internal"
ACCESS_KINDS = (PUBLIC, PRIVATE, INTERNAL)

OCCUPY = "occupy"
FREE = "free"


class MemoryConfigError(Exception):
    """Raised when a memory space cannot be set up as requested."""


@dataclass(frozen=True, order=True)
class Address:
    index: int

    def __repr__(self):
        return f"@{self.index}"


# ---------------------------------------------------------------------------
# Payloads

class Payload:
    """Base class of the tagged payload union stored in a block."""


@dataclass(frozen=True)
class Undef(Payload):
    pass


@dataclass(frozen=True)
class BoolPayload(Payload):
    bit: object = None  # bool, SymExpr or None


@dataclass(frozen=True)
class IntPayload(Payload):
    value: object = None  # int, SymExpr or None
    width: int = 64
    signed: bool = False


@dataclass(frozen=True)
class Fid(Payload):
    fun: Address | None
    receiver: Address | None = None
    args: tuple | None = None  # bound call arguments (memory values)


@dataclass(frozen=True)
class ContractInfo(Payload):
    name: Address
    members: tuple = ()   # (member name, member address) pairs
    inherits: tuple = ()  # addresses of inherited contracts


@dataclass(frozen=True)
class StructTypeInfo(Payload):
    type_addr: Address
    members: tuple = ()  # (field name, field type) pairs


@dataclass(frozen=True)
class StructInstance(Payload):
    type_addr: Address | None
    members: tuple = ()  # member payloads in declaration order


@dataclass(frozen=True)
class MapNode(Payload):
    init: Address                 # head address of the owning chain
    kv: tuple | None = None       # (key payload, value payload) or None for the head
    key_type: object = None
    value_type: object = None
    next: Address | None = None


@dataclass(frozen=True)
class FunctionInfo(Payload):
    returns: tuple = ()          # declared return types
    params: tuple | None = ()    # parameter declarations; None means "ignore arguments"
    ret_addr: Address | None = None
    body: tuple = ()             # statement list


@dataclass(frozen=True)
class StatementBody(Payload):
    body: tuple = ()


@dataclass(frozen=True)
class ArrayGroup(Payload):
    """Header block marking one group of a multidimensional array."""
    dim: int = 0
    group: int = 1


@dataclass(frozen=True)
class MemoryValue:
    payload: Payload
    domain: Address = Address(0)
    level: int = 0
    access: str = PUBLIC
    occupancy: str = OCCUPY


def free_value(domain: Address = Address(0)) -> MemoryValue:
    return MemoryValue(Undef(), domain=domain, level=0, access=PUBLIC, occupancy=FREE)


def mvalue(payload: Payload, env=None, access: str = PUBLIC) -> MemoryValue:
    """Tag a payload with the evaluating environment's domain and level."""
    if env is None:
        return MemoryValue(payload, access=access)
    return MemoryValue(payload, domain=env.domain, level=env.level, access=access)


# ---------------------------------------------------------------------------
# Reserved block layout (top of the address space, highest index first)

RESERVED_LAYOUT = (
    "0xthrow",      # throw flag, Bool(false) at init
    "0xmodifier",   # modifier flag, Bool(false) at init
    "0xaddress",    # standard-library address struct type
    "0xmsg",        # standard-library msg struct type
    "msg",          # message instance block, populated per run
    "0xsend",       # built-in no-op send function
    "0xsend.ret",   # its return slot
    "0xtransfer",   # built-in no-op transfer event stub
    "0xtransfer.ret",
    "0xglobal",     # top-level scope domain identifier
)

RESERVED_BLOCKS = len(RESERVED_LAYOUT)


def reserved_addresses(size: int = DEFAULT_MEMORY_SIZE) -> dict[str, Address]:
    return {name: Address(size - 1 - i) for i, name in enumerate(RESERVED_LAYOUT)}


def is_reserved(addr: Address, size: int) -> bool:
    return size - RESERVED_BLOCKS <= addr.index < size


@dataclass(frozen=True)
class MemoryState:
    blocks: tuple = ()
    symbol_table: dict = field(default_factory=dict)
    alloc_floor: int = 0  # allocate() never hands out blocks below this index

    @property
    def size(self) -> int:
        return len(self.blocks)

    def addr_of(self, name: str) -> Address:
        return self.symbol_table[name]


# ---------------------------------------------------------------------------
# Operations

def init_mem(size: int, stdlib=()) -> MemoryState:
    """Build a fresh memory space and load the standard library into it.

    The library is a statement list; struct declarations land in their
    reserved struct-type blocks, function declarations become stored
    function bodies with initialized return slots, and variable
    declarations become occupied default blocks. The two flag blocks are
    always initialized to false.
    """
    if size < RESERVED_BLOCKS + 1:
        raise MemoryConfigError(
            f"memory size {size} is too small: the standard library needs "
            f"{RESERVED_BLOCKS} reserved blocks plus user space"
        )
    names = reserved_addresses(size)
    gdom = names["0xglobal"]
    blocks = [free_value(gdom) for _ in range(size)]

    def put(addr: Address, payload: Payload, access: str = PUBLIC):
        blocks[addr.index] = MemoryValue(payload, domain=gdom, level=0,
                                         access=access, occupancy=OCCUPY)

    put(names["0xthrow"], BoolPayload(False))
    put(names["0xmodifier"], BoolPayload(False))
    put(names["0xglobal"], Undef())

    from . import syntax  # deferred: the statement classes live one layer up

    for stmt in stdlib:
        if isinstance(stmt, syntax.StructDecl):
            put(stmt.type_addr, StructTypeInfo(stmt.type_addr, tuple(stmt.members)))
        elif isinstance(stmt, syntax.Fun):
            if stmt.name.index >= size or (stmt.ret_addr and stmt.ret_addr.index >= size):
                raise MemoryConfigError(f"library function {stmt.name} does not fit")
            put(stmt.name, FunctionInfo(tuple(stmt.returns), stmt.params,
                                        stmt.ret_addr, tuple(stmt.body)))
            if stmt.ret_addr is not None:
                put(stmt.ret_addr, Undef())
        elif isinstance(stmt, syntax.Var):
            decl = stmt.decl
            if decl.addr is None:
                raise MemoryConfigError("library variable without an address")
            put(decl.addr, Undef(), access=stmt.access or PUBLIC)
        else:
            raise MemoryConfigError(
                f"unsupported statement in standard library: {type(stmt).__name__}"
            )

    table = dict(names)
    return MemoryState(blocks=tuple(blocks), symbol_table=table)


def _in_range(sigma: MemoryState, addr: Address) -> bool:
    return 0 <= addr.index < sigma.size


def _validated(block: MemoryValue, env) -> bool:
    # Central chck predicate: occupied, and public or same-domain.
    if block.occupancy != OCCUPY:
        return False
    if block.access == PUBLIC:
        return True
    return env is not None and env.domain == block.domain


def read(sigma: MemoryState, addr: Address, mode: str = "dir",
         env=None, binfo=None) -> MemoryValue | None:
    if not _in_range(sigma, addr):
        return None
    block = sigma.blocks[addr.index]
    if mode == "dir":
        return block
    if mode == "chck":
        return block if _validated(block, env) else None
    raise ValueError(f"unknown access mode {mode!r}")


def write(sigma: MemoryState, addr: Address, value: MemoryValue, mode: str = "dir",
          env=None, binfo=None) -> MemoryState | None:
    if not _in_range(sigma, addr):
        return None
    if mode == "chck":
        old = sigma.blocks[addr.index]
        if not _validated(old, env):
            return None
        # A validated write updates the contents but keeps the block's
        # declared ownership so access control is stable across writers.
        value = replace(value, domain=old.domain, access=old.access)
    elif mode != "dir":
        raise ValueError(f"unknown access mode {mode!r}")
    blocks = sigma.blocks[:addr.index] + (value,) + sigma.blocks[addr.index + 1:]
    return replace(sigma, blocks=blocks)


def address_offset(op: str, offset: int, addr: Address,
                   size: int = DEFAULT_MEMORY_SIZE) -> Address | None:
    if op == "+":
        idx = addr.index + offset
    elif op == "-":
        idx = addr.index - offset
    else:
        raise ValueError(f"unknown offset op {op!r}")
    if 0 <= idx < size:
        return Address(idx)
    return None


def allocate(sigma: MemoryState, n: int) -> tuple[Address, MemoryState] | None:
    """First-fit scan for n contiguous free blocks, lowest index wins.

    The scan starts at the allocation floor, which the frontend raises
    past its name-bound region so dynamic allocations never collide with
    blocks awaiting declaration.
    """
    if n <= 0:
        return None
    run = 0
    for i in range(sigma.alloc_floor, sigma.size):
        if sigma.blocks[i].occupancy == FREE:
            run += 1
            if run == n:
                base = i - n + 1
                return Address(base), _mark_occupied(sigma, base, n)
        else:
            run = 0
    return None


def allocate_at(sigma: MemoryState, base: Address, n: int) -> MemoryState | None:
    """Reserve n contiguous blocks at a fixed base (named array storage)."""
    if n <= 0 or not _in_range(sigma, base) or base.index + n > sigma.size:
        return None
    for i in range(base.index, base.index + n):
        if sigma.blocks[i].occupancy != FREE:
            return None
    return _mark_occupied(sigma, base.index, n)


def _mark_occupied(sigma: MemoryState, base: int, n: int) -> MemoryState:
    blocks = list(sigma.blocks)
    for i in range(base, base + n):
        blocks[i] = replace(blocks[i], payload=Undef(), occupancy=OCCUPY)
    return replace(sigma, blocks=tuple(blocks))


def free_mem(sigma: MemoryState, addr: Address) -> MemoryState | None:
    if not _in_range(sigma, addr):
        return None
    if is_reserved(addr, sigma.size):
        return None
    block = sigma.blocks[addr.index]
    if block.occupancy != OCCUPY:
        return None
    return write(sigma, addr, free_value(block.domain), "dir")


# ---------------------------------------------------------------------------
# Dump rendering

def _render_scalar(v) -> str:
    if v is None:
        return "?"
    if is_symbolic(v):
        return f"~{v}"
    if isinstance(v, bool):
        return "true" if v else "false"
    return str(v)


def render_payload(p: Payload) -> str:
    if isinstance(p, Undef):
        return "undef"
    if isinstance(p, BoolPayload):
        return f"bool:{_render_scalar(p.bit)}"
    if isinstance(p, IntPayload):
        sign = "i" if p.signed else "u"
        return f"int:{sign}{p.width}:{_render_scalar(p.value)}"
    if isinstance(p, Fid):
        fun = p.fun.index if p.fun else "-"
        receiver = p.receiver.index if p.receiver else "-"
        nargs = len(p.args) if p.args is not None else "-"
        return f"fid:{fun}:receiver={receiver}:args={nargs}"
    if isinstance(p, ContractInfo):
        mem = ",".join(f"{n}@{a.index}" for n, a in p.members)
        inh = ",".join(str(a.index) for a in p.inherits)
        return f"contract:{p.name.index}:members[{mem}]:inherits[{inh}]"
    if isinstance(p, StructTypeInfo):
        mem = ",".join(n for n, _t in p.members)
        return f"struct-type:{p.type_addr.index}:fields[{mem}]"
    if isinstance(p, StructInstance):
        ty = p.type_addr.index if p.type_addr else "-"
        mem = ",".join(render_payload(m) for m in p.members)
        return f"struct:{ty}:{{{mem}}}"
    if isinstance(p, MapNode):
        if p.kv is None:
            kv = "-"
        else:
            kv = f"{render_payload(p.kv[0])}=>{render_payload(p.kv[1])}"
        nxt = p.next.index if p.next else "-"
        return f"map-node:init={p.init.index}:kv[{kv}]:next={nxt}"
    if isinstance(p, FunctionInfo):
        ret = p.ret_addr.index if p.ret_addr else "-"
        npar = len(p.params) if p.params is not None else "*"
        return f"function:returns={len(p.returns)}:params={npar}:ret@{ret}:body={len(p.body)}"
    if isinstance(p, StatementBody):
        return f"stmts:{len(p.body)}"
    if isinstance(p, ArrayGroup):
        return f"array-group:dim={p.dim}:group={p.group}"
    return f"<{type(p).__name__}>"


def dump(sigma: MemoryState) -> str:
    lines = []
    for i, b in enumerate(sigma.blocks):
        lines.append(
            f"{i}\t{b.occupancy}\t{b.access}\t{b.domain.index}\t{render_payload(b.payload)}"
        )
    return "\n".join(lines)
