"""Top-level interpreter, step debugger, path exploration and
Hoare-triple checking.

The interpreter drives the statement layer one dispatch at a time:
check the environment, split the head off the remaining program, execute
it, recurse on the tail. Two independent budgets bound a run: gas is
spent per dispatched statement, the recursion budget K per nested value
or expression evaluation.

Symbolic execution forks a path wherever a branch condition evaluates to
a symbolic tree. Constraints are discharged by a bounded enumerator over
each symbol's declared finite domain; no external solver is involved.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace

from . import memory as gm
from .memory import MemoryState
from .stmts import ExecContext, env_check, exec_statement
from .symbolic import SymEvalError, SymExpr, collect_symbols, is_symbolic
from .syntax import LStatement
from .values import Env


@dataclass(frozen=True)
class SymbolicValue:
    """A named unknown with a finite declared domain."""
    name: str
    kind: str = "int"       # "int" or "bool"
    width: int = 64
    signed: bool = False
    lo: int = 0
    hi: int = 0             # inclusive upper bound for int symbols

    def domain(self):
        if self.kind == "bool":
            return (False, True)
        return tuple(range(self.lo, self.hi + 1))


@dataclass(frozen=True)
class Constraint:
    expr: SymExpr
    expected: bool = True

    def holds(self, assignment) -> bool:
        try:
            return bool(self.expr.eval(assignment)) == self.expected
        except SymEvalError:
            return False

    def __str__(self):
        return f"{self.expr}={'T' if self.expected else 'F'}"


@dataclass
class PathState:
    """One execution branch: state, environments, constraints, program."""
    sigma: MemoryState | None
    env: Env
    fenv: Env
    condition: tuple = ()
    remaining: tuple = ()
    ctx: ExecContext = field(default_factory=ExecContext)
    note: str = ""

    def condition_key(self) -> tuple:
        return tuple(str(c) for c in self.condition)


@dataclass
class Verdict:
    status: str                 # verified | refuted | exhausted | error
    witness: dict | None = None
    path: PathState | None = None
    diagnostic: str = ""
    paths: tuple = ()


@dataclass
class SegmentSummary:
    """A proven program segment replaced by its state transformer."""
    segment: tuple
    transform: object  # Callable[[MemoryState], MemoryState | None]
    label: str = "summary"


@dataclass
class _SummaryStep(LStatement):
    summary: SegmentSummary = None


# ---------------------------------------------------------------------------
# Concrete whole-run execution

def interpret(K: int, sigma: MemoryState | None, env: Env, fenv: Env, args,
              prog, ctx: ExecContext | None = None) -> MemoryState | None:
    """Run a typechecked program with concrete inputs.

    Per step: validate the environment and state presence, split off the
    head, execute it, continue on the tail. An invalid environment
    returns the incoming optional state; unmatched syntax is absent. The
    state at entry is snapshotted as the restore point for throw.
    """
    if ctx is None:
        ctx = ExecContext(sigma_init=sigma)
    elif ctx.sigma_init is None:
        ctx.sigma_init = sigma
    remaining = tuple(prog)
    while True:
        # Step 0: environment and state validity.
        if sigma is None:
            return None
        if not remaining or not env_check(env, fenv):
            return sigma
        # Step 1: split head from tail; the dispatch costs one gas unit.
        head, tail = remaining[0], remaining[1:]
        env = env.spend()
        # Step 2: execute the head statement.
        res = _dispatch(K, sigma, args, env, fenv, head, tail, ctx)
        if res.error is not None:
            return None
        if res.symbolic_cond is not None:
            ctx.fail("symbolic branch condition reached in concrete execution")
            return None
        # Step 3: continue with the rewritten remainder.
        sigma, env, remaining = res.sigma, res.env, res.remaining


def _dispatch(K, sigma, args, env, fenv, head, tail, ctx, assume=None):
    if isinstance(head, _SummaryStep):
        out = head.summary.transform(sigma)
        from .stmts import StepResult
        if out is None:
            ctx.fail(f"summary {head.summary.label} rejected the state")
            return StepResult(None, env, tuple(tail), error="summary failed")
        return StepResult(out, env, tuple(tail))
    return exec_statement(K, sigma, args, env, fenv, head, tail, ctx, assume)


# ---------------------------------------------------------------------------
# Step debugger

def step(ps: PathState, K: int = 1000, emit=None) -> PathState:
    """Execute exactly one statement of a path.

    Stuck situations (invalid environment, failed dispatch, symbolic
    branch) leave the remaining program in place and set a diagnostic
    note. When ``emit`` is given the new memory dump is emitted after
    the step.
    """
    if not ps.remaining:
        return replace(ps, note="finished")
    if ps.sigma is None:
        return replace(ps, note="stuck: no memory state")
    if not env_check(ps.env, ps.fenv):
        reason = "gas exhausted" if ps.env.gas <= 0 else "environment check failed"
        return replace(ps, note=f"halted: {reason}")
    env = ps.env.spend()
    res = _dispatch(K, ps.sigma, None, env, ps.fenv, ps.remaining[0],
                    ps.remaining[1:], ps.ctx)
    if res.error is not None:
        return replace(ps, note=f"stuck: {res.error}")
    if res.symbolic_cond is not None:
        return replace(ps, note="stuck: symbolic branch condition")
    out = replace(ps, sigma=res.sigma, env=res.env, remaining=res.remaining,
                  note="throw" if res.halted else "")
    if emit is not None and out.sigma is not None:
        emit(gm.dump(out.sigma))
    return out


# ---------------------------------------------------------------------------
# Bounded constraint enumeration

def assignments(symbols):
    names = [s.name for s in symbols]
    domains = [s.domain() for s in symbols]
    for combo in itertools.product(*domains):
        yield dict(zip(names, combo))


def satisfying_assignments(condition, symbols):
    for asg in assignments(symbols):
        if all(c.holds(asg) for c in condition):
            yield asg


def satisfiable(condition, symbols) -> dict | None:
    for asg in satisfying_assignments(condition, symbols):
        return asg
    return None


def concretize_payload(p, assignment):
    if isinstance(p, gm.BoolPayload) and is_symbolic(p.bit):
        return gm.BoolPayload(bool(p.bit.eval(assignment)))
    if isinstance(p, gm.IntPayload) and is_symbolic(p.value):
        return gm.IntPayload(p.value.eval(assignment), p.width, p.signed)
    if isinstance(p, gm.StructInstance):
        return gm.StructInstance(p.type_addr, tuple(
            concretize_payload(m, assignment) for m in p.members))
    if isinstance(p, gm.MapNode) and p.kv is not None:
        k, v = p.kv
        return replace(p, kv=(concretize_payload(k, assignment),
                              concretize_payload(v, assignment)))
    if isinstance(p, gm.Fid) and p.args:
        return replace(p, args=tuple(
            replace(a, payload=concretize_payload(a.payload, assignment))
            for a in p.args))
    return p


def concretize(sigma: MemoryState, assignment) -> MemoryState:
    blocks = tuple(replace(b, payload=concretize_payload(b.payload, assignment))
                   for b in sigma.blocks)
    return replace(sigma, blocks=blocks)


def state_has_symbols(sigma: MemoryState) -> bool:
    def probe(p):
        if isinstance(p, gm.BoolPayload):
            return is_symbolic(p.bit)
        if isinstance(p, gm.IntPayload):
            return is_symbolic(p.value)
        if isinstance(p, gm.StructInstance):
            return any(probe(m) for m in p.members)
        if isinstance(p, gm.MapNode) and p.kv is not None:
            return probe(p.kv[0]) or probe(p.kv[1])
        if isinstance(p, gm.Fid) and p.args:
            return any(probe(a.payload) for a in p.args)
        return False
    return any(probe(b.payload) for b in sigma.blocks)


# ---------------------------------------------------------------------------
# Path exploration

def explore(K: int, initial: PathState, symbols) -> list[PathState]:
    """Depth-first exploration of every feasible branch.

    At a symbolic branch the path forks into assumed-true and
    assumed-false children; a child whose condition has no satisfying
    assignment over the declared domains is pruned. Results are merged
    in path-condition lexicographic order.
    """
    terminals: list[PathState] = []
    stack = [initial]
    while stack:
        ps = stack.pop()
        while True:
            if ps.sigma is None:
                terminals.append(replace(ps, note=ps.note or "error"))
                break
            if not ps.remaining:
                terminals.append(replace(ps, note=ps.note or "completed"))
                break
            if not env_check(ps.env, ps.fenv):
                kind = "exhausted" if ps.env.gas <= 0 else "completed"
                terminals.append(replace(ps, note=kind))
                break
            env = ps.env.spend()
            res = _dispatch(K, ps.sigma, None, env, ps.fenv, ps.remaining[0],
                            ps.remaining[1:], ps.ctx)
            if res.symbolic_cond is not None:
                tree = res.symbolic_cond
                for branch in (False, True):
                    cond2 = ps.condition + (Constraint(tree, branch),)
                    if satisfiable(cond2, symbols) is None:
                        continue
                    forked = _dispatch(K, ps.sigma, None, env, ps.fenv,
                                       ps.remaining[0], ps.remaining[1:],
                                       ps.ctx, assume=branch)
                    child = replace(ps, sigma=forked.sigma, env=forked.env,
                                    remaining=forked.remaining, condition=cond2,
                                    note="throw" if forked.halted else "")
                    stack.append(child)
                break
            if res.error is not None:
                terminals.append(replace(ps, sigma=None,
                                         note=f"error: {res.error}"))
                break
            ps = replace(ps, sigma=res.sigma, env=res.env,
                         remaining=res.remaining,
                         note="throw" if res.halted else ps.note)
    terminals.sort(key=lambda p: p.condition_key())
    return terminals


# ---------------------------------------------------------------------------
# Hoare-triple verification

def verify_triple(pre, prog, post, mode: str = "static", symbols=(),
                  require=(), K: int = 1000, gas: int = 10000,
                  concolic: dict | None = None, summaries=()) -> Verdict:
    """Check {pre} prog {post} by running every feasible path.

    ``pre`` builds the initial world: called with an assignment it must
    produce a concrete (sigma, env, fenv, ctx) tuple; called with None
    it produces the same world with symbolic payloads standing in for
    the declared symbols. ``post`` is a predicate over (final state,
    initial state). ``require`` lists constraint trees assumed true.

    Modes: static explores all symbol assignments, concolic pins the
    provided concrete assignment, selective first substitutes validated
    segment summaries for their statements.
    """
    symbols = tuple(symbols)
    known = {s.name for s in symbols}
    unknown = set()
    for r in require:
        unknown |= collect_symbols(r) - known
    if unknown:
        return Verdict("error",
                       diagnostic=f"precondition names undeclared symbols: {sorted(unknown)}")
    base_condition = tuple(Constraint(r, True) for r in require)
    if symbols and satisfiable(base_condition, symbols) is None:
        return Verdict("verified", diagnostic="vacuous: precondition unsatisfiable")

    work_prog = tuple(prog)
    if mode == "selective":
        work_prog = _apply_summaries(work_prog, summaries, pre, post, symbols,
                                     base_condition, K, gas)
        if isinstance(work_prog, Verdict):
            return work_prog

    if mode == "concolic":
        if concolic is None:
            concolic = {}
        missing = [s.name for s in symbols if s.name not in concolic]
        if missing:
            return Verdict("error", diagnostic=f"concolic values missing: {missing}")
        if not all(c.holds(concolic) for c in base_condition):
            return Verdict("error", diagnostic="concolic assignment violates the precondition")
        sigma, env, fenv, ctx = pre(concolic)
        if ctx.sigma_init is None:
            ctx.sigma_init = sigma
        initial = PathState(sigma, env, fenv, (), work_prog, ctx)
        paths = explore(K, initial, ())
        return _judge(paths, post, (), pre, prog, K)

    sigma, env, fenv, ctx = pre(None)
    if ctx.sigma_init is None:
        ctx.sigma_init = sigma
    initial = PathState(sigma, env, fenv, base_condition, work_prog, ctx)
    paths = explore(K, initial, symbols)
    return _judge(paths, post, symbols, pre, prog, K)


def _judge(paths, post, symbols, pre, original_prog, K) -> Verdict:
    for p in paths:
        if p.note.startswith("error"):
            return Verdict("error", path=p, diagnostic=p.note, paths=tuple(paths))
        if p.note == "exhausted":
            return Verdict("exhausted", path=p, diagnostic="gas or K budget exhausted",
                           paths=tuple(paths))
    for p in paths:
        init = p.ctx.sigma_init
        if not symbols or (not state_has_symbols(p.sigma)
                           and (init is None or not state_has_symbols(init))):
            asgs = [dict()] if not symbols else [satisfiable(p.condition, symbols) or {}]
        else:
            asgs = list(satisfying_assignments(p.condition, symbols))
        for asg in asgs:
            final_c = concretize(p.sigma, asg)
            init_c = concretize(init, asg) if init is not None else None
            if not post(final_c, init_c):
                witness = _confirm_witness(asg, pre, original_prog, post, K, p)
                return Verdict("refuted", witness=witness, path=p,
                               diagnostic=f"postcondition fails under {asg}",
                               paths=tuple(paths))
    return Verdict("verified", paths=tuple(paths))


def _confirm_witness(asg, pre, prog, post, K, path) -> dict:
    """Replay the witness concretely; annotate if the replay disagrees."""
    witness = dict(asg)
    try:
        sigma, env, fenv, ctx = pre(asg if asg else None)
        final = interpret(K, sigma, env, fenv, None, prog, ctx)
        if final is not None and post(final, ctx.sigma_init):
            witness["_replay_mismatch"] = True
    except Exception as exc:  # replay must never mask the refutation
        witness["_replay_error"] = str(exc)
    return witness


def _apply_summaries(prog, summaries, pre, post, symbols, condition, K, gas):
    """Substitute each summary for its segment after differential validation."""
    out = list(prog)
    for summary in summaries:
        seg = tuple(summary.segment)
        idx = _find_segment(out, seg)
        if idx is None:
            return Verdict("error", diagnostic=f"summary segment not found: {summary.label}")
        ok = _validate_summary(summary, pre, symbols, condition, K)
        if not ok:
            return Verdict("error", diagnostic=f"summary failed validation: {summary.label}")
        out[idx:idx + len(seg)] = [_SummaryStep(summary)]
    return tuple(out)


def _find_segment(prog, seg):
    for i in range(len(prog) - len(seg) + 1):
        if tuple(prog[i:i + len(seg)]) == seg:
            return i
    return None


def _validate_summary(summary, pre, symbols, condition, K, samples: int = 3) -> bool:
    taken = 0
    for asg in satisfying_assignments(condition, symbols) if symbols else [dict()]:
        sigma, env, fenv, ctx = pre(asg if symbols else None)
        direct = interpret(K, sigma, env, fenv, None, summary.segment, ctx)
        via = summary.transform(sigma)
        if direct is None and via is None:
            pass
        elif direct is None or via is None or direct.blocks != via.blocks:
            return False
        taken += 1
        if taken >= samples:
            break
    return True


# ---------------------------------------------------------------------------
# Common postconditions

def throw_state_post(final: MemoryState, initial: MemoryState | None) -> bool:
    """Final memory is the entry snapshot plus a raised throw flag."""
    if final is None or initial is None:
        return False
    names = gm.reserved_addresses(final.size)
    idx = names["0xthrow"].index
    flag = final.blocks[idx].payload
    if not (isinstance(flag, gm.BoolPayload) and flag.bit is True):
        return False
    for i, (a, b) in enumerate(zip(final.blocks, initial.blocks)):
        if i == idx:
            continue
        if a != b:
            return False
    return True


def block_equals_post(addr: gm.Address, payload) -> "callable":
    def post(final: MemoryState, initial: MemoryState | None) -> bool:
        return final is not None and final.blocks[addr.index].payload == payload
    return post


def unchanged_post(addr: gm.Address):
    def post(final: MemoryState, initial: MemoryState | None) -> bool:
        if final is None or initial is None:
            return False
        return final.blocks[addr.index] == initial.blocks[addr.index]
    return post
