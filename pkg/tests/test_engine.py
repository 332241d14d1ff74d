"""Engine: whole runs, stepping, path exploration, triple checking."""

import random
from dataclasses import replace

import pytest

from minisol import memory as gm
from minisol.engine import (
    PathState,
    SegmentSummary,
    SymbolicValue,
    concretize,
    explore,
    interpret,
    satisfying_assignments,
    step,
    throw_state_post,
    verify_triple,
)
from minisol.memory import Address, BoolPayload, IntPayload, MemoryValue
from minisol.proggen import generate_program
from minisol.stdlib import fresh_memory
from minisol.stmts import ExecContext, init_var
from minisol.symbolic import SymOp, SymVar
from minisol.syntax import (
    Assign,
    Ebop,
    Econst,
    Evar,
    If,
    LoopWhile,
    Snil,
    Tbool,
    Throw,
    Tuint,
    Vbool,
    Vint,
)
from minisol.values import BlockInfo, initial_env

X = Address(0)
B = Address(1)


def poke(sigma, addr, payload):
    return gm.write(sigma, addr,
                    replace(sigma.blocks[addr.index], payload=payload), "dir")


def declared_world(gas=1000, mem=100):
    sigma = fresh_memory(mem)
    names = gm.reserved_addresses(mem)
    env = initial_env(gas, names["0xglobal"])
    binfo = BlockInfo()
    sigma = init_var(sigma, env, binfo, "public", Tuint(), X)
    sigma = init_var(sigma, env, binfo, "public", Tbool(), B)
    return sigma, env, names


class TestInterpret:
    def test_empty_program_returns_state(self):
        sigma, env, _ = declared_world()
        assert interpret(100, sigma, env, env, None, []) is sigma

    def test_absent_state_propagates(self):
        _, env, _ = declared_world()
        assert interpret(100, None, env, env, None, [Snil()]) is None

    @pytest.mark.parametrize("g", [1, 10, 1000])
    def test_spin_halts_after_exactly_g_statements(self, g):
        # Counted with an instrumented context: the dispatch loop pays
        # one unit of gas per executed statement.
        sigma, _, names = declared_world()
        env = initial_env(g, names["0xglobal"])
        out = interpret(1000, sigma, env, env, None,
                     [LoopWhile(Econst(Vbool(True)), (Snil(),))])
        assert out.blocks == sigma.blocks
        # dispatch count equals the gas budget: with g+1 the state is
        # also unchanged but one more skip has executed; observe the
        # boundary via a terminating counter program instead
        counter = [Assign(Evar(X, Tuint()),
                          Ebop("+", Evar(X, Tuint()), Econst(Vint(1))))] * (g + 2)
        seeded = poke(sigma, X, IntPayload(0))
        out2 = interpret(1000, seeded, env, env, None, counter)
        assert out2.blocks[X.index].payload == IntPayload(g)

    def test_symbolic_branch_in_concrete_run_is_absent(self):
        sigma, env, _ = declared_world()
        sigma = poke(sigma, B, BoolPayload(SymVar("b")))
        ctx = ExecContext(sigma_init=sigma)
        out = interpret(100, sigma, env, env, None,
                     [If(Evar(B, Tbool()), (Snil(),), (Snil(),))], ctx)
        assert out is None
        assert ctx.diagnostics


class TestStep:
    def test_step_over_snil_costs_one_gas(self):
        sigma, env, _ = declared_world(gas=10)
        ps = PathState(sigma, env, env, (), (Snil(),), ExecContext(sigma_init=sigma))
        out = step(ps)
        assert out.env.gas == 9
        assert out.sigma.blocks == sigma.blocks
        assert out.remaining == ()

    def test_step_over_assign_dump_shows_written_block(self):
        sigma, env, _ = declared_world()
        ps = PathState(sigma, env, env, (),
                       (Assign(Evar(X, Tuint()), Econst(Vint(5))),),
                       ExecContext(sigma_init=sigma))
        dumps = []
        out = step(ps, emit=dumps.append)
        line = dumps[0].splitlines()[X.index]
        assert line.split("\t")[4] == "int:u64:5"
        assert gm.read(out.sigma, X, "dir").payload == IntPayload(5)

    def test_finished_and_stuck_notes(self):
        sigma, env, _ = declared_world()
        done = PathState(sigma, env, env, (), (), ExecContext())
        assert step(done).note == "finished"
        bad = PathState(sigma, env, env, (),
                        (Assign(Evar(Address(50), Tuint()), Econst(Vint(1))),),
                        ExecContext())
        out = step(bad)
        assert out.note.startswith("stuck")
        assert out.remaining == bad.remaining  # preserved for inspection

    def test_returned_body_halts_via_env_check(self):
        # After a return the domain is switched; stepping the leftover
        # body statements halts instead of executing them.
        from minisol.syntax import Return

        sigma, env, names = declared_world()
        fun, lam = Address(40), Address(41)
        sigma2 = poke(sigma, fun, gm.FunctionInfo((Tuint(),), (), lam, ()))
        sigma2 = replace(sigma2, blocks=sigma2.blocks[:lam.index]
                         + (MemoryValue(gm.Undef(), domain=env.domain,
                                        occupancy=gm.OCCUPY),)
                         + sigma2.blocks[lam.index + 1:])
        inner_env = replace(env, level=0, domain=fun)
        ps = PathState(sigma2, inner_env, env, (),
                       (Return(Econst(Vint(1))),
                        Assign(Evar(X, Tuint()), Econst(Vint(9)))),
                       ExecContext(sigma_init=sigma2))
        after_return = step(ps)
        assert after_return.env.domain == env.domain
        assert after_return.sigma.blocks[lam.index].payload == IntPayload(1)
        halted = step(after_return)
        assert halted.note.startswith("halted")
        assert halted.sigma.blocks[X.index].payload != IntPayload(9)


def sym_bool_world():
    sigma, env, names = declared_world()
    sigma = poke(sigma, B, BoolPayload(SymVar("b")))
    ctx = ExecContext(sigma_init=sigma)
    return sigma, env, ctx


class TestExplore:
    def test_single_symbolic_bool_two_paths(self):
        sigma, env, ctx = sym_bool_world()
        prog = (If(Evar(B, Tbool()),
                   (Assign(Evar(X, Tuint()), Econst(Vint(1))),),
                   (Assign(Evar(X, Tuint()), Econst(Vint(2))),)),)
        paths = explore(100, PathState(sigma, env, env, (), prog, ctx),
                        [SymbolicValue("b", "bool")])
        assert len(paths) == 2
        values = sorted(p.sigma.blocks[X.index].payload.value for p in paths)
        assert values == [1, 2]

    def test_inconsistent_branch_pruned(self):
        sigma, env, ctx = sym_bool_world()
        inner = (If(Evar(B, Tbool()), (Assign(Evar(X, Tuint()), Econst(Vint(1))),),
                    (Assign(Evar(X, Tuint()), Econst(Vint(2))),)),)
        prog = (If(Evar(B, Tbool()), inner, (Snil(),)),)
        paths = explore(100, PathState(sigma, env, env, (), prog, ctx),
                        [SymbolicValue("b", "bool")])
        # true/true and false are feasible; true/false contradicts
        assert len(paths) == 2

    def test_partition_of_finite_domains(self):
        # Union of path conditions covers the declared domain exactly once.
        sigma, env, names = declared_world()
        sigma = poke(sigma, X, IntPayload(SymVar("n")))
        ctx = ExecContext(sigma_init=sigma)
        prog = (If(Ebop("<", Evar(X, Tuint()), Econst(Vint(3))),
                   (Snil(),),
                   (If(Ebop("<", Evar(X, Tuint()), Econst(Vint(6))),
                       (Snil(),), (Snil(),)),)),)
        symbols = [SymbolicValue("n", "int", lo=0, hi=7)]
        paths = explore(100, PathState(sigma, env, env, (), prog, ctx), symbols)
        assert len(paths) == 3
        cover = {}
        for p in paths:
            for asg in satisfying_assignments(p.condition, symbols):
                key = asg["n"]
                cover[key] = cover.get(key, 0) + 1
        assert cover == {n: 1 for n in range(8)}

    def test_gas_exhaustion_yields_exhausted_path(self):
        sigma, env, names = declared_world()
        tight = initial_env(3, names["0xglobal"])
        prog = (LoopWhile(Econst(Vbool(True)), (Snil(),)),)
        paths = explore(100, PathState(sigma, tight, tight, (), prog,
                                       ExecContext(sigma_init=sigma)), ())
        assert [p.note for p in paths] == ["exhausted"]

    def test_path_soundness_witness_replay(self):
        # Any explored path's witness, run concretely, reproduces the
        # path's concretized final state.
        sigma, env, names = declared_world()
        sigma0 = poke(sigma, X, IntPayload(SymVar("n")))
        ctx = ExecContext(sigma_init=sigma0)
        prog = (If(Ebop("<", Evar(X, Tuint()), Econst(Vint(4))),
                   (Assign(Evar(X, Tuint()),
                           Ebop("+", Evar(X, Tuint()), Econst(Vint(10)))),),
                   (Snil(),)),)
        symbols = [SymbolicValue("n", "int", lo=0, hi=7)]
        paths = explore(100, PathState(sigma0, env, env, (), prog, ctx), symbols)
        assert len(paths) == 2
        for p in paths:
            for asg in satisfying_assignments(p.condition, symbols):
                concrete0 = poke(sigma, X, IntPayload(asg["n"]))
                replay = interpret(100, concrete0, env, env, None, prog,
                                ExecContext(sigma_init=concrete0))
                assert replay.blocks == concretize(p.sigma, asg).blocks


class TestDeterminism:
    def test_repeated_runs_bit_identical(self):
        rng = random.Random(99)
        for _ in range(25):
            prog = generate_program(rng.randrange(1 << 30), length=5)
            sigma = fresh_memory(64)
            env = initial_env(500, sigma.addr_of("0xglobal"))
            a = interpret(200, sigma, env, env, None, prog,
                       ExecContext(sigma_init=sigma))
            b = interpret(200, sigma, env, env, None, prog,
                       ExecContext(sigma_init=sigma))
            if a is None:
                assert b is None
            else:
                assert gm.dump(a) == gm.dump(b)


def triple_world(plant_bug: bool):
    """{x = n} prog {x <= 5} with prog clamping x; the planted bug uses
    an off-by-one clamp bound."""
    bound = 6 if plant_bug else 5

    def pre(assignment):
        sigma, env, names = declared_world()
        value = IntPayload(SymVar("n")) if assignment is None \
            else IntPayload(assignment["n"])
        sigma = poke(sigma, X, value)
        return sigma, env, env, ExecContext()

    prog = (If(Ebop(">", Evar(X, Tuint()), Econst(Vint(bound))),
               (Assign(Evar(X, Tuint()), Econst(Vint(5))),),
               (Snil(),)),)

    def post(final, initial):
        v = final.blocks[X.index].payload.value
        return v is not None and v <= 5

    return pre, prog, post


class TestVerifyTriple:
    def test_snil_preserves_state_verified(self):
        def pre(_asg):
            sigma, env, _ = declared_world()
            return sigma, env, env, ExecContext()

        verdict = verify_triple(pre, (Snil(),),
                                lambda final, init: final.blocks == init.blocks)
        assert verdict.status == "verified"

    def test_clamp_verified_over_domain(self):
        pre, prog, post = triple_world(plant_bug=False)
        verdict = verify_triple(pre, prog, post, symbols=[
            SymbolicValue("n", "int", lo=0, hi=9)])
        assert verdict.status == "verified"
        assert len(verdict.paths) == 2

    def test_planted_off_by_one_refuted_with_witness(self):
        pre, prog, post = triple_world(plant_bug=True)
        verdict = verify_triple(pre, prog, post, symbols=[
            SymbolicValue("n", "int", lo=0, hi=9)])
        assert verdict.status == "refuted"
        assert verdict.witness == {"n": 6}
        # the witness reproduces the violation concretely
        pre_b, prog_b, post_b = triple_world(plant_bug=True)
        sigma, env, fenv, ctx = pre_b(verdict.witness)
        final = interpret(100, sigma, env, fenv, None, prog_b, ctx)
        assert not post_b(final, ctx.sigma_init)

    def test_concolic_mode_single_path(self):
        pre, prog, post = triple_world(plant_bug=False)
        verdict = verify_triple(pre, prog, post, mode="concolic",
                                symbols=[SymbolicValue("n", "int", lo=0, hi=9)],
                                concolic={"n": 3})
        assert verdict.status == "verified"
        assert len(verdict.paths) == 1

    def test_concolic_missing_value_is_error(self):
        pre, prog, post = triple_world(plant_bug=False)
        verdict = verify_triple(pre, prog, post, mode="concolic",
                                symbols=[SymbolicValue("n", "int", lo=0, hi=9)],
                                concolic={})
        assert verdict.status == "error"

    def test_require_constraints_prune_paths(self):
        pre, prog, post = triple_world(plant_bug=True)
        # under n <= 5 the buggy clamp is unreachable and the triple holds
        verdict = verify_triple(pre, prog, post,
                                symbols=[SymbolicValue("n", "int", lo=0, hi=9)],
                                require=[SymOp("<=", (SymVar("n"),
                                                      __import__("minisol.symbolic", fromlist=["SymConst"]).SymConst(5)))])
        assert verdict.status == "verified"

    def test_selective_mode_summary_substitution(self):
        # Replace a straight-line reset segment with its proven state
        # transformer; the remaining branch still explores both arms.
        def pre(assignment):
            sigma, env, _ = declared_world()
            value = IntPayload(SymVar("n")) if assignment is None \
                else IntPayload(assignment["n"])
            sigma = poke(sigma, X, value)
            return sigma, env, env, ExecContext()

        segment = (Assign(Evar(X, Tuint()), Econst(Vint(5))),)
        prog = segment + (If(Ebop(">", Evar(X, Tuint()), Econst(Vint(5))),
                             (Throw(),), (Snil(),)),)

        def post(final, initial):
            return final.blocks[X.index].payload == IntPayload(5)

        summary = SegmentSummary(segment=segment,
                                 transform=lambda s: poke(s, X, IntPayload(5)),
                                 label="reset")
        verdict = verify_triple(pre, prog, post, mode="selective",
                                symbols=[SymbolicValue("n", "int", lo=0, hi=9)],
                                summaries=[summary])
        assert verdict.status == "verified"

    def test_selective_mode_rejects_wrong_summary(self):
        def pre(assignment):
            sigma, env, _ = declared_world()
            value = IntPayload(SymVar("n")) if assignment is None \
                else IntPayload(assignment["n"])
            sigma = poke(sigma, X, value)
            return sigma, env, env, ExecContext()

        segment = (Assign(Evar(X, Tuint()), Econst(Vint(5))),)
        summary = SegmentSummary(segment=segment,
                                 transform=lambda s: poke(s, X, IntPayload(99)),
                                 label="bogus")
        verdict = verify_triple(pre, segment, lambda f, i: True,
                                mode="selective",
                                symbols=[SymbolicValue("n", "int", lo=0, hi=9)],
                                summaries=[summary])
        assert verdict.status == "error"
        assert "validation" in verdict.diagnostic


class TestThrowStatePost:
    def test_throw_program_satisfies_throw_post(self):
        sigma, env, names = declared_world()
        ctx = ExecContext()

        def pre(_asg):
            return sigma, env, env, ctx

        verdict = verify_triple(pre, (Throw(),), throw_state_post)
        assert verdict.status == "verified"

    def test_non_throw_program_fails_throw_post(self):
        sigma, env, _ = declared_world()

        def pre(_asg):
            return sigma, env, env, ExecContext()

        verdict = verify_triple(pre, (Snil(),), throw_state_post)
        assert verdict.status == "refuted"


class TestSymbolicLoops:
    def test_counted_loop_over_symbolic_bound_partitions_domain(self):
        # while (x < n) { x = x + 1 } with symbolic n: one terminal path
        # per distinct iteration count, every path ending with x == n.
        sigma, env, names = declared_world(gas=200)
        sigma = poke(sigma, X, IntPayload(0))
        bound = Address(2)
        from minisol.stmts import init_var
        from minisol.values import BlockInfo
        sigma = init_var(sigma, initial_env(10, names["0xglobal"]), BlockInfo(),
                         "public", Tuint(), bound)
        sigma = poke(sigma, bound, IntPayload(SymVar("n")))
        ctx = ExecContext(sigma_init=sigma)
        prog = (LoopWhile(Ebop("<", Evar(X, Tuint()), Evar(bound, Tuint())),
                          (Assign(Evar(X, Tuint()),
                                  Ebop("+", Evar(X, Tuint()), Econst(Vint(1)))),)),)
        symbols = [SymbolicValue("n", "int", lo=0, hi=3)]
        paths = explore(200, PathState(sigma, env, env, (), prog, ctx), symbols)
        assert len(paths) == 4
        seen = set()
        for p in paths:
            assignments = list(satisfying_assignments(p.condition, symbols))
            assert len(assignments) == 1  # full partition, one n per path
            n = assignments[0]["n"]
            assert p.sigma.blocks[X.index].payload == IntPayload(n)
            seen.add(n)
        assert seen == {0, 1, 2, 3}

    def test_undeclared_symbol_in_require_is_error(self):
        def pre(_asg):
            sigma, env, _ = declared_world()
            return sigma, env, env, ExecContext()

        verdict = verify_triple(pre, (Snil(),), lambda f, i: True,
                                symbols=[SymbolicValue("n", "int", lo=0, hi=1)],
                                require=[SymVar("mystery")])
        assert verdict.status == "error"
        assert "mystery" in verdict.diagnostic


class TestRobustness:
    def test_mixed_random_programs_never_raise(self):
        # Interpreter totality over well-typed inputs: every run returns
        # a state or a classified absent, never an exception.
        from minisol.proggen import INT_T, ProgramGen
        from minisol.syntax import LoopFor, TypeContext, typecheck_stmt

        rng = random.Random(424242)
        for case in range(150):
            gen = ProgramGen(random.Random(rng.randrange(1 << 30)))
            prog = gen.declarations() + gen.stmt_list(4, 4)
            if rng.random() < 0.4:
                # append a counted for loop over the first variable
                v = gen.int_vars[0]
                prog.append(LoopFor(
                    Ebop("<", Evar(v, INT_T), Econst(Vint(2, 64, True))),
                    None,
                    tuple(gen.stmt_list(2, 2)),
                    Assign(Evar(v, INT_T),
                           Ebop("+", Evar(v, INT_T), Econst(Vint(1, 64, True))))))
            typecheck_stmt(prog, TypeContext())
            sigma = fresh_memory(64)
            env = initial_env(800, sigma.addr_of("0xglobal"))
            out = interpret(250, sigma, env, env, None, prog,
                            ExecContext(sigma_init=sigma))
            assert out is None or out.size == 64
