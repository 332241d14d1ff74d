"""Block store: initialization, validated access, allocation, dumps."""

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from minisol import memory as gm
from minisol.memory import (
    Address,
    BoolPayload,
    IntPayload,
    MemoryConfigError,
    MemoryValue,
    StructTypeInfo,
    Undef,
)
from minisol.stdlib import fresh_memory, standard_library
from minisol.values import initial_env


def mv(payload, domain=Address(0), access="public"):
    return MemoryValue(payload, domain=domain, level=0, access=access,
                       occupancy=gm.OCCUPY)


class TestInitMem:
    def test_default_size_is_100_blocks(self, sigma):
        assert sigma.size == 100

    def test_user_blocks_start_free_and_undef(self, sigma):
        for block in sigma.blocks[: sigma.size - gm.RESERVED_BLOCKS]:
            assert block.occupancy == gm.FREE
            assert isinstance(block.payload, Undef)

    def test_stdlib_address_struct(self, sigma, names):
        block = sigma.blocks[names["0xaddress"].index]
        assert isinstance(block.payload, StructTypeInfo)
        assert [n for n, _t in block.payload.members] == \
            ["addr", "balance", "send", "gas"]

    def test_flag_blocks_initialized_false(self, sigma, names):
        for flag in ("0xthrow", "0xmodifier"):
            block = sigma.blocks[names[flag].index]
            assert block.payload == BoolPayload(False)
            assert block.occupancy == gm.OCCUPY

    def test_too_small_size_is_config_error(self):
        with pytest.raises(MemoryConfigError):
            gm.init_mem(gm.RESERVED_BLOCKS, standard_library(gm.RESERVED_BLOCKS))

    def test_empty_stdlib_leaves_user_blocks_free(self):
        sigma = gm.init_mem(100, [])
        assert all(b.occupancy == gm.FREE for b in sigma.blocks[:90])


class TestReadWrite:
    def test_read_after_write_dir(self, sigma):
        value = mv(IntPayload(7))
        out = gm.write(sigma, Address(3), value, "dir")
        assert gm.read(out, Address(3), "dir") == value

    def test_chck_read_of_free_block_absent(self, sigma, env, binfo):
        assert gm.read(sigma, Address(5), "chck", env, binfo) is None

    def test_chck_read_of_stdlib_struct(self, sigma, names, env, binfo):
        block = gm.read(sigma, names["0xaddress"], "chck", env, binfo)
        assert isinstance(block.payload, StructTypeInfo)

    def test_out_of_range_absent(self, sigma):
        assert gm.read(sigma, Address(1000), "dir") is None
        assert gm.write(sigma, Address(1000), mv(IntPayload(1)), "dir") is None

    def test_write_returns_new_state(self, sigma):
        out = gm.write(sigma, Address(0), mv(IntPayload(1)), "dir")
        assert sigma.blocks[0].occupancy == gm.FREE
        assert out.blocks[0].payload == IntPayload(1)

    def test_chck_write_to_free_block_absent(self, sigma, env, binfo):
        assert gm.write(sigma, Address(0), mv(IntPayload(1)), "chck", env, binfo) is None

    # Enumerate access x domain against the validation predicate: a chck
    # access succeeds exactly when the block is occupied and either
    # public or owned by the caller's domain.
    @pytest.mark.parametrize("access", ["public", "private", "internal"])
    @pytest.mark.parametrize("same_domain", [True, False])
    def test_validation_predicate_enumeration(self, sigma, access, same_domain, binfo):
        owner = Address(50)
        caller = Address(50) if same_domain else Address(51)
        env = initial_env(10, caller)
        seeded = gm.write(sigma, Address(4), mv(IntPayload(9), owner, access), "dir")
        expected = access == "public" or same_domain
        read_ok = gm.read(seeded, Address(4), "chck", env) is not None
        write_ok = gm.write(seeded, Address(4), mv(IntPayload(1)), "chck", env) is not None
        assert read_ok is expected
        assert write_ok is expected

    def test_chck_success_implies_dir_same_value(self, sigma, env, binfo):
        seeded = gm.write(sigma, Address(4), mv(IntPayload(9)), "dir")
        via_chck = gm.read(seeded, Address(4), "chck", env, binfo)
        assert via_chck == gm.read(seeded, Address(4), "dir")

    def test_chck_write_preserves_block_ownership(self, sigma):
        owner = Address(50)
        other = initial_env(10, Address(51))
        seeded = gm.write(sigma, Address(4), mv(IntPayload(9), owner, "public"), "dir")
        out = gm.write(seeded, Address(4), mv(IntPayload(1), Address(51)), "chck", other)
        assert out.blocks[4].domain == owner
        assert out.blocks[4].payload == IntPayload(1)

    def test_throw_flag_write(self, sigma, names):
        out = gm.write(sigma, names["0xthrow"], mv(BoolPayload(True)), "dir")
        assert out.blocks[names["0xthrow"].index].payload == BoolPayload(True)


@given(st.integers(0, 99), st.integers(0, 99), st.integers(-50, 50))
@settings(max_examples=60, deadline=None)
def test_frame_property(a, b, value):
    sigma = fresh_memory(100)
    written = gm.write(sigma, Address(a), mv(IntPayload(value)), "dir")
    assert gm.read(written, Address(a), "dir").payload == IntPayload(value)
    if b != a:
        assert gm.read(written, Address(b), "dir") == gm.read(sigma, Address(b), "dir")
    assert written.size == sigma.size


class TestAddressOffset:
    def test_worked_offset_example(self):
        assert gm.address_offset("+", 6, Address(0), 100) == Address(6)

    def test_identity(self):
        assert gm.address_offset("+", 0, Address(42), 100) == Address(42)

    def test_underflow_absent(self):
        assert gm.address_offset("-", 1, Address(0), 100) is None

    def test_overflow_absent(self):
        assert gm.address_offset("+", 1, Address(99), 100) is None


def brute_force_first_fit(sigma, n):
    """Independent scan: the lowest base of any n-long free run."""
    free = [b.occupancy == gm.FREE for b in sigma.blocks]
    for base in range(sigma.alloc_floor, sigma.size - n + 1):
        if all(free[base:base + n]):
            return base
    return None


class TestAllocate:
    def test_allocate_20_from_fresh_user_region(self, sigma):
        base, out = gm.allocate(sigma, 20)
        assert base == Address(0)
        assert all(b.occupancy == gm.OCCUPY for b in out.blocks[0:20])

    def test_allocate_on_full_memory_absent(self, sigma):
        full = sigma
        while True:
            got = gm.allocate(full, 1)
            if got is None:
                break
            _, full = got
        assert gm.allocate(full, 1) is None

    def test_first_fit_prefers_lowest_index_after_free(self, sigma):
        _, s1 = gm.allocate(sigma, 5)
        s2 = gm.free_mem(s1, Address(2))
        expected = brute_force_first_fit(s2, 1)
        got, _ = gm.allocate(s2, 1)
        assert got.index == expected == 2

    @given(st.lists(st.integers(1, 6), min_size=0, max_size=8),
           st.integers(1, 6))
    @settings(max_examples=50, deadline=None)
    def test_first_fit_matches_brute_force(self, sizes, want):
        sigma = fresh_memory(60)
        for n in sizes:
            got = gm.allocate(sigma, n)
            if got is None:
                break
            _, sigma = got
        # poke a few holes deterministically
        for idx in range(0, 40, 7):
            out = gm.free_mem(sigma, Address(idx))
            if out is not None:
                sigma = out
        expected = brute_force_first_fit(sigma, want)
        got = gm.allocate(sigma, want)
        if expected is None:
            assert got is None
        else:
            assert got[0].index == expected

    def test_allocation_respects_floor(self, sigma):
        import dataclasses
        raised = dataclasses.replace(sigma, alloc_floor=10)
        base, _ = gm.allocate(raised, 3)
        assert base.index == 10


class TestFreeMem:
    def test_free_then_chck_read_absent(self, sigma, env, binfo):
        seeded = gm.write(sigma, Address(4),
                          mv(IntPayload(9), env.domain), "dir")
        out = gm.free_mem(seeded, Address(4))
        assert gm.read(out, Address(4), "chck", env, binfo) is None
        assert isinstance(out.blocks[4].payload, Undef)

    def test_free_of_free_block_absent(self, sigma):
        assert gm.free_mem(sigma, Address(4)) is None

    def test_free_of_reserved_block_absent(self, sigma, names):
        for name in ("0xmodifier", "0xthrow", "0xaddress", "0xmsg"):
            assert gm.free_mem(sigma, names[name]) is None


class TestDump:
    def test_shape_and_stability(self, sigma):
        lines = gm.dump(sigma).splitlines()
        assert len(lines) == 100
        first = lines[0].split("\t")
        assert first[0] == "0"
        assert first[1] in (gm.FREE, gm.OCCUPY)
        assert first[2] in gm.ACCESS_KINDS
        assert gm.dump(sigma) == gm.dump(sigma)

    def test_payload_renderings(self):
        assert gm.render_payload(Undef()) == "undef"
        assert gm.render_payload(BoolPayload(True)) == "bool:true"
        assert gm.render_payload(BoolPayload(None)) == "bool:?"
        assert gm.render_payload(IntPayload(19, 64, True)) == "int:i64:19"
        assert gm.render_payload(IntPayload(7, 64, False)) == "int:u64:7"


class TestStdlibLoading:
    def test_library_variable_declaration_occupies_block(self):
        from minisol.syntax import Evar, Tuint, Var
        lib = standard_library(100) + [Var("public", Evar(Address(80), Tuint()))]
        sigma = gm.init_mem(100, lib)
        assert sigma.blocks[80].occupancy == gm.OCCUPY

    def test_unsupported_library_statement_is_config_error(self):
        from minisol.syntax import Snil
        with pytest.raises(MemoryConfigError):
            gm.init_mem(100, standard_library(100) + [Snil()])

    def test_oversized_library_function_is_config_error(self):
        from minisol.syntax import Fun, FunStop, Tbool
        bad = [Fun(Address(500), (), None, (Tbool(),), (FunStop(),), Address(501))]
        with pytest.raises(MemoryConfigError):
            gm.init_mem(100, bad)
