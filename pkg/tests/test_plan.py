import io
from dataclasses import replace

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fsofeeder.plan import (
    Channel,
    ChannelPlan,
    Cut,
    ModulationFormat,
    PlanError,
    Role,
    aggregate_rates,
    build_default_plan,
    read_plan_csv,
    set_cut_format,
    tune_cut,
    validate_plan,
    write_plan_csv,
)


@pytest.fixture(scope="module")
def plan():
    return build_default_plan()


def test_format_constants():
    assert [(f.bits_per_symbol, f.polarizations) for f in ModulationFormat] == [(8, 2), (6, 2), (4, 2), (2, 1)]
    assert ModulationFormat.parse("dp-16qam") is ModulationFormat.DP16QAM
    with pytest.raises(ValueError):
        ModulationFormat.parse("DP64QAM")


def test_default_plan_shape(plan):
    assert len(plan) == 54
    assert [ch.slot for ch in plan] == list(range(54))
    assert plan.channel(0).center_freq == 192.10
    assert plan.channel(53).center_freq == 194.75
    ref = plan.channel(plan.slot_of_freq(193.40))
    assert ref.role is Role.SP_QPSK_REF and ref.slot == 26
    assert ref.format is ModulationFormat.SPQPSK and ref.gross_rate == 100.0
    assert len(plan.with_role(Role.LOADING)) == 51


def test_default_cuts(plan):
    even, odd = plan.cut(Cut.EVEN), plan.cut(Cut.ODD)
    assert (even.center_freq, odd.center_freq) == (193.60, 193.55)
    for cut in (even, odd):
        assert cut.gross_rate == 275.8 and cut.net_rate == 200.0
        assert cut.fec_overhead == 0.25 and cut.symbol_rate == 34.475
        assert cut.format is ModulationFormat.DP16QAM


def test_loading_channels(plan):
    for ch in plan.with_role(Role.LOADING):
        assert ch.gross_rate == 245.3
        assert ch.net_rate is None
        assert ch.fec_overhead == 0.15
        assert ch.tx_osnr == 11.5


def test_aggregate_rates(plan):
    rates = aggregate_rates(plan)
    assert rates["gross_total"] == 13161.9
    assert rates["net_total_known"] == 400.0


def test_aggregate_single_channel():
    ch = build_default_plan().reference
    assert aggregate_rates([ch])["gross_total"] == 100.0


def test_grid_is_exact(plan):
    for ch in plan:
        assert ch.freq_ghz == 192_100 + 50 * ch.slot
        assert abs(ch.center_freq - (192.10 + ch.slot * 0.050)) < 1e-12


def test_tune_cut_to_top_channel(plan):
    moved = tune_cut(plan, Cut.EVEN, 53 - 1)
    assert moved.cut(Cut.EVEN).slot == 52
    # 194.75 THz is odd slot 53
    moved = tune_cut(plan, Cut.ODD, plan.slot_of_freq(194.75))
    assert moved.cut(Cut.ODD).center_freq == 194.75
    assert len(moved) == 54
    assert moved.channel(29).role is Role.LOADING


def test_tune_cut_noop(plan):
    assert tune_cut(plan, Cut.EVEN, 30) == plan


def test_tune_cut_errors(plan):
    with pytest.raises(PlanError, match="even grid"):
        tune_cut(plan, Cut.EVEN, 31)
    with pytest.raises(PlanError, match="reference"):
        tune_cut(plan, Cut.EVEN, 26)
    with pytest.raises(PlanError):
        tune_cut(plan, Cut.ODD, 54)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(st.sampled_from([Cut.EVEN, Cut.ODD]), st.integers(0, 26)), max_size=12))
def test_tune_sequence_preserves_plan(moves):
    plan = build_default_plan()
    for cut, k in moves:
        slot = 2 * k + cut.parity
        if slot == 26 or slot > 53:
            continue
        plan = tune_cut(plan, cut, slot)
        validate_plan(plan)
        assert len(plan) == 54
        assert len({ch.slot for ch in plan}) == 54
        assert aggregate_rates(plan)["gross_total"] == 13161.9


def test_set_cut_format(plan):
    p = set_cut_format(plan, Cut.ODD, ModulationFormat.DPQPSK)
    odd = p.cut(Cut.ODD)
    assert odd.format is ModulationFormat.DPQPSK
    assert (odd.gross_rate, odd.net_rate) == (137.9, 100.0)


def test_channel_invariants():
    with pytest.raises(ValueError):
        Channel(0, 192_100, Role.LOADING, ModulationFormat.DP16QAM, 32.0, 100.0, 120.0, 0.15, 11.5)
    with pytest.raises(ValueError):
        Channel(0, 192_100, Role.SP_QPSK_REF, ModulationFormat.DP16QAM, 32.0, 100.0, None, 0.0, 20.0)


def test_plan_rejects_duplicate_roles(plan):
    chans = list(plan.channels)
    chans[0] = replace(plan.reference, slot=0, freq_ghz=192_100)
    with pytest.raises(PlanError, match="exactly one"):
        validate_plan(ChannelPlan(tuple(chans)))
    with pytest.raises(PlanError, match="grid"):
        ChannelPlan((replace(chans[1], freq_ghz=192_175),))


def test_plan_csv_round_trip(plan):
    buf = io.StringIO()
    write_plan_csv(plan, buf)
    text = buf.getvalue()
    assert text.splitlines()[0] == "slot,freq_ghz,role,format,symbol_rate_gbd,gross_gbps,net_gbps,fec_oh,tx_osnr_db"
    assert read_plan_csv(io.StringIO(text)) == plan
