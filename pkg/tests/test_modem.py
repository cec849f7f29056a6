import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fsofeeder.modem import (
    DEFAULT_PENALTY_DB,
    ModemModel,
    awgn_ber,
    ber_curve,
    ber_from_osnr,
    margin,
    required_osnr,
)
from fsofeeder.plan import ModulationFormat as F

from oracles import erfc_16qam, erfc_qpsk, monte_carlo_ber

QAM16 = ModemModel.for_format(F.DP16QAM)
QPSK = ModemModel.for_format(F.DPQPSK)


def test_16qam_anchor():
    assert 2e-2 <= ber_from_osnr(QAM16, 19.0) <= 3e-2
    assert required_osnr(QAM16, 2.5e-2) == pytest.approx(19.0, abs=0.3)
    assert margin(QAM16, 20.89) == pytest.approx(1.89, abs=0.05)
    assert margin(QAM16, 20.89) < 2.0


def test_qpsk_zero_penalty_reference_point():
    # 12.6 dB SNR per symbol, no penalty
    model = ModemModel(F.DPQPSK, impl_penalty=0.0)
    osnr = 12.6 - model.osnr_to_snr_db
    assert ber_from_osnr(model, osnr) == pytest.approx(1.0e-5, rel=0.10)
    assert ber_from_osnr(model, osnr) == pytest.approx(erfc_qpsk(12.6), rel=1e-12)


def test_format_ordering():
    for osnr in (12.0, 16.0, 19.0, 23.0):
        assert ber_from_osnr(QAM16, osnr) > ber_from_osnr(QPSK, osnr)
    assert required_osnr(QPSK, 2.5e-2) < required_osnr(QAM16, 2.5e-2)
    assert margin(QPSK, 20.89) > margin(QAM16, 20.89)


def test_noiseless_limit():
    assert ber_from_osnr(QPSK, 80.0) == 0.0
    assert ber_from_osnr(QPSK, -60.0) == pytest.approx(0.5, abs=1e-3)
    with pytest.raises(ValueError):
        ber_from_osnr(QPSK, math.nan)


@pytest.mark.parametrize("fmt", list(F))
def test_strictly_decreasing(fmt):
    model = ModemModel.for_format(fmt)
    osnr = np.arange(-5.0, 25.0, 0.05)
    ber = ber_from_osnr(model, osnr)
    inside = (ber > 0) & (ber < 0.5)
    assert np.all(np.diff(ber[inside]) < 0)


@given(st.sampled_from([F.DP16QAM, F.DPQPSK, F.SPQPSK]), st.floats(1e-7, 0.2))
def test_round_trip(fmt, b):
    model = ModemModel.for_format(fmt)
    assert ber_from_osnr(model, required_osnr(model, b)) == pytest.approx(b, rel=0.01)


@given(st.sampled_from(list(F)), st.floats(0.0, 8.0), st.floats(2e-2, 3e-2))
def test_penalty_shifts_required_osnr(fmt, q, b):
    base = required_osnr(ModemModel.for_format(fmt, impl_penalty=0.0), b)
    assert required_osnr(ModemModel.for_format(fmt, impl_penalty=q), b) == pytest.approx(base + q, abs=1e-6)


def test_required_osnr_monotone_in_target():
    targets = [1e-6, 1e-4, 1e-3, 1e-2, 2e-2, 3e-2, 0.1]
    values = [required_osnr(QAM16, t) for t in targets]
    assert all(a > b for a, b in zip(values, values[1:]))


def test_model_validation():
    with pytest.raises(ValueError):
        ModemModel(F.DP16QAM, fec_limit=1e-2)
    with pytest.raises(ValueError):
        ModemModel(F.DP16QAM, impl_penalty=-1.0)
    with pytest.raises(ValueError):
        required_osnr(QAM16, 0.6)


def test_conversion_factor():
    # dual polarization at 34.475 GBd: 10 log10(25 / 34.475)
    assert ModemModel(F.DP16QAM, impl_penalty=0.0).osnr_to_snr_db == pytest.approx(-1.39564, abs=1e-5)
    assert ModemModel.for_format(F.SPQPSK, impl_penalty=0.0).osnr_to_snr_db == pytest.approx(
        10 * math.log10(12.5 / 32.0)
    )
    assert QAM16.impl_penalty == DEFAULT_PENALTY_DB


def test_ber_curve_grid():
    osnr, ber = ber_curve(QAM16, 12.0, 25.0, 0.1)
    assert len(osnr) == 131 and osnr[0] == 12.0 and osnr[-1] == 25.0
    assert np.all(np.diff(ber) < 0)


@pytest.mark.parametrize("snr", [6.0, 10.0])
def test_awgn_formulas_against_small_monte_carlo(snr):
    # a quicker 10^6-symbol cross-check; the full 10^7 run is an acceptance criterion
    for order, fmt, ref in ((4, F.DPQPSK, erfc_qpsk), (16, F.DP16QAM, erfc_16qam)):
        mc = monte_carlo_ber(order, snr, n_symbols=1_000_000, seed=int(snr))
        assert awgn_ber(fmt, snr) == pytest.approx(ref(snr), rel=1e-12)
        assert awgn_ber(fmt, snr) == pytest.approx(mc["ber"], rel=0.05)


def test_8qam_sits_between_qpsk_and_16qam():
    for snr in (8.0, 12.0, 16.0):
        assert awgn_ber(F.DPQPSK, snr) < awgn_ber(F.DP8QAM, snr) < awgn_ber(F.DP16QAM, snr)
