import io
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from fsofeeder.turbulence import (
    FadingSeries,
    TurbulenceParams,
    autocorrelation_efold,
    generate_fading,
    read_fading_csv,
    scintillation_index,
    unlocked_mask,
    write_fading_csv,
)


def test_zero_variance_is_flat():
    f = generate_fading(TurbulenceParams(scintillation_index=0.0, coherence_time=3.0), 10.0, seed=5)
    assert len(f) == 100
    assert np.all(f.samples == 1.0)


def test_mean_and_index_at_moderate_strength():
    p = TurbulenceParams(scintillation_index=0.25, coherence_time=2.0)
    f = generate_fading(p, 1e5, seed=11)
    assert len(f) == 1_000_000
    assert 0.99 <= f.samples.mean() <= 1.01
    assert 0.2375 <= scintillation_index(f) <= 0.2625


def test_determinism_and_seed_independence():
    p = TurbulenceParams(scintillation_index=0.3, coherence_time=0.5)
    a = generate_fading(p, 1e5, seed=1)
    b = generate_fading(p, 1e5, seed=1)
    c = generate_fading(p, 1e5, seed=2)
    assert a.samples.tobytes() == b.samples.tobytes()
    r = np.corrcoef(np.log(a.samples), np.log(c.samples))[0, 1]
    assert abs(r) < 0.01


def test_same_seed_rescales_one_realization():
    weak = generate_fading(TurbulenceParams(scintillation_index=0.05), 100.0, seed=9)
    strong = generate_fading(TurbulenceParams(scintillation_index=0.5), 100.0, seed=9)
    zw = np.log(weak.samples) + math.log1p(0.05) / 2
    zs = np.log(strong.samples) + math.log1p(0.5) / 2
    np.testing.assert_allclose(zw / math.sqrt(math.log1p(0.05)), zs / math.sqrt(math.log1p(0.5)), rtol=1e-10)


def test_log_intensity_is_gaussian():
    f = generate_fading(TurbulenceParams(scintillation_index=0.5, coherence_time=0.5), 1e5, seed=3)
    assert abs(stats.skew(np.log(f.samples))) < 0.05


def test_scintillation_index_by_hand():
    assert scintillation_index(np.ones(10)) == 0.0
    assert scintillation_index(np.array([0.5, 1.5])) == pytest.approx(0.25, abs=1e-15)
    with pytest.raises(ValueError):
        scintillation_index(np.array([1.0]))


@pytest.mark.parametrize("tau", [2.0, 5.0])
def test_efold_recovers_coherence_time(tau):
    p = TurbulenceParams(scintillation_index=0.2, coherence_time=tau, sample_interval=0.1)
    f = generate_fading(p, 4e4 * tau, seed=17)
    assert autocorrelation_efold(f) == pytest.approx(tau, rel=0.10)


def test_efold_errors():
    p = TurbulenceParams(coherence_time=2.0)
    with pytest.raises(ValueError, match="shorter"):
        autocorrelation_efold(generate_fading(p, 30.0, seed=0))
    flat = FadingSeries(np.ones(1000), 0.1, p)
    with pytest.raises(ValueError, match="constant"):
        autocorrelation_efold(flat)


def test_param_validation():
    with pytest.raises(ValueError):
        TurbulenceParams(scintillation_index=-0.1)
    with pytest.raises(ValueError):
        TurbulenceParams(scintillation_index=float("nan"))
    with pytest.raises(ValueError):
        TurbulenceParams(coherence_time=0.4, sample_interval=0.1)
    with pytest.raises(ValueError):
        generate_fading(TurbulenceParams(), 0.05, seed=0)


@settings(max_examples=30, deadline=None)
@given(s2=st.floats(0.0, 1.0), seed=st.integers(0, 2**63))
def test_samples_non_negative_and_finite(s2, seed):
    f = generate_fading(TurbulenceParams(scintillation_index=s2), 50.0, seed)
    assert np.all(f.samples >= 0) and np.all(np.isfinite(f.samples))
    assert not f.samples.flags.writeable


def test_unlocked_mask_holds_for_relock_time():
    x = np.ones(30)
    x[5] = 0.01  # 20 dB fade
    m = unlocked_mask(x, threshold_db=12.0, relock_time=1.0, sample_interval=0.1)
    assert m.tolist() == [False] * 5 + [True] * 11 + [False] * 14
    assert not unlocked_mask(np.ones(5), 12.0, 2.0, 0.1).any()


def test_unlocked_mask_threshold_edge():
    x = np.array([1.0, 10 ** (-1.2), 1.0])
    assert unlocked_mask(x, 12.0, 0.0, 0.1).tolist() == [False, True, False]


def test_fading_csv_round_trip():
    f = generate_fading(TurbulenceParams(scintillation_index=0.1), 5.0, seed=4)
    buf = io.StringIO()
    write_fading_csv(f, buf)
    back = read_fading_csv(io.StringIO(buf.getvalue()))
    assert back.sample_interval == pytest.approx(0.1)
    np.testing.assert_array_equal(back.samples, f.samples)
