import csv
import math
from concurrent.futures import ThreadPoolExecutor

import hypothesis.strategies as st
import numpy as np
import pytest
from hypothesis import given, settings

from staircase_ttd.codebook import DesignSpec, required_grating_factor
from staircase_ttd.linksim import (METHODS, SWEEP_HEADER, IdealBound, InfeasibleSweepError, LinkConfig,
                                   SweepSpec, baseline_profiles, configure, evaluate_scenario,
                                   feasible_sector_sample, phased_single_beam, run_sweep,
                                   sample_sectors, single_user_ttd, spectral_efficiency,
                                   subband_assignment)
from staircase_ttd.wavefield import ArrayConfig, DelayPhaseProfile, OfdmGrid, gain_vs_frequency

from conftest import BW, F_C

SMALL = OfdmGrid(F_C, BW, 512)


def link(k=5, snr_db=10.0, grid=None, n_t=32, sector=(math.radians(-30), math.radians(40))):
    return LinkConfig(grid or OfdmGrid(F_C, BW, 4096), ArrayConfig(n_t), k, 10 ** (snr_db / 10), sector)


def test_subband_assignment_examples():
    lk = LinkConfig(OfdmGrid(F_C, BW, 12), ArrayConfig(4), 3, 1.0)
    assert subband_assignment(lk) == [range(1, 5), range(5, 9), range(9, 13)]
    with pytest.raises(ValueError, match="trim M_tot to 10"):
        subband_assignment(LinkConfig(OfdmGrid(F_C, BW, 12), ArrayConfig(4), 5, 1.0))


def test_trimmed_assignment_ignores_leftover():
    lk = LinkConfig(OfdmGrid(F_C, BW, 4096), ArrayConfig(32), 5, 10.0)
    assert lk.m_used == 4095
    ranges = subband_assignment(lk, lk.m_used)
    assert ranges[-1].stop - 1 == 4095
    assert spectral_efficiency(IdealBound(), lk)[0] == pytest.approx(math.log2(321), rel=1e-12)


def test_ideal_bound_value():
    total, per_user = spectral_efficiency(IdealBound(), link())
    assert total == pytest.approx(8.3264, abs=1e-4)
    assert np.allclose(per_user, total / 5)


def test_zero_gain_gives_zero_rate(grid):
    # a two-element anti-phase pair has an exact null at broadside on every subcarrier
    lk = LinkConfig(grid, ArrayConfig(2), 1, 10.0, (0.0, 0.0))
    prof = DelayPhaseProfile([0.0, 0.0], [0.0, np.pi])
    assert spectral_efficiency(prof, lk)[0] == pytest.approx(0, abs=1e-12)


def test_rate_matches_hand_sum():
    lk = link(k=2, grid=OfdmGrid(F_C, BW, 8), n_t=4, sector=(0.0, 0.5))
    prof = DelayPhaseProfile.zeros(4)
    b1 = gain_vs_frequency(prof, lk.cfg, lk.grid, 0.0, np.arange(1, 5))
    b2 = gain_vs_frequency(prof, lk.cfg, lk.grid, lk.user_sines()[1], np.arange(5, 9))
    want = (np.log2(1 + 10 * b1).sum() + np.log2(1 + 10 * b2).sum()) / 8
    assert spectral_efficiency(prof, lk)[0] == pytest.approx(want, rel=1e-12)


def test_k5_ordering_and_phased_gap():
    lk = link()
    se = dict(zip(METHODS, evaluate_scenario(lk)))
    assert se["IdealBound"] >= se["StaircaseModulo"]
    assert se["IdealBound"] >= se["StaircaseUniform"]
    assert se["StaircaseModulo"] > 2 * se["PhasedSingleBeam"]
    assert se["StaircaseUniform"] > 2 * se["PhasedSingleBeam"]


def test_phased_beam_favours_median_user():
    lk = link()
    _, per_user = spectral_efficiency(phased_single_beam(lk), lk)
    assert np.argmax(per_user) == 2


def test_single_user_degenerate_case():
    lk = link(k=1, sector=(math.radians(25), math.radians(25)))
    profiles = baseline_profiles(lk)
    ttd = single_user_ttd(lk)
    assert profiles["StaircaseModulo"] is profiles["StaircaseUniform"]
    g = gain_vs_frequency(ttd, lk.cfg, lk.grid, math.sin(math.radians(25)))
    assert np.allclose(g, 32, rtol=1e-9)  # pure TTD steering has no squint
    assert spectral_efficiency(ttd, lk)[0] == pytest.approx(math.log2(321), rel=1e-9)


def test_infeasible_sector_has_no_staircase():
    profiles = baseline_profiles(link(k=3, sector=(0.0, 0.01)))
    assert profiles["StaircaseModulo"] is None and profiles["StaircaseUniform"] is None
    with pytest.raises(ValueError, match="no feasible design"):
        evaluate_scenario(link(k=3, sector=(0.0, 0.01)))


def test_sector_sample_examples():
    grid, cfg = SMALL, ArrayConfig(32)
    s = sample_sectors(3, grid, cfg, 16, seed=1)
    assert len(s.pairs) == 16 and s.draws == 16 + s.rejected
    lim = math.radians(75) + 1e-12
    for t1, t2 in s.pairs:
        assert abs(t1) <= lim and abs(t2) <= lim
        d = required_grating_factor(DesignSpec(3, t1, t2, grid, cfg))
        assert math.ceil(d) < 32
    assert feasible_sector_sample(3, grid, cfg, 16, seed=1) == s.pairs


def test_sector_sample_short_when_array_too_small(caplog):
    s = sample_sectors(5, SMALL, ArrayConfig(4), 8, seed=0)
    assert s.pairs == [] and s.draws == 64 * 8
    assert "only 0 of 8" in caplog.text


def test_sweep_snr_example():
    fixed = link(k=3, grid=SMALL)
    res = run_sweep(SweepSpec("SNR", (0.0, 10.0), fixed, sector_samples=4))
    assert res.row("IdealBound")[0] == pytest.approx(math.log2(33), rel=1e-12)
    assert res.row("IdealBound")[0] == pytest.approx(5.044, abs=1e-3)
    assert np.all(res.sectors_averaged == 4)


def test_sweep_k_ideal_is_constant():
    res = run_sweep(SweepSpec("K", (2, 3, 4), link(grid=OfdmGrid(F_C, BW, 504)), sector_samples=3))
    assert np.allclose(res.row("IdealBound"), math.log2(321), rtol=1e-12)


def test_sweep_n_t_and_infeasible_value():
    fixed = link(k=3, grid=SMALL)
    res = run_sweep(SweepSpec("N_T", (16, 64), fixed, sector_samples=3))
    ideal = res.row("IdealBound")
    assert ideal[1] > ideal[0]
    with pytest.raises(InfeasibleSweepError, match="n_t=4"):
        run_sweep(SweepSpec("N_T", (4,), link(k=5, grid=SMALL), sector_samples=2))


def test_sweep_spec_validation():
    with pytest.raises(ValueError):
        SweepSpec("alpha", (1,), link())
    with pytest.raises(ValueError):
        SweepSpec("SNR", (3, 1), link())
    with pytest.raises(ValueError):
        SweepSpec("SNR", (), link())


def test_configure_units():
    lk = link()
    assert configure(lk, "SNR", 20).snr_linear == pytest.approx(100)
    assert configure(lk, "BW", 1e9).grid.bw == 1e9
    assert configure(lk, "N_T", 64).cfg.n_t == 64
    assert configure(lk, "K", 4.0).k_users == 4


def test_sweep_csv(tmp_path):
    res = run_sweep(SweepSpec("K", (2, 3), link(grid=OfdmGrid(F_C, BW, 60)), sector_samples=2))
    path = tmp_path / "sweep.csv"
    res.write_csv(path)
    rows = list(csv.reader(open(path)))
    assert tuple(rows[0]) == SWEEP_HEADER
    assert len(rows) == 1 + 2 * len(METHODS)
    assert rows[1][:3] == ["K", "2", "IdealBound"]
    assert float(rows[1][3]) == res.efficiency[0, 0]


def test_executor_does_not_change_result():
    spec = SweepSpec("SNR", (5.0,), link(k=3, grid=SMALL), sector_samples=6, seed=3)
    serial = run_sweep(spec)
    with ThreadPoolExecutor(3) as ex:
        parallel = run_sweep(spec, executor=ex)
    assert np.array_equal(serial.efficiency, parallel.efficiency)
    assert np.array_equal(serial.per_sector[0], parallel.per_sector[0])


# -- properties ---------------------------------------------------------------

small_links = st.builds(
    lambda k, t1, t2, snr: LinkConfig(SMALL, ArrayConfig(32), k, 10 ** (snr / 10), (t1, t2)),
    st.integers(2, 5), st.floats(-1.3, 1.3), st.floats(-1.3, 1.3), st.floats(-10, 30)
).filter(lambda lk: lk.sector[0] != lk.sector[1])


@settings(max_examples=25)
@given(small_links)
def test_ideal_dominates_every_method(lk):
    ideal = spectral_efficiency(IdealBound(), lk)[0]
    for name, src in baseline_profiles(lk).items():
        if src is not None:
            assert spectral_efficiency(src, lk)[0] <= ideal + 1e-12


@settings(max_examples=20)
@given(small_links, st.floats(0.5, 10))
def test_rate_increases_with_snr(lk, extra_db):
    hi = configure(lk, "SNR", 10 * math.log10(lk.snr_linear) + extra_db)
    for name, src in baseline_profiles(lk).items():
        if src is not None:
            assert spectral_efficiency(src, hi)[0] >= spectral_efficiency(src, lk)[0]


@settings(max_examples=10)
@given(st.integers(0, 2**31 - 1), st.sampled_from([2, 3, 5]))
def test_sector_sampling_is_deterministic(seed, k):
    a = sample_sectors(k, SMALL, ArrayConfig(32), 5, seed=seed)
    b = sample_sectors(k, SMALL, ArrayConfig(32), 5, seed=seed)
    assert a == b


def test_designed_staircase_beats_phased_on_average():
    res = run_sweep(SweepSpec("K", (3,), link(grid=SMALL), sector_samples=8, seed=2))
    assert res.row("StaircaseModulo")[0] > res.row("PhasedSingleBeam")[0]
    assert res.row("StaircaseUniform")[0] > res.row("PhasedSingleBeam")[0]
