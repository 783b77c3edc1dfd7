from dataclasses import replace

import numpy as np
import pytest

from leocoop.association import AssociationDecision
from leocoop.beamforming import CombinerSet, PrecoderSet
from leocoop.channel import ChannelRealization
from leocoop.config import PAPER
from leocoop.experiment import oracle_config
from leocoop.link_eval import (PowerTerms, evaluate_link, power_terms, prelog, sinr, spectral_rate,
                               throughput)
from leocoop.ofdm import SampleOffset

TERMS = ("desired", "mui", "ici", "isi")


def _toy(deltas, guard, sat_dirs, N=32, amp=1e-8, power=1.0, n_x=4):
    """Hand-built flat channels: satellites on a ULA, single-antenna UTs, every link served."""
    deltas = np.asarray(deltas)
    M, K = deltas.shape
    dx = np.asarray(sat_dirs, dtype=float)
    ch = ChannelRealization(
        pathloss_amp=np.full((M, K), amp), alpha=np.exp(1j * np.linspace(0.3, 2.0, M * K)).reshape(M, K),
        sat_dir=(dx, np.zeros((M, K))), ut_dir=(np.zeros((M, K)), np.zeros((M, K))),
        active=np.ones((M, K), dtype=bool), freq_ratio=np.ones(N), sat_dims=(n_x, 1), ut_dims=(1, 1),
        spacing=0.5)
    serving = np.ones((M, K), dtype=bool)
    dec = AssociationDecision(
        mode="full", sync_mode="anchored", sync=np.zeros(K, dtype=np.int64), serving=serving,
        candidates=serving, offset=SampleOffset(deltas, np.clip(deltas - guard, 0, N), guard),
        symbol_len=N + guard, active=np.ones(K, dtype=bool))
    pc = PrecoderSet(channels=ch, delta=deltas, power=np.full((M, K), power), serving=serving)
    cb = CombinerSet(np.ones((K, N, 1), dtype=complex))
    return ch, pc, cb, dec


def _cfg(N=32):
    return oracle_config(N)


@pytest.mark.parametrize("mode", ["exact", "statistical"])
def test_synchronous_single_link(mode):
    parts = _toy([[0]], 4, [[0.2]])
    p = power_terms(*parts, _cfg(), mode)
    assert np.allclose(p.desired, 1e-16)  # P * beta
    for name in ("mui", "ici", "isi"):
        assert np.all(getattr(p, name) == 0)


@pytest.mark.parametrize("mode", ["exact", "statistical"])
def test_orthogonal_users_no_mui(mode):
    # ULA of 4 with half-wavelength spacing: direction cosines 0 and 0.5 are orthogonal
    parts = _toy([[0, 0]], 4, [[0.0, 0.5]], n_x=4)
    p = power_terms(*parts, _cfg(), mode)
    assert np.max(p.mui) < 1e-30


def test_self_terms_vanish_within_guard():
    parts = _toy([[0, 3], [2, 4], [4, 1]], 4, [[0.1, 0.3], [0.4, -0.2], [-0.5, 0.6]])
    p = power_terms(*parts, _cfg(), "exact")
    assert np.max(p.self_ici) < 1e-40 and np.max(p.self_isi) < 1e-40


def test_self_interference_appears_past_guard():
    dirs = [[0.1], [0.4], [-0.5]]
    base = power_terms(*_toy([[0], [1], [2]], 4, dirs), _cfg(), "exact")
    one = power_terms(*_toy([[0], [1], [9]], 4, dirs), _cfg(), "exact")
    two = power_terms(*_toy([[0], [12], [9]], 4, dirs), _cfg(), "exact")
    assert np.max(base.self_ici + base.self_isi) < 1e-40
    assert np.all(one.self_ici + one.self_isi > 0)
    assert np.sum(two.self_ici + two.self_isi) > np.sum(one.self_ici + one.self_isi)


@pytest.mark.parametrize("delta", [0, 5, 11, 30])
def test_power_conservation_single_source(delta):
    # desired + leakage into both epochs recovers the synchronous received power
    N = 32
    p = power_terms(*_toy([[delta]], 4, [[0.3]], N=N), _cfg(N), "exact")
    total = np.sum(p.desired + p.ici + p.isi)
    assert total == pytest.approx(N * 1e-16, rel=1e-9)


def test_dimension_mismatch_rejected():
    ch, pc, cb, dec = _toy([[0, 1]], 4, [[0.1, 0.2]])
    bad = replace(dec, offset=SampleOffset(np.zeros((2, 2)), np.zeros((2, 2)), 4))
    with pytest.raises(ValueError):
        power_terms(ch, pc, cb, bad, _cfg())


def test_exact_gated_to_small_n():
    parts = _toy([[0]], 4, [[0.1]], N=512)
    with pytest.raises(ValueError):
        power_terms(*parts, PAPER.with_(n_subcarriers=512, cp_add=100), "exact")


def test_sinr_examples():
    one = np.ones((1, 4))
    zero = np.zeros((1, 4))
    p = PowerTerms(desired=one, mui=zero, ici=zero, isi=zero, noise=one, self_ici=zero, self_isi=zero,
                   interference_mode="exact")
    assert np.all(sinr(p) == 1.0)
    scaled = PowerTerms(**{f: (getattr(p, f) * 7.5 if f != "interference_mode" else "exact")
                           for f in p.__dataclass_fields__})
    assert np.allclose(sinr(scaled), sinr(p))


def test_rate_examples():
    assert spectral_rate(np.ones(4), 4 / 5, 1.0) == pytest.approx(3.2)
    assert spectral_rate(np.zeros(4), 0.5, 1e3) == 0.0
    s = np.full((1, 8), 2.0)
    r0 = throughput(s, PAPER, "proposed")
    s[0, 3] += 0.1
    assert throughput(s, PAPER, "proposed") > r0
    assert prelog(PAPER, "full") == pytest.approx(1024 / 1088)
    assert prelog(PAPER, "proposed") == pytest.approx(1024 / 1688)


def test_frozen_exact_sinr(make_drop):
    d = make_drop(oracle_config(64), mode="full", seed=0)
    s = sinr(power_terms(*d.parts, d.config, "exact"))
    assert s[0, 0] == pytest.approx(0.06252612895560727, rel=1e-9)
    assert s[1, 17] == pytest.approx(0.10037411390834264, rel=1e-9)


@pytest.mark.parametrize("mode,sync", [("single", "random"), ("full", "random"), ("proposed", "optimized")])
@pytest.mark.parametrize("seed", [0, 1, 2])
def test_statistical_tracks_exact(make_drop, mode, sync, seed):
    d = make_drop(oracle_config(64), mode=mode, seed=seed, sync_mode=sync)
    ex = power_terms(*d.parts, d.config, "exact")
    st = power_terms(*d.parts, d.config, "statistical")
    scale = sum(getattr(ex, t).sum() for t in TERMS)
    for t in TERMS:
        a, b = getattr(ex, t).sum(), getattr(st, t).sum()
        assert abs(a - b) <= 0.10 * a + 1e-12 * scale, t


def test_statistical_close_with_squint(make_drop):
    cfg = oracle_config(64).with_(beam_squint=True, bandwidth=64 * 30e6 / 64)
    d = make_drop(cfg, mode="full", seed=1)
    ex = power_terms(*d.parts, cfg, "exact")
    st = power_terms(*d.parts, cfg, "statistical")
    for t in TERMS:
        a, b = getattr(ex, t).sum(), getattr(st, t).sum()
        assert b == pytest.approx(a, rel=0.10), t


def test_multi_antenna_ut_combining(make_drop):
    d = make_drop(oracle_config(32).with_(ut_array=(2, 2)), mode="full", seed=2)
    p = power_terms(*d.parts, d.config, "exact")
    assert np.all(p.desired > 0)
    assert np.allclose(p.noise, d.config.noise_per_subcarrier())


def test_report_rows_and_inactive(make_drop):
    d = make_drop(oracle_config(32), mode="proposed", seed=0)
    rep = evaluate_link(*d.parts, d.config, "exact")
    rows = rep.rows(drop=3)
    assert len(rows) == int(rep.active.sum())
    assert {"k", "mode", "attach", "rate", "spectral_efficiency", "drop"} <= set(rows[0])
    assert np.all(rep.rate[rep.attach == 0] == 0)
    assert np.allclose(rep.spectral_efficiency, rep.rate / d.config.bandwidth)
