import math

import numpy as np
import pytest

from leocoop.channel import array_response, build_channels, fspl_amplitude, subcarrier_frequencies
from leocoop.config import DESK, PAPER
from leocoop.geometry import sample_geometry


def test_fspl_at_600km():
    loss_db = -20 * math.log10(fspl_amplitude(600e3, 2e9))
    assert loss_db == pytest.approx(154.03, abs=0.01)


def test_fspl_rejects_zero_range():
    with pytest.raises(ValueError):
        fspl_amplitude(0.0, 2e9)


def test_array_response_unit_norm_and_boresight():
    a = array_response(0.0, 0.0, (4, 8), 2e9)
    assert a.shape == (32,)
    assert np.allclose(a, 1 / math.sqrt(32))
    rng = np.random.default_rng(0)
    th, ph = rng.uniform(0, 1.2, 50), rng.uniform(-3, 3, 50)
    assert np.allclose(np.linalg.norm(array_response(th, ph, (5, 3), 2e9), axis=-1), 1.0)


def test_array_response_kron_order():
    th, ph = 0.4, 0.9
    a = array_response(th, ph, (3, 2), 2e9)
    ax = np.exp(-1j * np.pi * np.arange(3) * math.sin(th) * math.cos(ph)) / math.sqrt(3)
    ay = np.exp(-1j * np.pi * np.arange(2) * math.sin(th) * math.sin(ph)) / math.sqrt(2)
    assert np.allclose(a, np.kron(ax, ay))


def test_squint_is_small_across_band():
    f = subcarrier_frequencies(PAPER)
    assert np.max(np.abs(f / PAPER.carrier_freq - 1)) < 0.01
    a0 = array_response(0.7, 0.3, (32, 32), PAPER.carrier_freq)
    a1 = array_response(0.7, 0.3, (32, 32), f[-1], carrier_freq=PAPER.carrier_freq)
    assert abs(np.vdot(a0, a1)) > 0.99


@pytest.fixture
def chans():
    cfg = DESK.with_(sat_array=(4, 4), ut_array=(2, 2))
    rng = np.random.default_rng(5)
    geom = sample_geometry(cfg, rng)
    return cfg, geom, build_channels(geom, cfg, rng)


def test_channel_matrix_rank_one_with_pathloss_norm(chans):
    cfg, geom, ch = chans
    m, k = np.argwhere(geom.visible)[0]
    H = ch.matrix(m, k)
    s = np.linalg.svd(H, compute_uv=False)
    assert s[0] == pytest.approx(fspl_amplitude(geom.slant_range[m, k], cfg.carrier_freq))
    assert np.all(s[1:] < 1e-12 * s[0])


def test_invisible_links_carry_nothing(chans):
    _, geom, ch = chans
    assert np.all(ch.gain[~geom.visible] == 0)
    m, k = np.argwhere(~geom.visible)[0]
    assert not np.any(ch.matrix(m, k))


def test_phase_unit_modulus_and_flat(chans):
    _, _, ch = chans
    assert np.allclose(np.abs(ch.alpha), 1.0)
    assert ch.frequency_flat


def test_correlation_matches_inner_products(chans):
    _, _, ch = chans
    rho = ch.sat_correlation()
    a = ch.sat_response()
    explicit = np.einsum("mki,mli->mkl", a.conj(), a)
    assert np.allclose(rho, explicit)
    assert np.allclose(np.einsum("mkk->mk", rho), 1.0)


def test_all_subcarrier_responses_match_single(chans):
    cfg, geom, _ = chans
    cfg = cfg.with_(beam_squint=True)
    ch = build_channels(geom, cfg, np.random.default_rng(1))
    ax, ay = ch.sat_axes_all()
    n = 17
    bx, by = ch.sat_axes(n)
    assert np.allclose(ax[:, :, n], bx) and np.allclose(ay[:, :, n], by)
    assert np.allclose(ch.ut_response_all()[:, :, n], ch.ut_response(n))
    assert not ch.frequency_flat


def test_build_is_deterministic():
    cfg = DESK
    g = sample_geometry(cfg, np.random.default_rng(0))
    a = build_channels(g, cfg, np.random.default_rng(3))
    b = build_channels(g, cfg, np.random.default_rng(3))
    assert np.array_equal(a.alpha, b.alpha)
