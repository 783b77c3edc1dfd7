"""Per-subcarrier power decomposition, SINR and throughput.

The coefficient from stream ``k'`` on subcarrier ``n'`` through satellite
``m`` to UT ``k`` on subcarrier ``n`` factors as

    g[m,k] (u_k^H a_ut[m,k]) rho_m(k,k') sqrt(P[m,k']) conj(alpha[m,k']) exp(j 2 pi n' delta[m,k'] / N)

times the leakage ``A[n,n']`` (current symbol) or ``B[n,n']`` (previous
symbol) of the offset ``delta[m,k]``. EXACT mode sums these coherently over
satellites for every ``(n, n')``. STATISTICAL mode evaluates gains at the
carrier and replaces the ``n'`` sums by Parseval window energies; the
serving satellites' own terms stay coherent, cross-user terms from different
satellites are treated as uncorrelated.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .beamforming import CombinerSet, PrecoderSet
from .config import INTERFERENCE_MODES, ScenarioConfig
from .ofdm import leakage_matrices

EXACT_MAX_N = 256


@dataclass(frozen=True)
class PowerTerms:
    """Per-(k, n) powers in watts. ``self_ici``/``self_isi`` are the UT's own-stream shares."""

    desired: np.ndarray
    mui: np.ndarray
    ici: np.ndarray
    isi: np.ndarray
    noise: np.ndarray
    self_ici: np.ndarray
    self_isi: np.ndarray
    interference_mode: str

    @property
    def gamma(self) -> np.ndarray:
        return self.mui + self.ici + self.isi + self.noise


@dataclass(frozen=True)
class ThroughputReport:
    powers: PowerTerms
    sinr: np.ndarray
    rate: np.ndarray
    spectral_efficiency: np.ndarray
    prelog: float
    mode: str
    interference_mode: str
    active: np.ndarray
    attach: np.ndarray

    def rows(self, **extra) -> list[dict]:
        """One CSV-ready dict per active UT."""
        out = []
        for k in np.flatnonzero(self.active):
            row = dict(extra)
            row.update(
                k=int(k),
                mode=self.mode,
                attach=int(self.attach[k]),
                rate=float(self.rate[k]),
                spectral_efficiency=float(self.spectral_efficiency[k]),
                mean_sinr=float(np.mean(self.sinr[k])),
                desired=float(np.mean(self.powers.desired[k])),
                mui=float(np.mean(self.powers.mui[k])),
                ici=float(np.mean(self.powers.ici[k])),
                isi=float(np.mean(self.powers.isi[k])),
                noise=float(np.mean(self.powers.noise[k])),
            )
            out.append(row)
        return out


def _check_dims(channels, precoders, combiners, decision):
    M, K = channels.shape
    N = channels.n_subcarriers
    if precoders.serving.shape != (M, K) or np.shape(decision.offset.delta) != (M, K):
        raise ValueError("precoders/decision do not match the channel dimensions")
    n_rx = channels.ut_dims[0] * channels.ut_dims[1]
    if combiners.u.shape != (K, N, n_rx):
        raise ValueError(f"combiner shape {combiners.u.shape} != {(K, N, n_rx)}")


def power_terms(channels, precoders: PrecoderSet, combiners: CombinerSet, decision,
                config: ScenarioConfig, interference_mode: str | None = None) -> PowerTerms:
    """Desired, MUI, ICI, ISI and noise power on every (k, n)."""
    mode = interference_mode or config.interference_mode
    if mode not in INTERFERENCE_MODES:
        raise ValueError(f"unknown interference mode {mode!r}")
    _check_dims(channels, precoders, combiners, decision)
    if mode == "exact":
        terms = _exact_terms(channels, precoders, combiners, decision)
    else:
        terms = _statistical_terms(channels, precoders, combiners, decision)
    K, N = channels.shape[1], channels.n_subcarriers
    noise = config.noise_per_subcarrier() * np.sum(np.abs(combiners.u) ** 2, axis=-1)
    return PowerTerms(noise=np.broadcast_to(noise, (K, N)).copy(), interference_mode=mode, **terms)


def _rx_gain(channels, combiners, k):
    """``u_k(n)^H a_ut[m,k](n)``, shape (M, N)."""
    u = combiners.u[k]  # (N, Nrx)
    if channels.frequency_flat:
        a = channels.ut_response()[:, k]  # (M, Nrx)
        return np.einsum("nr,mr->mn", u.conj(), a)
    a = channels.ut_response_all()[:, k]  # (M, N, Nrx)
    return np.einsum("nr,mnr->mn", u.conj(), a)


def _exact_terms(channels, precoders, combiners, decision):
    M, K = channels.shape
    N = channels.n_subcarriers
    if N > EXACT_MAX_N:
        raise ValueError(f"exact interference mode is limited to N <= {EXACT_MAX_N}")
    delta = np.asarray(decision.offset.delta)
    excess = np.asarray(decision.offset.excess)
    gain = channels.gain
    n = np.arange(N)
    tx = precoders.scale()[..., None] * precoders.phase(n)  # (M, K', N')
    flat = channels.frequency_flat
    if flat:
        rho_all = channels.sat_correlation()  # (M, K, K')
    else:
        ax, ay = channels.sat_axes_all()  # (M, K, N, n_x)

    out = {name: np.zeros((K, N)) for name in ("desired", "mui", "ici", "isi", "self_ici", "self_isi")}
    for k in range(K):
        if not np.any(gain[:, k]):
            continue
        A, B = leakage_matrices(delta[:, k], excess[:, k], N)  # (M, N, N')
        rx = gain[:, k, None] * _rx_gain(channels, combiners, k)  # (M, N)
        if flat:
            rho = rho_all[:, k]
            SA = np.einsum("mnp,mn,ml,mlp->lnp", A, rx, rho, tx, optimize=True)
            SB = np.einsum("mnp,mn,ml,mlp->lnp", B, rx, rho, tx, optimize=True)
        else:
            rho = (np.einsum("mni,mlpi->mlnp", ax[:, k].conj(), ax)
                   * np.einsum("mni,mlpi->mlnp", ay[:, k].conj(), ay))  # (M, K', N, N')
            SA = np.einsum("mnp,mn,mlnp,mlp->lnp", A, rx, rho, tx, optimize=True)
            SB = np.einsum("mnp,mn,mlnp,mlp->lnp", B, rx, rho, tx, optimize=True)
        pa = np.abs(SA) ** 2  # (K', N, N')
        pb = np.abs(SB) ** 2
        diag = np.einsum("lnn->ln", pa)
        leak = pa.sum(axis=-1) - diag  # (K', N)
        out["desired"][k] = diag[k]
        out["mui"][k] = diag.sum(axis=0) - diag[k]
        out["ici"][k] = leak.sum(axis=0)
        out["self_ici"][k] = leak[k]
        out["isi"][k] = pb.sum(axis=(0, 2))
        out["self_isi"][k] = pb[k].sum(axis=-1)
    return out


def _statistical_terms(channels, precoders, combiners, decision):
    M, K = channels.shape
    N = channels.n_subcarriers
    excess = np.asarray(decision.offset.excess, dtype=float)
    x = (N - excess) / N  # in-window fraction
    e = excess / N
    mid = N // 2
    # receive gain at the carrier subcarrier
    u = combiners.u[:, mid]  # (K, Nrx)
    a_ut = channels.ut_response()  # (M, K, Nrx)
    rx = channels.gain * np.einsum("kr,mkr->mk", u.conj(), a_ut)  # (M, K)
    rho = channels.sat_correlation()  # (M, K, K')
    h = rx[:, :, None] * rho * precoders.scale()[:, None, :]  # (M, K, K')

    h2 = np.abs(h) ** 2
    own = np.eye(K, dtype=bool)[None]
    cross = np.where(own, 0.0, h2)  # (M, K, K')
    hs = np.einsum("mkk->mk", h)  # own-stream coefficients (M, K)

    desired = np.abs(np.sum(x * hs, axis=0)) ** 2
    mui = np.einsum("mk,mkl->k", x**2, cross)
    ici_cross = np.einsum("mk,mkl->k", x - x**2, cross)
    isi_cross = np.einsum("mk,mkl->k", e, cross)

    self_ici = np.zeros(K)
    self_isi = np.zeros(K)
    for k in range(K):
        idx = np.flatnonzero(hs[:, k])
        if idx.size == 0:
            continue
        d = excess[idx, k]
        hk = hs[idx, k]
        overlap_cur = (N - np.maximum.outer(d, d)) / N - np.outer(x[idx, k], x[idx, k])
        overlap_prev = np.minimum.outer(d, d) / N
        self_ici[k] = max(np.real(hk.conj() @ overlap_cur @ hk), 0.0)
        self_isi[k] = max(np.real(hk.conj() @ overlap_prev @ hk), 0.0)

    def per_n(v):
        return np.repeat(v[:, None], N, axis=1)

    return {
        "desired": per_n(desired),
        "mui": per_n(mui),
        "ici": per_n(ici_cross + self_ici),
        "isi": per_n(isi_cross + self_isi),
        "self_ici": per_n(self_ici),
        "self_isi": per_n(self_isi),
    }


def sinr(powers: PowerTerms) -> np.ndarray:
    return powers.desired / powers.gamma


def prelog(config: ScenarioConfig, mode: str) -> float:
    return config.n_subcarriers / config.symbol_len(mode)


def spectral_rate(sinr_values, prelog_factor: float, subcarrier_bw: float) -> np.ndarray:
    """``prelog * sum_n B_sc log2(1 + SINR)`` over the last axis."""
    sinr_values = np.asarray(sinr_values, dtype=float)
    return prelog_factor * subcarrier_bw * np.sum(np.log2(1.0 + sinr_values), axis=-1)


def throughput(sinr_values, config: ScenarioConfig, mode: str) -> np.ndarray:
    """Rate in bits/s per UT with the CP overhead of ``mode``."""
    return spectral_rate(sinr_values, prelog(config, mode), config.subcarrier_spacing)


def evaluate_link(channels, precoders, combiners, decision, config: ScenarioConfig,
                  interference_mode: str | None = None) -> ThroughputReport:
    powers = power_terms(channels, precoders, combiners, decision, config, interference_mode)
    s = sinr(powers)
    active = np.asarray(decision.active, dtype=bool)
    rate = np.where(active, throughput(s, config, decision.mode), 0.0)
    return ThroughputReport(
        powers=powers,
        sinr=s,
        rate=rate,
        spectral_efficiency=rate / config.bandwidth,
        prelog=prelog(config, decision.mode),
        mode=decision.mode,
        interference_mode=powers.interference_mode,
        active=active,
        attach=decision.serving_count,
    )
