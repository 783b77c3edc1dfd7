"""MRT precoding with delay-phase compensation, PFD power, and MRC combining."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ChannelRealization

_REFERENCE_BW = 4000.0  # PFD limits are quoted per 4 kHz


def pfd_power(r, pfd_limit: float, n_serving, subcarrier_bw: float):
    """Per-subcarrier transmit power that puts exactly the PFD limit on the ground.

    ``P = 4 pi r^2 * 10^(pfd_limit/10) * (B_sc / 4 kHz) / n_serving``.
    The ``r^2`` cancels spreading loss; dividing by the serving count keeps the
    aggregate flux at a UT the same for every association mode.
    """
    n_serving = np.asarray(n_serving)
    if np.any(n_serving < 1):
        raise ValueError("n_serving must be at least 1")
    r = np.asarray(r, dtype=float)
    flux = 10.0 ** (pfd_limit / 10.0) * (subcarrier_bw / _REFERENCE_BW)
    return 4.0 * np.pi * r**2 * flux / n_serving


def compensation_phase(n, delta, N: int):
    """``exp(j 2 pi n delta / N)``, undoing the FFT-window rotation of offset ``delta``."""
    return np.exp(2j * np.pi * np.mod(np.multiply(n, delta), N) / N)


def mrt_precoder(H: np.ndarray, delta: int, power: float, n: int, N: int) -> np.ndarray:
    """MRT precoder for an explicit rank-1 channel matrix ``H`` (N_rx x N_tx).

    Returns ``exp(j 2 pi n delta / N) sqrt(P) (H / ||H||)^H`` projected on the
    dominant receive direction, whose phase is fixed so its first entry is
    real and non-negative. For a single receive antenna this is exactly the
    normalized conjugate transpose.
    """
    H = np.atleast_2d(np.asarray(H, dtype=complex))
    if power < 0:
        raise ValueError("power must be non-negative")
    if not np.any(H):
        raise ValueError("degenerate link: zero channel")
    left, _, _ = np.linalg.svd(H)
    u1 = left[:, 0]
    if abs(u1[0]) > 1e-12:
        u1 = u1 * (abs(u1[0]) / u1[0])
    w = H.conj().T @ u1
    return compensation_phase(n, delta, N) * np.sqrt(power) * w / np.linalg.norm(w)


def mrc_combiner(effective: np.ndarray) -> np.ndarray:
    """Unit-norm matched filter; a zero input falls back to the first basis vector."""
    effective = np.asarray(effective, dtype=complex)
    norm = np.linalg.norm(effective)
    if norm == 0:
        out = np.zeros_like(effective)
        out[0] = 1.0
        return out
    return effective / norm


@dataclass(frozen=True)
class PrecoderSet:
    """MRT precoders of every ``(m, k)`` pair, stored in factored form.

    ``v[m, k, n] = exp(j 2 pi n delta[m, k] / N) sqrt(power[m, k]) conj(alpha[m, k]) a_sat[m, k](n)``
    for serving pairs and zero otherwise. Dense storage would need
    M*K*N*N_tx entries, so vectors are assembled on demand.
    """

    channels: ChannelRealization
    delta: np.ndarray
    power: np.ndarray
    serving: np.ndarray

    @property
    def n_subcarriers(self) -> int:
        return self.channels.n_subcarriers

    def scale(self) -> np.ndarray:
        """Per-pair scalar ``sqrt(P) conj(alpha)``, zero for non-serving pairs."""
        return np.where(self.serving, np.sqrt(self.power) * np.conj(self.channels.alpha), 0.0)

    def phase(self, n) -> np.ndarray:
        """Compensation phases; shape (M, K) for scalar ``n``, (M, K, len(n)) for arrays."""
        n = np.asarray(n)
        d = self.delta if n.ndim == 0 else self.delta[..., None]
        return compensation_phase(n, d, self.n_subcarriers)

    def vectors(self, n: int) -> np.ndarray:
        """All precoders on subcarrier ``n``, shape (M, K, N_tx)."""
        coef = self.scale() * self.phase(n)
        return coef[..., None] * self.channels.sat_response(n)

    def all_vectors(self) -> np.ndarray:
        """All precoders on all subcarriers, shape (M, K, N, N_tx). Small cases only."""
        N = self.n_subcarriers
        return np.stack([self.vectors(n) for n in range(N)], axis=2)


@dataclass(frozen=True)
class CombinerSet:
    """Unit-norm receive combiners ``u[k, n]`` of shape (K, N, N_rx)."""

    u: np.ndarray

    def at_carrier(self) -> np.ndarray:
        return self.u[:, self.u.shape[1] // 2]


def build_precoders(channels: ChannelRealization, decision, geom, config) -> PrecoderSet:
    """Factored MRT precoders with PFD-constrained power for a decision."""
    serving = np.asarray(decision.serving, dtype=bool)
    counts = serving.sum(axis=0)
    power = np.zeros(serving.shape)
    cols = counts > 0
    if np.any(cols):
        p = pfd_power(geom.slant_range[:, cols], config.pfd_limit, counts[cols],
                      config.subcarrier_spacing)
        power[:, cols] = np.where(serving[:, cols], p, 0.0)
    return PrecoderSet(channels=channels, delta=np.asarray(decision.offset.delta),
                       power=power, serving=serving)


def build_combiners(channels: ChannelRealization, precoders: PrecoderSet, decision) -> CombinerSet:
    """MRC on the desired-signal effective channel of each UT.

    After compensation a serving satellite adds ``(N - Delta)/N sqrt(beta P) a_ut(n)``
    on subcarrier ``n``, so the combiner only needs those real weights.
    """
    M, K = channels.shape
    N = channels.n_subcarriers
    excess = np.asarray(decision.offset.excess)
    weight = np.where(precoders.serving,
                      (N - excess) / N * channels.pathloss_amp * np.sqrt(precoders.power), 0.0)
    weight = np.where(channels.active, weight, 0.0)
    n_rx = channels.ut_dims[0] * channels.ut_dims[1]
    if n_rx == 1:
        return CombinerSet(np.ones((K, N, 1), dtype=complex))
    if channels.frequency_flat:
        eff = np.einsum("mk,mkr->kr", weight, channels.ut_response())
        u = np.stack([mrc_combiner(e) for e in eff])
        return CombinerSet(np.repeat(u[:, None, :], N, axis=1))
    eff = np.einsum("mk,mknr->knr", weight, channels.ut_response_all())
    u = np.array([[mrc_combiner(eff[k, n]) for n in range(N)] for k in range(K)])
    return CombinerSet(u)
