"""Rank-1 line-of-sight channels kept in factored form.

Each link ``(m, k)`` on subcarrier ``n`` is

    H = sqrt(beta) * alpha * a_ut(n) a_sat(n)^H

with unit-norm UPA responses and a unit-modulus, frequency-flat ``alpha``.
No propagation-delay phase is placed in ``alpha``: delay phases are handled
once, by the precoder's compensation term.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import SPEED_OF_LIGHT, ScenarioConfig
from .geometry import GeometrySample


def fspl_amplitude(r, f):
    """Free-space amplitude factor ``c / (4 pi r f)``; its square is the power gain."""
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0) or np.any(np.asarray(f) <= 0):
        raise ValueError("range and frequency must be positive")
    return SPEED_OF_LIGHT / (4.0 * np.pi * r * f)


def subcarrier_frequencies(config: ScenarioConfig) -> np.ndarray:
    n = np.arange(config.n_subcarriers)
    return config.carrier_freq + (n - config.n_subcarriers / 2) * config.subcarrier_spacing


def _axis_response(direction_cos, n_elem: int, scale):
    """ULA response ``exp(-j * scale * i * direction_cos) / sqrt(n_elem)`` over a trailing axis."""
    i = np.arange(n_elem)
    phase = -np.multiply.outer(np.asarray(scale * direction_cos), i)
    return np.exp(1j * phase) / np.sqrt(n_elem)


def array_response(theta, phi, dims: tuple[int, int], f_n: float, d_s: float = 0.5,
                   carrier_freq: float | None = None) -> np.ndarray:
    """UPA response vector(s) for zenith ``theta`` and azimuth ``phi`` (radians).

    ``d_s`` is the element spacing as a fraction of the carrier wavelength;
    ``carrier_freq`` defaults to ``f_n``. Broadcasts over the angle arrays and
    returns shape ``(..., n_x * n_y)`` ordered as ``kron(a_x, a_y)``.
    """
    n_x, n_y = dims
    if n_x < 1 or n_y < 1:
        raise ValueError("array dimensions must be positive")
    f_c = f_n if carrier_freq is None else carrier_freq
    scale = 2.0 * np.pi * d_s * f_n / f_c
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    ax = _axis_response(np.sin(theta) * np.cos(phi), n_x, scale)
    ay = _axis_response(np.sin(theta) * np.sin(phi), n_y, scale)
    return _kron_last(ax, ay)


def _kron_last(ax: np.ndarray, ay: np.ndarray) -> np.ndarray:
    out = ax[..., :, None] * ay[..., None, :]
    return out.reshape(out.shape[:-2] + (ax.shape[-1] * ay.shape[-1],))


@dataclass(frozen=True)
class ChannelRealization:
    """All ``(m, k, n)`` channels of one drop, stored per link.

    ``active`` marks links that carry signal (visible links); inactive links
    are kept for bookkeeping but contribute nothing in ``gain``.
    """

    pathloss_amp: np.ndarray
    alpha: np.ndarray
    sat_dir: tuple[np.ndarray, np.ndarray]
    ut_dir: tuple[np.ndarray, np.ndarray]
    active: np.ndarray
    freq_ratio: np.ndarray
    sat_dims: tuple[int, int]
    ut_dims: tuple[int, int]
    spacing: float

    @property
    def shape(self) -> tuple[int, int]:
        return self.pathloss_amp.shape

    @property
    def n_subcarriers(self) -> int:
        return self.freq_ratio.shape[0]

    @property
    def frequency_flat(self) -> bool:
        return bool(np.all(self.freq_ratio == 1.0))

    @property
    def beta(self) -> np.ndarray:
        return self.pathloss_amp**2

    @property
    def gain(self) -> np.ndarray:
        """Complex link gain ``sqrt(beta) * alpha`` with inactive links zeroed."""
        return np.where(self.active, self.pathloss_amp * self.alpha, 0.0)

    def _ratio(self, n) -> float:
        return 1.0 if n is None else float(self.freq_ratio[n])

    def sat_axes(self, n=None):
        """Per-axis satellite responses ``(a_x, a_y)`` of shape (M, K, n_x) / (M, K, n_y).

        ``n`` selects a subcarrier; ``None`` evaluates at the carrier.
        """
        scale = 2.0 * np.pi * self.spacing * self._ratio(n)
        return (_axis_response(self.sat_dir[0], self.sat_dims[0], scale),
                _axis_response(self.sat_dir[1], self.sat_dims[1], scale))

    def sat_axes_all(self):
        """Per-axis satellite responses on every subcarrier, shape (M, K, N, n_x) / (M, K, N, n_y)."""
        scale = 2.0 * np.pi * self.spacing * self.freq_ratio
        return tuple(_axis_response(d[..., None] * scale, dim, 1.0)
                     for d, dim in zip(self.sat_dir, self.sat_dims))

    def ut_response_all(self) -> np.ndarray:
        """UT responses on every subcarrier, shape (M, K, N, N_rx)."""
        scale = 2.0 * np.pi * self.spacing * self.freq_ratio
        ax, ay = (_axis_response(d[..., None] * scale, dim, 1.0)
                  for d, dim in zip(self.ut_dir, self.ut_dims))
        return _kron_last(ax, ay)

    def sat_response(self, n=None) -> np.ndarray:
        return _kron_last(*self.sat_axes(n))

    def ut_response(self, n=None) -> np.ndarray:
        scale = 2.0 * np.pi * self.spacing * self._ratio(n)
        return _kron_last(_axis_response(self.ut_dir[0], self.ut_dims[0], scale),
                          _axis_response(self.ut_dir[1], self.ut_dims[1], scale))

    def matrix(self, m: int, k: int, n=None) -> np.ndarray:
        """Assembled ``N_rx x N_tx`` channel of link ``(m, k)``."""
        scale = 2.0 * np.pi * self.spacing * self._ratio(n)
        a_sat = _kron_last(_axis_response(self.sat_dir[0][m, k], self.sat_dims[0], scale),
                           _axis_response(self.sat_dir[1][m, k], self.sat_dims[1], scale))
        a_ut = _kron_last(_axis_response(self.ut_dir[0][m, k], self.ut_dims[0], scale),
                          _axis_response(self.ut_dir[1][m, k], self.ut_dims[1], scale))
        return self.gain[m, k] * np.outer(a_ut, a_sat.conj())

    def sat_correlation(self, n=None) -> np.ndarray:
        """``rho[m, k, k'] = a_sat[m, k]^H a_sat[m, k']`` via the per-axis factorization."""
        ax, ay = self.sat_axes(n)
        return (np.einsum("mki,mli->mkl", ax.conj(), ax)
                * np.einsum("mki,mli->mkl", ay.conj(), ay))


def build_channels(geom: GeometrySample, config: ScenarioConfig,
                   rng: np.random.Generator) -> ChannelRealization:
    """Channels for one drop; one uniform phase per link, shared by all subcarriers."""
    amp = fspl_amplitude(geom.slant_range, config.carrier_freq)
    psi = rng.uniform(0.0, 2.0 * np.pi, size=geom.slant_range.shape)
    if config.beam_squint:
        ratio = subcarrier_frequencies(config) / config.carrier_freq
    else:
        ratio = np.ones(config.n_subcarriers)
    sat_st = np.sin(geom.sat_theta)
    ut_st = np.sin(geom.ut_theta)
    return ChannelRealization(
        pathloss_amp=amp,
        alpha=np.exp(1j * psi),
        sat_dir=(sat_st * np.cos(geom.sat_phi), sat_st * np.sin(geom.sat_phi)),
        ut_dir=(ut_st * np.cos(geom.ut_phi), ut_st * np.sin(geom.ut_phi)),
        active=geom.visible.copy(),
        freq_ratio=ratio,
        sat_dims=tuple(config.sat_array),
        ut_dims=tuple(config.ut_array),
        spacing=config.antenna_spacing,
    )
