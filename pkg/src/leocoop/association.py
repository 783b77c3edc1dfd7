"""Association modes and the downlink sync-point optimizer.

A UT that anchors its FFT window at sample ``s`` sees satellite ``m`` with
residual offset ``delta = (d_m - s) mod S`` where ``d_m`` is the whole-sample
delay and ``S`` the symbol length. In the proposed mode a satellite is
attachable when ``delta <= L_add``, i.e. when ``s`` lies in the circular
interval ``[d_m - L_add, d_m]``. Counting attachable satellites for every
``s`` is therefore a circular interval-coverage count.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .config import ASSOCIATION_MODES, SYNC_MODES, ScenarioConfig
from .geometry import GeometrySample
from .ofdm import SampleOffset, delay_samples, offset_from_samples

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class AssociationDecision:
    """Per-drop association. Arrays are indexed ``[m, k]`` or ``[k]``.

    ``active`` marks UTs with at least one visible satellite; inactive UTs
    have empty serving sets and are excluded from statistics.
    """

    mode: str
    sync_mode: str
    sync: np.ndarray
    serving: np.ndarray
    candidates: np.ndarray
    offset: SampleOffset
    symbol_len: int
    active: np.ndarray

    @property
    def serving_count(self) -> np.ndarray:
        return self.serving.sum(axis=0)

    @property
    def n_excluded(self) -> int:
        return int(np.sum(~self.active))

    def serving_set(self, k: int) -> np.ndarray:
        return np.flatnonzero(self.serving[:, k])


def attach_counts(samples, visible, symbol_len: int, window: int) -> np.ndarray:
    """Number of satellites with ``(d - s) mod S <= window`` for every ``s`` in ``[0, S)``.

    ``samples`` and ``visible`` are (M,) or (M, K); returns (S,) or (K, S).
    Built from a difference array in O(M + S) per UT.
    """
    samples = np.asarray(samples, dtype=np.int64)
    visible = np.asarray(visible, dtype=bool)
    squeeze = samples.ndim == 1
    if squeeze:
        samples, visible = samples[:, None], visible[:, None]
    if window >= symbol_len:
        counts = np.broadcast_to(visible.sum(axis=0)[:, None], (samples.shape[1], symbol_len)).copy()
        return counts[0] if squeeze else counts
    M, K = samples.shape
    S = symbol_len
    end = np.mod(samples, S)  # last s that captures the satellite
    start = end - window  # may be negative: the interval wraps
    diff = np.zeros((K, S + 1), dtype=np.int64)
    kk = np.broadcast_to(np.arange(K), (M, K))
    vis = visible.astype(np.int64)
    lo = np.mod(start, S)
    # +1 at the interval start, -1 past its end; a wrapped interval also covers [0, end]
    np.add.at(diff, (kk, lo), vis)
    np.add.at(diff, (kk, end + 1), -vis)
    np.add.at(diff, (kk, np.zeros_like(end)), np.where(start < 0, vis, 0))
    counts = np.cumsum(diff[:, :S], axis=1)
    return counts[0] if squeeze else counts


def attachable_set(delays, visible, s: int, config: ScenarioConfig) -> np.ndarray:
    """Indices of visible satellites whose residual offset at ``s`` is within ``L_add``."""
    samples = delay_samples(delays, config.sampling_period)
    off = offset_from_samples(samples, s, config.symbol_len("proposed"), config.guard("proposed"))
    return np.flatnonzero(np.asarray(visible, dtype=bool) & (np.asarray(off.delta) <= config.cp_add))


def _search_len(config: ScenarioConfig) -> int:
    if config.sync_search == "symbol":
        return config.symbol_len("proposed")
    return config.n_subcarriers


def optimize_sync(delays, visible, config: ScenarioConfig):
    """Sync point maximizing the attachable-set size; ties go to the smallest ``s``.

    The search covers ``[0, N)`` or, with ``sync_search = "symbol"``, the
    whole symbol. Works on (M,) inputs (returns an int) or (M, K) inputs
    (returns one ``s`` per UT).
    """
    samples = delay_samples(delays, config.sampling_period)
    counts = attach_counts(samples, visible, config.symbol_len("proposed"), config.cp_add)
    best = np.argmax(counts[..., :_search_len(config)], axis=-1)
    return int(best) if np.ndim(best) == 0 else best


def associate(mode: str, geom: GeometrySample, config: ScenarioConfig,
              rng: np.random.Generator | None = None, sync_mode: str | None = None) -> AssociationDecision:
    """Serving sets, sync points and residual offsets for one drop.

    Baselines anchor each UT on its nearest visible satellite (``delta = 0``
    there) and use the conventional CP. The proposed mode picks ``s`` at
    random in ``[0, N)`` or by :func:`optimize_sync` and serves every visible
    satellite inside the additional-CP window.
    """
    if mode not in ASSOCIATION_MODES:
        raise ValueError(f"unknown association mode {mode!r}")
    sync_mode = sync_mode or config.sync_mode
    if sync_mode not in SYNC_MODES:
        raise ValueError(f"unknown sync mode {sync_mode!r}")

    visible = np.asarray(geom.visible, dtype=bool)
    M, K = visible.shape
    active = visible.any(axis=0)
    samples = delay_samples(geom.delay, config.sampling_period)
    S = config.symbol_len(mode)
    guard = config.guard(mode)

    if mode == "proposed":
        if sync_mode == "random":
            if rng is None:
                raise ValueError("random sync needs an rng")
            sync = rng.integers(0, config.n_subcarriers, size=K)
        else:
            sync = np.atleast_1d(optimize_sync(geom.delay, visible, config))
        sync = np.where(active, sync, 0)
        offset = offset_from_samples(samples, sync[None, :], S, guard)
        serving = visible & (offset.delta <= config.cp_add)
        candidates = visible & (offset.delta <= config.cp_add + config.cp_margin)
    else:
        r = np.where(visible, geom.slant_range, np.inf)
        nearest = np.argmin(r, axis=0)
        sync = np.where(active, np.mod(samples[nearest, np.arange(K)], S), 0)
        offset = offset_from_samples(samples, sync[None, :], S, guard)
        if mode == "single":
            serving = np.zeros_like(visible)
            serving[nearest, np.arange(K)] = True
            serving &= active[None, :]
        else:
            serving = visible.copy()
        candidates = serving.copy()

    n_out = int(np.sum(~active))
    if n_out:
        log.info("%d of %d UTs see no satellite and are excluded", n_out, K)
    return AssociationDecision(mode=mode, sync_mode=sync_mode if mode == "proposed" else "anchored",
                               sync=np.asarray(sync, dtype=np.int64), serving=serving,
                               candidates=candidates, offset=offset, symbol_len=S, active=active)


def sync_demo_counts(geom: GeometrySample, config: ScenarioConfig, rng: np.random.Generator):
    """Attach counts ``|M_k|`` under random and optimized sync for one drop."""
    rand = associate("proposed", geom, config, rng, sync_mode="random")
    opt = associate("proposed", geom, config, rng, sync_mode="optimized")
    return rand.serving_count, opt.serving_count
