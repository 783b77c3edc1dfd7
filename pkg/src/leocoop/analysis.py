"""Closed-form ergodic expectations and the CP-length trade-off bound.

With a random sync point each visible satellite lands in the additional-CP
window independently with probability ``p = L/(N + L)``, so the attach count
is binomial. Offsets of interfering links are uniform over the symbol,
which yields the window factors returned by :func:`window_factors`.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .config import SPEED_OF_LIGHT, ScenarioConfig


@dataclass(frozen=True)
class AnalyticInputs:
    """Inputs of the closed forms.

    ``pfd0`` is the per-subcarrier received power of a PFD-limited link,
    ``PFD * c^2 / (4 pi f_c^2)``; ``noise`` is per subcarrier. ``rho2``
    defaults to ``1 / n_tx``. ``cp_len`` only enters when ``include_cp`` is
    set, lengthening the symbol without widening the attach window.
    """

    M: int
    K: int
    N: int
    L_add: int
    pfd0: float
    noise: float
    n_tx: int
    mu1: float = 1.0
    mu2: float = 1.0
    rho2: float | None = None
    cp_len: int = 0
    include_cp: bool = False

    def __post_init__(self):
        if self.M < 1 or self.K < 1 or self.N < 1 or self.n_tx < 1:
            raise ValueError("M, K, N and n_tx must be positive")
        if not 0 <= self.L_add <= self.N:
            raise ValueError("L_add must lie in [0, N]")
        if self.mu2 < self.mu1**2 - 1e-15:
            raise ValueError("mu2 must be at least mu1^2")
        if self.pfd0 <= 0 or self.noise < 0:
            raise ValueError("pfd0 must be positive and noise non-negative")

    @property
    def correlation(self) -> float:
        return 1.0 / self.n_tx if self.rho2 is None else self.rho2

    @property
    def symbol_len(self) -> int:
        return self.N + self.L_add + (self.cp_len if self.include_cp else 0)

    @property
    def p_cp(self) -> float:
        return self.L_add / self.symbol_len

    def with_(self, **changes) -> "AnalyticInputs":
        return replace(self, **changes)


def received_pfd_power(config: ScenarioConfig) -> float:
    """``PFD0``: per-subcarrier power of one PFD-limited satellite at the UT."""
    pfd = 10.0 ** (config.pfd_limit / 10.0) * config.subcarrier_spacing / 4000.0
    return pfd * SPEED_OF_LIGHT**2 / (4.0 * np.pi * config.carrier_freq**2)


def from_config(config: ScenarioConfig, M: int | None = None, K: int | None = None,
                include_cp: bool = False, **overrides) -> AnalyticInputs:
    inputs = AnalyticInputs(
        M=config.n_sats if M is None else M,
        K=config.n_uts if K is None else K,
        N=config.n_subcarriers,
        L_add=config.cp_add,
        pfd0=received_pfd_power(config),
        noise=config.noise_per_subcarrier(),
        n_tx=config.n_tx,
        cp_len=config.cp_len,
        include_cp=include_cp,
    )
    return inputs.with_(**overrides) if overrides else inputs


def window_factors(N, L):
    """Expected in-window energy squared, ICI and ISI energy for uniform offsets.

    Returns ``((N/3 + L)/(N + L), N/(6(N + L)), N/(2(N + L)))``; the three sum to 1.
    """
    N = np.asarray(N, dtype=float)
    L = np.asarray(L, dtype=float)
    total = N + L
    return (N / 3.0 + L) / total, N / (6.0 * total), N / (2.0 * total)


def expected_desired(inputs: AnalyticInputs) -> float:
    """``PFD0 (mu2 + (M p - 1) mu1^2)``."""
    mp = inputs.M * inputs.p_cp
    return inputs.pfd0 * (inputs.mu2 + (mp - 1.0) * inputs.mu1**2)


def expected_interference(inputs: AnalyticInputs) -> tuple[float, float, float]:
    """Expected (MUI, ICI, ISI) power from the other ``K - 1`` users."""
    scale = (inputs.K - 1) * inputs.pfd0 * inputs.correlation
    f_mui, f_ici, f_isi = window_factors(inputs.N, inputs.L_add)
    return scale * float(f_mui), scale * float(f_ici), scale * float(f_isi)


def spectral_efficiency_bound(inputs: AnalyticInputs) -> float:
    """``N^2/(N + L) log2(1 + PFD0 M p / ((K - 1) PFD0 rho^2 + noise))``.

    Units are bits/s/Hz summed over subcarriers; divide by ``N`` to compare
    with a simulated rate divided by the full bandwidth.
    """
    N = inputs.N
    signal = inputs.pfd0 * inputs.M * inputs.p_cp
    interference = (inputs.K - 1) * inputs.pfd0 * inputs.correlation + inputs.noise
    if interference == 0:
        return float("inf") if signal > 0 else 0.0
    return N**2 / inputs.symbol_len * np.log2(1.0 + signal / interference)


def bound_curve(inputs: AnalyticInputs, grid) -> np.ndarray:
    return np.array([spectral_efficiency_bound(inputs.with_(L_add=int(L))) for L in grid])


def optimal_cp_length(inputs: AnalyticInputs, grid) -> int:
    """Grid point maximizing the bound; ties go to the smaller ``L_add``."""
    grid = np.asarray(list(grid), dtype=int)
    if grid.size == 0:
        raise ValueError("grid must be nonempty")
    order = np.argsort(grid, kind="stable")
    values = bound_curve(inputs, grid[order])
    return int(grid[order][int(np.argmax(values))])
