"""Sample offsets, ICI/ISI leakage coefficients, and a time-domain oracle.

For a residual offset ``delta`` against a CP window ``guard``, only the
excess ``Delta = max(delta - guard, 0)`` samples spill into the previous
symbol. Received subcarrier ``n`` picks up transmitted subcarrier ``n'`` with

    A[n, n'] = (1/N) exp(-j 2 pi n' delta / N) sum_{l=Delta}^{N-1} exp(j 2 pi (n'-n) l / N)
    B[n, n'] = (1/N) exp(-j 2 pi n' delta / N) sum_{l=0}^{Delta-1} exp(j 2 pi (n'-n) l / N)

from the current and previous symbol respectively.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Guards floor() against representation error when tau / T_s is an integer.
_FLOOR_TOL = 1e-9


@dataclass(frozen=True)
class SampleOffset:
    """Residual offset ``delta`` and its excess ``Delta`` past the CP window ``guard``.

    Fields may be scalars or equally shaped integer arrays.
    """

    delta: np.ndarray | int
    excess: np.ndarray | int
    guard: int


@dataclass(frozen=True)
class LeakagePair:
    A: complex
    B: complex
    n: int
    n_prime: int
    offset: SampleOffset


def delay_samples(tau, sampling_period: float):
    """Whole-sample part of a propagation delay, ``floor(tau / T_s)``."""
    return np.floor(np.asarray(tau, dtype=float) / sampling_period + _FLOOR_TOL).astype(np.int64)


def offset_from_samples(samples, s, symbol_len: int, guard: int) -> SampleOffset:
    delta = np.mod(np.asarray(samples, dtype=np.int64) - np.asarray(s, dtype=np.int64), symbol_len)
    excess = np.maximum(delta - guard, 0)
    if delta.ndim == 0:
        return SampleOffset(int(delta), int(excess), guard)
    return SampleOffset(delta, excess, guard)


def sample_offset(tau, sampling_period: float, s, symbol_len: int, guard: int) -> SampleOffset:
    """Residual offset of a link after the UT syncs at sample ``s``.

    ``delta = (floor(tau / T_s) - s) mod symbol_len`` and
    ``Delta = max(delta - guard, 0)``. Broadcasts over ``tau`` and ``s``.
    """
    if np.any(np.asarray(tau) < 0):
        raise ValueError("delay must be non-negative")
    return offset_from_samples(delay_samples(tau, sampling_period), s, symbol_len, guard)


def _check(n, n_prime, excess, N):
    if np.any((np.asarray(n) < 0) | (np.asarray(n) >= N) | (np.asarray(n_prime) < 0) | (np.asarray(n_prime) >= N)):
        raise ValueError("subcarrier index out of range")
    if np.any((np.asarray(excess) < 0) | (np.asarray(excess) > N)):
        raise ValueError("excess offset must lie in [0, N]")


def _window_sum(d, start, stop, N):
    """``sum_{l=start}^{stop-1} exp(j 2 pi d l / N)`` in closed form, ``d`` an integer array."""
    d = np.mod(d, N)
    w = np.exp(2j * np.pi * d / N)
    same = d == 0
    denom = np.where(same, 1.0, 1.0 - w)
    geo = (w ** start - w ** stop) / denom
    return np.where(same, stop - start, geo)


def ici_leakage(n, n_prime, delta, excess, N: int):
    """ICI leakage ``A[n, n']`` (current-symbol part). Broadcasts over all arguments."""
    _check(n, n_prime, excess, N)
    n, n_prime = np.asarray(n), np.asarray(n_prime)
    delta, excess = np.asarray(delta), np.asarray(excess)
    rot = np.exp(-2j * np.pi * np.mod(n_prime * delta, N) / N)
    # w**Delta - w**N with w**N == 1 exactly for integer d
    d = np.mod(n_prime - n, N)
    w = np.exp(2j * np.pi * d / N)
    off = (np.exp(2j * np.pi * np.mod(d * excess, N) / N) - 1.0) / np.where(d == 0, 1.0, 1.0 - w)
    s = np.where(d == 0, N - excess, off)
    return rot * s / N


def isi_leakage(n, n_prime, delta, excess, N: int):
    """ISI leakage ``B[n, n']`` (previous-symbol part). Broadcasts over all arguments."""
    _check(n, n_prime, excess, N)
    n, n_prime = np.asarray(n), np.asarray(n_prime)
    delta, excess = np.asarray(delta), np.asarray(excess)
    rot = np.exp(-2j * np.pi * np.mod(n_prime * delta, N) / N)
    d = np.mod(n_prime - n, N)
    w = np.exp(2j * np.pi * d / N)
    off = (1.0 - np.exp(2j * np.pi * np.mod(d * excess, N) / N)) / np.where(d == 0, 1.0, 1.0 - w)
    s = np.where(d == 0, excess, off)
    return rot * s / N


def leakage_pair(n: int, n_prime: int, offset: SampleOffset, N: int) -> LeakagePair:
    return LeakagePair(
        A=complex(ici_leakage(n, n_prime, offset.delta, offset.excess, N)),
        B=complex(isi_leakage(n, n_prime, offset.delta, offset.excess, N)),
        n=n,
        n_prime=n_prime,
        offset=offset,
    )


def leakage_matrices(delta, excess, N: int) -> tuple[np.ndarray, np.ndarray]:
    """Full ``A`` and ``B`` matrices indexed ``[..., n, n']`` for each offset in ``delta``."""
    delta = np.asarray(delta)[..., None, None]
    excess = np.asarray(excess)[..., None, None]
    n = np.arange(N)[:, None]
    n_prime = np.arange(N)[None, :]
    return ici_leakage(n, n_prime, delta, excess, N), isi_leakage(n, n_prime, delta, excess, N)


def leakage_sums(delta, excess, N: int) -> tuple[np.ndarray, np.ndarray]:
    """Reference ``A`` and ``B`` matrices by explicit summation over ``l`` (slow)."""
    ell = np.arange(N)
    n = np.arange(N)[:, None, None]
    n_prime = np.arange(N)[None, :, None]
    terms = np.exp(2j * np.pi * (n_prime - n) * ell / N)
    rot = np.exp(-2j * np.pi * n_prime[..., 0] * delta / N)
    A = rot * np.sum(terms * (ell >= excess), axis=-1) / N
    B = rot * np.sum(terms * (ell < excess), axis=-1) / N
    return A, B


def leakage_row_energy(delta, excess, N: int, check: bool = False):
    """Row energies ``(sum_n' |A|^2, sum_n' |B|^2) = ((N - Delta)/N, Delta/N)``.

    With ``check`` the closed form is compared against explicit summation of
    the leakage matrix rows and columns.
    """
    excess_arr = np.asarray(excess, dtype=float)
    ici = (N - excess_arr) / N
    isi = excess_arr / N
    if check:
        A, B = leakage_matrices(delta, excess, N)
        for axis in (-1, -2):
            ea = np.sum(np.abs(A) ** 2, axis=axis)
            eb = np.sum(np.abs(B) ** 2, axis=axis)
            if not (np.allclose(ea, ici[..., None], atol=1e-10, rtol=0)
                    and np.allclose(eb, isi[..., None], atol=1e-10, rtol=0)):
                raise AssertionError("leakage row energies disagree with explicit summation")
    if np.ndim(ici) == 0:
        return float(ici), float(isi)
    return ici, isi


# ---------------------------------------------------------------------------
# time-domain oracle


@dataclass(frozen=True)
class OraclePowers:
    """Empirical per-(k, n) powers with standard errors of the trial means.

    ``totals`` holds per-term sums over all active (k, n) cells and
    ``totals_se`` their standard errors.
    """

    desired: np.ndarray
    mui: np.ndarray
    ici: np.ndarray
    isi: np.ndarray
    self_ici: np.ndarray
    self_isi: np.ndarray
    totals: dict
    totals_se: dict
    n_symbols: int


def _cp_stream(x_time: np.ndarray, guard: int) -> np.ndarray:
    """Prepend the last ``guard`` samples along axis 1."""
    if guard == 0:
        return x_time
    return np.concatenate([x_time[:, -guard:], x_time], axis=1)


def time_domain_oracle(channels, precoders, combiners, decision, n_symbols: int,
                       rng: np.random.Generator, n_batches: int = 40) -> OraclePowers:
    """Measure desired/MUI/ICI/ISI powers by simulating sample streams.

    Each satellite maps precoded subcarrier data through an orthonormal IFFT
    per antenna, prepends the CP, and transmits two consecutive symbols. The
    UT sees every satellite's stream shifted by its integer residual offset,
    drops the CP at its sync point, applies the FFT and its combiner. Every
    source (stream k', current or previous symbol) is simulated in isolation
    with unit-power complex Gaussian data.

    For a current-symbol source the output on subcarrier ``n`` is
    ``z = c d_n + w`` with leakage ``w`` independent of ``d_n``. Per batch,
    ``c`` is fitted by least squares; ``RSS/(T-1)`` estimates the leakage
    power and ``|c_hat|^2 - sigma_hat^2 / sum|d|^2`` the same-subcarrier
    power, both without bias. Standard errors come from batch means.

    Requires frequency-flat channels (no beam squint) and integer offsets.
    """
    if not channels.frequency_flat:
        raise ValueError("time-domain oracle needs frequency-flat channels")
    serving = np.asarray(decision.serving)
    if np.any(serving & ~np.asarray(channels.active)):
        raise ValueError("association references invisible satellites")
    if n_batches < 2 or n_symbols < 2 * n_batches:
        raise ValueError("need at least two batches of two symbols")

    M, K = channels.shape
    N = channels.n_subcarriers
    G = decision.offset.guard
    S = N + G
    delta = np.asarray(decision.offset.delta)
    active = np.asarray(decision.active, dtype=bool)

    H = np.array([[channels.matrix(m, k) for k in range(K)] for m in range(M)])  # (M,K,Nrx,Ntx)
    V = precoders.all_vectors()  # (M,K,N,Ntx)
    U = combiners.u  # (K,N,Nrx)

    names = ("desired", "mui", "ici", "isi", "self_ici", "self_isi")
    # per-batch, per-(k, n) estimates
    est = {name: np.zeros((n_batches, K, N)) for name in names}
    edges = np.linspace(0, n_symbols, n_batches + 1).astype(int)
    data_rng = np.random.default_rng(rng.integers(0, 2**63 - 1))

    for k_src in range(K):
        for current in (True, False):
            for b in range(n_batches):
                T = edges[b + 1] - edges[b]
                D = (data_rng.standard_normal((T, N)) + 1j * data_rng.standard_normal((T, N))) / np.sqrt(2.0)
                z = _receive(H, V, U, delta, k_src, D, S, G, N, current=current)  # (T,K,N)
                total = np.mean(np.abs(z) ** 2, axis=0)  # (K,N)
                if not current:
                    est["isi"][b] += total
                    est["self_isi"][b, k_src] += total[k_src]
                    continue
                energy = np.sum(np.abs(D) ** 2, axis=0)  # (N,)
                c_hat = np.einsum("tkn,tn->kn", z, D.conj()) / energy
                resid = z - c_hat[None] * D[:, None, :]
                leak = np.sum(np.abs(resid) ** 2, axis=0) / (T - 1)
                diag = np.abs(c_hat) ** 2 - leak / energy
                est["mui"][b] += diag
                est["mui"][b, k_src] -= diag[k_src]
                est["desired"][b, k_src] += diag[k_src]
                est["ici"][b] += leak
                est["self_ici"][b, k_src] += leak[k_src]

    means = {name: v.mean(axis=0) for name, v in est.items()}
    totals, totals_se = {}, {}
    for name in ("desired", "mui", "ici", "isi"):
        per_batch = est[name][:, active].sum(axis=(1, 2))
        totals[name] = float(per_batch.mean())
        totals_se[name] = float(per_batch.std(ddof=1) / np.sqrt(n_batches))
    return OraclePowers(totals=totals, totals_se=totals_se, n_symbols=n_symbols, **means)


def _receive(H, V, U, delta, k_src, D, S, G, N, current: bool):
    """Combined FFT outputs ``z[t, k, n]`` at every UT for stream ``k_src`` alone."""
    M, K = H.shape[:2]
    T = D.shape[0]
    n_rx = H.shape[2]
    z = np.zeros((T, K, N), dtype=complex)
    for m in range(M):
        v = V[m, k_src]  # (N, Ntx)
        if not np.any(v):
            continue
        X = D[:, :, None] * v[None]  # (T, N, Ntx)
        x = np.fft.ifft(X, axis=1, norm="ortho")
        sym = _cp_stream(x, G)  # (T, S, Ntx)
        zeros = np.zeros_like(sym)
        stream = np.concatenate([zeros, sym] if current else [sym, zeros], axis=1)
        for k in range(K):
            if not np.any(H[m, k]):
                continue
            d = int(delta[m, k])
            window = stream[:, S + G - d: S + G - d + N]  # (T, N, Ntx)
            y = window @ H[m, k].T  # (T, N, Nrx)
            Y = np.fft.fft(y, axis=1, norm="ortho")
            z[:, k] += np.einsum("nr,tnr->tn", U[k].conj(), Y) if n_rx > 1 else Y[..., 0] * U[k, :, 0].conj()
    return z
