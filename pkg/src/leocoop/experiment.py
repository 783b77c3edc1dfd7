"""Monte Carlo campaigns: seeding, parallel drops, statistics and CSV/SVG output.

Every drop draws its geometry, channel phases and random sync points from
streams spawned off ``SeedSequence([seed, point, drop])``. All schemes of a
drop share those draws, so scheme comparisons are paired.
"""

from __future__ import annotations

import csv
import io
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .association import associate
from .beamforming import build_combiners, build_precoders
from .channel import build_channels
from .config import SYNC_MODES, ScenarioConfig
from .geometry import sample_geometry
from .link_eval import evaluate_link

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1
AXES = ("none", "n_sats", "n_uts", "cp_add", "sync_mode")
SCHEMES = ("single", "full", "proposed", "proposed-random", "proposed-optimized")
WORKERS_ENV = "LEOCOOP_WORKERS"

RECORD_FIELDS = ("point", "value", "drop", "k", "mode", "attach", "rate", "spectral_efficiency",
                 "mean_sinr", "desired", "mui", "ici", "isi", "noise")
SUMMARY_FIELDS = ("point", "value", "mode", "mean_R", "median_R", "stderr", "mean_attach",
                  "mean_SE", "n_records", "n_excluded")


@dataclass(frozen=True)
class CampaignSpec:
    """What to run. ``schemes`` are association modes, optionally suffixed
    with ``-random``/``-optimized`` to pin the proposed mode's sync rule.

    With ``pair_points`` the drop seeds ignore the point index, so a sweep
    over ``cp_add`` or ``sync_mode`` reuses the same geometry at every point.
    """

    base: ScenarioConfig
    axis: str = "none"
    values: tuple = ()
    drops: int = 1
    out_dir: Path | None = None
    emit_plots: bool = False
    schemes: tuple[str, ...] = ("single", "full", "proposed")
    pair_points: bool = False
    workers: int | None = None

    def __post_init__(self):
        if self.drops < 1:
            raise ValueError("drops must be at least 1")
        if self.axis not in AXES:
            raise ValueError(f"axis must be one of {AXES}")
        if self.axis == "none" and self.values:
            raise ValueError("values given without a sweep axis")
        if self.axis != "none" and not self.values:
            raise ValueError("sweep axis needs values")
        for s in self.schemes:
            if s not in SCHEMES:
                raise ValueError(f"unknown scheme {s!r}; choose from {SCHEMES}")
        if not self.schemes:
            raise ValueError("at least one scheme is required")
        # validate every point eagerly
        for i in range(self.n_points):
            self.point_config(i)

    @property
    def n_points(self) -> int:
        return max(len(self.values), 1)

    def point_config(self, i: int) -> ScenarioConfig:
        if self.axis == "none":
            return self.base
        value = self.values[i]
        if self.axis == "sync_mode":
            if value not in SYNC_MODES:
                raise ValueError(f"sync_mode values must be in {SYNC_MODES}")
            return self.base.with_(sync_mode=value)
        return self.base.with_(**{self.axis: int(value)})

    def point_value(self, i: int):
        return "" if self.axis == "none" else self.values[i]


@dataclass
class CampaignResult:
    spec: CampaignSpec
    records: list[dict]
    excluded: dict = field(default_factory=dict)

    def rates(self, mode: str, point: int = 0) -> np.ndarray:
        return np.array([r["rate"] for r in self.records if r["mode"] == mode and r["point"] == point])

    def column(self, name: str, mode: str, point: int = 0) -> np.ndarray:
        return np.array([r[name] for r in self.records if r["mode"] == mode and r["point"] == point])

    def drop_ids(self, mode: str, point: int = 0) -> np.ndarray:
        return np.array([r["drop"] for r in self.records if r["mode"] == mode and r["point"] == point])

    def summary(self) -> list[dict]:
        rows = []
        for p in range(self.spec.n_points):
            for mode in self.spec.schemes:
                rate = self.rates(mode, p)
                drops = self.drop_ids(mode, p)
                rows.append({
                    "point": p,
                    "value": self.spec.point_value(p),
                    "mode": mode,
                    "mean_R": float(rate.mean()) if rate.size else float("nan"),
                    "median_R": float(np.median(rate)) if rate.size else float("nan"),
                    "stderr": _cluster_stderr(rate, drops),
                    "mean_attach": float(self.column("attach", mode, p).mean()) if rate.size else float("nan"),
                    "mean_SE": float(self.column("spectral_efficiency", mode, p).mean()) if rate.size else float("nan"),
                    "n_records": int(rate.size),
                    "n_excluded": int(self.excluded.get(p, 0)),
                })
        return rows


def _cluster_stderr(values: np.ndarray, groups: np.ndarray) -> float:
    """Standard error of the mean treating each drop as one independent cluster."""
    ids = np.unique(groups)
    if ids.size < 2:
        return float("nan")
    means = np.array([values[groups == g].mean() for g in ids])
    return float(means.std(ddof=1) / np.sqrt(ids.size))


def drop_seed(seed: int, point: int, drop: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([seed, point, drop])


def _split_scheme(scheme: str, config: ScenarioConfig) -> tuple[str, str]:
    mode, _, sync = scheme.partition("-")
    return mode, sync or config.sync_mode


def evaluate_drop(config: ScenarioConfig, schemes, seed_seq: np.random.SeedSequence,
                  interference_mode: str | None = None, geometry=None):
    """Evaluate every scheme on one drop; returns (rows, excluded UT count)."""
    geo_ss, chan_ss, sync_ss = seed_seq.spawn(3)
    geom = geometry(config, np.random.default_rng(geo_ss)) if geometry else \
        sample_geometry(config, np.random.default_rng(geo_ss))
    channels = build_channels(geom, config, np.random.default_rng(chan_ss))
    rows, excluded = [], 0
    for scheme in schemes:
        mode, sync = _split_scheme(scheme, config)
        decision = associate(mode, geom, config, np.random.default_rng(sync_ss), sync_mode=sync)
        excluded = decision.n_excluded
        precoders = build_precoders(channels, decision, geom, config)
        combiners = build_combiners(channels, precoders, decision)
        report = evaluate_link(channels, precoders, combiners, decision, config, interference_mode)
        for row in report.rows():
            row["mode"] = scheme
            rows.append(row)
    return rows, excluded


def _run_task(task):
    point, value, drop, config, schemes, seed = task
    rows, excluded = evaluate_drop(config, schemes, drop_seed(*seed))
    for row in rows:
        row.update(point=point, value=value, drop=drop)
    return point, rows, excluded


def resolve_workers(requested: int | None = None) -> int:
    env = os.environ.get(WORKERS_ENV)
    if env:
        try:
            return max(int(env), 1)
        except ValueError:
            raise ValueError(f"{WORKERS_ENV} must be an integer, got {env!r}") from None
    if requested:
        return max(int(requested), 1)
    return os.cpu_count() or 1


def run_campaign(spec: CampaignSpec) -> CampaignResult:
    """Run all points and drops; records come back sorted regardless of scheduling."""
    tasks = []
    for p in range(spec.n_points):
        config = spec.point_config(p)
        for d in range(spec.drops):
            seed = (config.seed, 0 if spec.pair_points else p, d)
            tasks.append((p, spec.point_value(p), d, config, tuple(spec.schemes), seed))
    workers = min(resolve_workers(spec.workers), len(tasks))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outputs = list(pool.map(_run_task, tasks, chunksize=max(1, len(tasks) // (4 * workers))))
    else:
        outputs = [_run_task(t) for t in tasks]

    records, excluded = [], {}
    for point, rows, n_out in outputs:
        records.extend(rows)
        excluded[point] = excluded.get(point, 0) + n_out
    order = {s: i for i, s in enumerate(spec.schemes)}
    records.sort(key=lambda r: (r["point"], r["drop"], order[r["mode"]], r["k"]))
    result = CampaignResult(spec=spec, records=records, excluded=excluded)
    if spec.out_dir is not None:
        emit_outputs(result, spec)
    return result


# ---------------------------------------------------------------------------
# statistics


def ecdf(values) -> tuple[np.ndarray, np.ndarray]:
    """Sorted values and right-continuous cumulative fractions ``i/n``."""
    x = np.sort(np.asarray(values, dtype=float).ravel())
    if x.size == 0:
        raise ValueError("ecdf of an empty sample")
    return x, np.arange(1, x.size + 1) / x.size


def ecdf_quantile(values, q: float) -> float:
    """Smallest value whose ECDF reaches ``q``."""
    x, F = ecdf(values)
    return float(x[np.searchsorted(F, q - 1e-12)])


def bootstrap_ci(values, stat=np.median, n_boot: int = 2000, level: float = 0.95,
                 groups=None, seed: int = 0) -> tuple[float, float]:
    """Percentile bootstrap interval; with ``groups`` whole groups (drops) are resampled."""
    values = np.asarray(values, dtype=float)
    rng = np.random.default_rng(seed)
    if groups is None:
        idx = rng.integers(0, values.size, size=(n_boot, values.size))
        stats = np.array([stat(values[i]) for i in idx])
    else:
        groups = np.asarray(groups)
        ids = np.unique(groups)
        members = [np.flatnonzero(groups == g) for g in ids]
        stats = np.empty(n_boot)
        for b in range(n_boot):
            pick = rng.integers(0, ids.size, size=ids.size)
            stats[b] = stat(values[np.concatenate([members[i] for i in pick])])
    alpha = (1.0 - level) / 2.0
    lo, hi = np.quantile(stats, [alpha, 1.0 - alpha])
    return float(lo), float(hi)


def paired_bootstrap_ci(a, b, groups, stat=np.median, n_boot: int = 2000, level: float = 0.95,
                        seed: int = 0) -> tuple[float, float]:
    """Interval for ``stat(a) - stat(b)`` resampling drops jointly for both samples."""
    a, b, groups = np.asarray(a, float), np.asarray(b, float), np.asarray(groups)
    ids = np.unique(groups)
    members = [np.flatnonzero(groups == g) for g in ids]
    rng = np.random.default_rng(seed)
    stats = np.empty(n_boot)
    for i in range(n_boot):
        pick = np.concatenate([members[j] for j in rng.integers(0, ids.size, size=ids.size)])
        stats[i] = stat(a[pick]) - stat(b[pick])
    alpha = (1.0 - level) / 2.0
    lo, hi = np.quantile(stats, [alpha, 1.0 - alpha])
    return float(lo), float(hi)


# ---------------------------------------------------------------------------
# output


def _fmt(value) -> str:
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (np.integer,)):
        return str(int(value))
    return str(value)


def write_csv(path: Path, fieldnames, rows) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(fieldnames)
    for row in rows:
        writer.writerow([_fmt(row[f]) for f in fieldnames])
    try:
        Path(path).write_text(buf.getvalue(), encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc


def read_csv(path: Path) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def emit_outputs(result: CampaignResult, spec: CampaignSpec) -> list[Path]:
    """Write records, summary and per-scheme ECDF tables (plus SVG charts if asked)."""
    out = Path(spec.out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out}: {exc}") from exc
    written = []
    path = out / "records.csv"
    write_csv(path, RECORD_FIELDS, result.records)
    written.append(path)
    summary = result.summary()
    path = out / "summary.csv"
    write_csv(path, SUMMARY_FIELDS, summary)
    written.append(path)
    for mode in spec.schemes:
        rows = []
        for p in range(spec.n_points):
            rates = result.rates(mode, p)
            if rates.size == 0:
                continue
            x, F = ecdf(rates)
            rows.extend({"point": p, "value": spec.point_value(p), "rate": xi, "fraction": fi}
                        for xi, fi in zip(x, F))
        path = out / f"ecdf_{mode}.csv"
        write_csv(path, ("point", "value", "rate", "fraction"), rows)
        written.append(path)
    if spec.emit_plots:
        written.extend(_plots(result, spec, summary, out))
    return written


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    matplotlib.rcParams["svg.hashsalt"] = "leocoop"
    import matplotlib.pyplot as plt

    return plt


def save_svg(fig, path: Path) -> None:
    fig.savefig(path, format="svg", metadata={"Date": None})


def _plots(result: CampaignResult, spec: CampaignSpec, summary, out: Path) -> list[Path]:
    plt = _pyplot()
    written = []
    for p in range(spec.n_points):
        fig, ax = plt.subplots(figsize=(6, 4))
        for mode in spec.schemes:
            rates = result.rates(mode, p)
            if rates.size:
                x, F = ecdf(rates / 1e6)
                ax.step(x, F, where="post", label=mode)
        ax.set_xlabel("throughput per UT [Mbit/s]")
        ax.set_ylabel("ECDF")
        ax.legend()
        ax.grid(alpha=0.3)
        path = out / (f"ecdf_point{p}.svg" if spec.n_points > 1 else "ecdf.svg")
        save_svg(fig, path)
        plt.close(fig)
        written.append(path)
    if spec.axis not in ("none", "sync_mode"):
        fig, ax = plt.subplots(figsize=(6, 4))
        for mode in spec.schemes:
            rows = [r for r in summary if r["mode"] == mode]
            ax.plot([float(r["value"]) for r in rows], [r["mean_R"] / 1e6 for r in rows],
                    marker="o", label=mode)
        ax.set_xlabel(spec.axis)
        ax.set_ylabel("mean throughput per UT [Mbit/s]")
        ax.legend()
        ax.grid(alpha=0.3)
        path = out / "sweep.svg"
        save_svg(fig, path)
        plt.close(fig)
        written.append(path)
    return written


# ---------------------------------------------------------------------------
# sync demo, analytic curve, oracle check


def run_sync_demo(config: ScenarioConfig, drops: int, seed: int | None = None):
    """Attach counts of one UT at the cap center under random and optimized sync.

    Satellites are uniform over the UT's own coverage cap. Returns two integer
    arrays of length ``drops``.
    """
    from .association import sync_demo_counts
    from .geometry import sample_ut_centered

    seed = config.seed if seed is None else seed
    rand = np.empty(drops, dtype=int)
    opt = np.empty(drops, dtype=int)
    for d in range(drops):
        geo_ss, sync_ss = drop_seed(seed, 0, d).spawn(2)
        geom = sample_ut_centered(config, np.random.default_rng(geo_ss))
        r, o = sync_demo_counts(geom, config, np.random.default_rng(sync_ss))
        rand[d], opt[d] = r[0], o[0]
    return rand, opt


def sync_histogram_rows(random_counts, optimized_counts, n_sats: int) -> list[dict]:
    bins = np.arange(n_sats + 1)
    hr = np.bincount(random_counts, minlength=n_sats + 1)[: n_sats + 1]
    ho = np.bincount(optimized_counts, minlength=n_sats + 1)[: n_sats + 1]
    return [{"attach": int(b), "random": int(r), "optimized": int(o)}
            for b, r, o in zip(bins, hr, ho) if r or o]


def analyze_rows(config: ScenarioConfig, grid, include_cp: bool = False) -> list[dict]:
    from .analysis import expected_desired, expected_interference, from_config, spectral_efficiency_bound

    rows = []
    for L in grid:
        inp = from_config(config, include_cp=include_cp).with_(L_add=int(L))
        mui, ici, isi = expected_interference(inp)
        bound = spectral_efficiency_bound(inp)
        rows.append({"L_add": int(L), "p_cp": inp.p_cp, "bound": bound, "bound_per_hz": bound / inp.N,
                     "desired": expected_desired(inp), "mui": mui, "ici": ici, "isi": isi})
    return rows


ORACLE_CONFIG = dict(bandwidth_per_subcarrier=30e6 / 1024, cp_len=4, n_sats=3, n_uts=2,
                     sat_array=(4, 4), ut_array=(2, 1), sat_cap_angle=4.0, ut_cap_angle=2.0)


def oracle_config(n: int = 64, cp_add: int | None = None, seed: int = 0) -> ScenarioConfig:
    """Small frequency-flat scenario whose satellites all see both UTs."""
    c = dict(ORACLE_CONFIG)
    spacing = c.pop("bandwidth_per_subcarrier")
    return ScenarioConfig(n_subcarriers=n, bandwidth=n * spacing,
                          cp_add=n // 3 if cp_add is None else cp_add, seed=seed, **c)


_ORACLE_RTOL = 1e-12


def oracle_check(config: ScenarioConfig, mode: str, n_symbols: int, seed: int = 0,
                 sync_mode: str = "random") -> list[dict]:
    """Exact-mode power totals against the time-domain oracle for one drop."""
    from .link_eval import power_terms
    from .ofdm import time_domain_oracle

    geo_ss, chan_ss, sync_ss, data_ss = drop_seed(seed, 0, 0).spawn(4)
    geom = sample_geometry(config, np.random.default_rng(geo_ss))
    channels = build_channels(geom, config, np.random.default_rng(chan_ss))
    decision = associate(mode, geom, config, np.random.default_rng(sync_ss), sync_mode=sync_mode)
    precoders = build_precoders(channels, decision, geom, config)
    combiners = build_combiners(channels, precoders, decision)
    exact = power_terms(channels, precoders, combiners, decision, config, "exact")
    oracle = time_domain_oracle(channels, precoders, combiners, decision, n_symbols,
                                np.random.default_rng(data_ss))
    active = np.asarray(decision.active)
    names = ("desired", "mui", "ici", "isi")
    # round-off floor relative to all received power: noise-free terms have no batch spread
    floor = _ORACLE_RTOL * sum(float(getattr(exact, n)[active].sum()) for n in names)
    rows = []
    for name in names:
        e = float(getattr(exact, name)[active].sum())
        o, se = oracle.totals[name], oracle.totals_se[name]
        scale = max(se, floor)
        z = (o - e) / scale if scale > 0 else 0.0
        rows.append({"mode": mode, "term": name, "exact": e, "oracle": o, "stderr": se, "z": z})
    return rows
