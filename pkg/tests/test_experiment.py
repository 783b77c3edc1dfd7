import xml.etree.ElementTree as ET

import numpy as np
import pytest

from leocoop import cli
from leocoop import experiment as ex
from leocoop.config import DESK

SMALL = DESK.with_(n_sats=12, n_uts=4)


def _files(out):
    return {p.name: p.read_bytes() for p in sorted(out.iterdir()) if p.suffix == ".csv"}


def test_ecdf_examples():
    x, F = ex.ecdf([3, 1, 2])
    assert list(x) == [1, 2, 3] and list(F) == pytest.approx([1 / 3, 2 / 3, 1])
    assert ex.ecdf_quantile([1, 2, 3], 0.5) == 2
    x, F = ex.ecdf([4.0] * 5)
    assert np.all(x == 4.0) and F[-1] == 1.0
    with pytest.raises(ValueError):
        ex.ecdf([])


def test_ecdf_uniform_ks_band():
    u = np.random.default_rng(0).random(10_000)
    x, F = ex.ecdf(u)
    gap = max(np.max(np.abs(F - x)), np.max(np.abs(F - 1 / u.size - x)))
    assert gap < 1.36 / np.sqrt(u.size)


def test_bootstrap_covers_and_groups():
    v = np.random.default_rng(1).normal(5.0, 1.0, 400)
    lo, hi = ex.bootstrap_ci(v, n_boot=500)
    assert lo < 5.0 < hi
    g = np.repeat(np.arange(100), 4)
    glo, ghi = ex.bootstrap_ci(v, n_boot=500, groups=g)
    assert glo < np.median(v) < ghi
    plo, phi = ex.paired_bootstrap_ci(v + 1.0, v, g, n_boot=500)
    assert plo == pytest.approx(1.0) and phi == pytest.approx(1.0)


def test_spec_validation():
    with pytest.raises(ValueError):
        ex.CampaignSpec(base=SMALL, drops=0)
    with pytest.raises(ValueError):
        ex.CampaignSpec(base=SMALL, axis="bogus", values=(1,))
    with pytest.raises(ValueError):
        ex.CampaignSpec(base=SMALL, axis="cp_add", values=())
    with pytest.raises(ValueError):
        ex.CampaignSpec(base=SMALL, axis="cp_add", values=(-5,))
    with pytest.raises(ValueError):
        ex.CampaignSpec(base=SMALL, schemes=("nearest",))
    with pytest.raises(ValueError):
        ex.CampaignSpec(base=SMALL, axis="sync_mode", values=("sometimes",))


def test_worker_env_override(monkeypatch):
    monkeypatch.setenv(ex.WORKERS_ENV, "3")
    assert ex.resolve_workers(1) == 3
    monkeypatch.setenv(ex.WORKERS_ENV, "lots")
    with pytest.raises(ValueError):
        ex.resolve_workers()
    monkeypatch.delenv(ex.WORKERS_ENV)
    assert ex.resolve_workers(2) == 2


@pytest.fixture(scope="module")
def campaign(tmp_path_factory):
    out = tmp_path_factory.mktemp("run")
    spec = ex.CampaignSpec(base=SMALL, drops=4, out_dir=out, emit_plots=True, workers=1)
    return spec, ex.run_campaign(spec), out


def test_record_count_and_summary(campaign):
    spec, result, out = campaign
    expected = sum(spec.base.n_uts * spec.drops - result.excluded.get(0, 0) for _ in spec.schemes)
    assert len(result.records) == expected
    summary = ex.read_csv(out / "summary.csv")
    assert tuple(summary[0]) == ex.SUMMARY_FIELDS
    assert [r["mode"] for r in summary] == list(spec.schemes)
    assert set(_files(out)) == {"records.csv", "summary.csv", "ecdf_single.csv", "ecdf_full.csv",
                                "ecdf_proposed.csv"}


def test_csv_round_trip(campaign):
    _, result, out = campaign
    back = ex.read_csv(out / "records.csv")
    assert len(back) == len(result.records)
    for got, want in zip(back, result.records):
        for f in ("rate", "spectral_efficiency", "desired", "mui", "ici", "isi"):
            assert float(got[f]) == pytest.approx(want[f], rel=1e-15, abs=0)
        assert int(got["attach"]) == want["attach"]


def test_svg_well_formed(campaign):
    _, _, out = campaign
    root = ET.parse(out / "ecdf.svg").getroot()
    assert root.tag.endswith("svg")


def test_rerun_is_byte_identical(campaign, tmp_path):
    spec, _, out = campaign
    from dataclasses import replace

    ex.run_campaign(replace(spec, out_dir=tmp_path))
    assert _files(tmp_path) == _files(out)
    assert (tmp_path / "ecdf.svg").read_bytes() == (out / "ecdf.svg").read_bytes()


def test_worker_count_invariance(campaign, tmp_path):
    spec, _, out = campaign
    from dataclasses import replace

    ex.run_campaign(replace(spec, out_dir=tmp_path, emit_plots=False, workers=2))
    assert _files(tmp_path) == _files(out)


def test_seed_changes_outputs(tmp_path):
    a = ex.run_campaign(ex.CampaignSpec(base=SMALL, drops=2, workers=1))
    b = ex.run_campaign(ex.CampaignSpec(base=SMALL.with_(seed=SMALL.seed + 1), drops=2, workers=1))
    assert not np.array_equal(a.rates("full"), b.rates("full"))


def test_common_random_numbers_reduce_variance():
    spec = ex.CampaignSpec(base=SMALL, drops=30, workers=1, schemes=("full", "proposed"))
    res = ex.run_campaign(spec)
    full, prop = res.rates("full"), res.rates("proposed")
    paired = np.var(prop - full)
    rng = np.random.default_rng(0)
    unpaired = np.mean([np.var(prop - rng.permutation(full)) for _ in range(50)])
    assert paired < unpaired


def test_schemes_share_geometry():
    spec = ex.CampaignSpec(base=SMALL, drops=3, workers=1, schemes=("proposed-random", "proposed-optimized"))
    res = ex.run_campaign(spec)
    r = res.column("attach", "proposed-random")
    o = res.column("attach", "proposed-optimized")
    assert np.all(o >= r)


def test_sweep_points_and_pairing():
    spec = ex.CampaignSpec(base=SMALL, axis="cp_add", values=(20, 60), drops=2, workers=1,
                           schemes=("single",), pair_points=True)
    res = ex.run_campaign(spec)
    # single-satellite operation never uses the additional CP, so paired drops repeat exactly
    assert np.array_equal(res.rates("single", 0), res.rates("single", 1))
    assert [row["value"] for row in res.summary()] == [20, 60]


def test_sync_demo_and_histogram():
    cfg = DESK.with_(n_sats=30)
    rand, opt = ex.run_sync_demo(cfg, 20, seed=3)
    assert rand.shape == opt.shape == (20,)
    assert np.all(opt >= 0) and np.mean(opt) >= np.mean(rand)
    rows = ex.sync_histogram_rows(rand, opt, cfg.n_sats)
    assert sum(r["random"] for r in rows) == 20 == sum(r["optimized"] for r in rows)


def test_oracle_check_rows():
    rows = ex.oracle_check(ex.oracle_config(32), "full", 2000, seed=1)
    assert [r["term"] for r in rows] == ["desired", "mui", "ici", "isi"]
    assert all(abs(r["z"]) < 5 for r in rows)


# ---------------------------------------------------------------------------
# CLI


def test_parse_values():
    assert cli.parse_values("10:10:40") == (10, 20, 30, 40)
    assert cli.parse_values("5,7") == (5, 7)
    assert cli.parse_values("random,optimized", "sync_mode") == ("random", "optimized")


def test_cli_simulate(tmp_path, capsys):
    rc = cli.main(["simulate", "--drops", "2", "--mode", "single,proposed", "--sync", "optimized",
                   "--out", str(tmp_path), "--workers", "1"])
    assert rc == 0
    assert "proposed" in capsys.readouterr().out
    assert (tmp_path / "ecdf_proposed.csv").exists()


def test_cli_sweep(tmp_path):
    rc = cli.main(["sweep", "--axis", "n_sats", "--values", "6:6:12", "--drops", "1", "--mode", "full",
                   "--out", str(tmp_path), "--workers", "1", "--plots"])
    assert rc == 0
    assert len(ex.read_csv(tmp_path / "summary.csv")) == 2
    ET.parse(tmp_path / "sweep.svg")


def test_cli_config_file(tmp_path):
    cfg = tmp_path / "s.cfg"
    cfg.write_text("n_sats = 8\nn_uts = 3\n")
    out = tmp_path / "o"
    assert cli.main(["simulate", "--config", str(cfg), "--drops", "1", "--out", str(out),
                     "--workers", "1"]) == 0
    assert len({r["k"] for r in ex.read_csv(out / "records.csv")}) <= 3
    cfg.write_text("n_satellites = 8\n")
    assert cli.main(["simulate", "--config", str(cfg), "--out", str(out)]) == 2


def test_cli_analyze(tmp_path, capsys):
    out = tmp_path / "bound.csv"
    assert cli.main(["analyze", "--preset", "paper", "--grid", "0:100:1000", "--out", str(out)]) == 0
    rows = ex.read_csv(out)
    assert len(rows) == 11 and float(rows[0]["bound"]) == 0.0
    assert "best L_add" in capsys.readouterr().err


def test_cli_sync_demo(tmp_path):
    assert cli.main(["sync-demo", "--drops", "10", "--out", str(tmp_path), "--plots"]) == 0
    assert len(ex.read_csv(tmp_path / "sync_counts.csv")) == 10
    ET.parse(tmp_path / "sync_histogram.svg")


def test_cli_oracle(capsys):
    assert cli.main(["oracle", "--n", "32", "--symbols", "800", "--mode", "single"]) == 0
    assert cli.main(["oracle", "--n", "512"]) == 2
    assert "z" in capsys.readouterr().out.splitlines()[0]
