import csv
import io
from dataclasses import replace

import numpy as np
import pytest

from mtcpd.channel import ScenarioConfig
from mtcpd.cli import build_config, cmd_selftest, main, make_parser
from mtcpd.config import ExperimentConfig, config_from_dict, load_config, full_profile, parse_snr
from mtcpd.harness import (
    SweepFailed,
    cmd_generate,
    cmd_report,
    cmd_sweep,
    load_sweep_config,
    noise_stream_key,
)
from mtcpd.io import read_tensor
from mtcpd.tensor import unfold

TINY_SCENARIO = ScenarioConfig(x=2, y=2, n=2, k=8, n_clusters=2, subpaths_per_cluster=2)


def tiny(tmp_path, **kw):
    base = dict(scenario=TINY_SCENARIO, snr_grid_db=(-5.0, 5.0), n_realizations=2, r_max=4,
                output_dir=str(tmp_path / "run"), master_seed=11)
    base.update(kw)
    return ExperimentConfig(**base)


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def read_dat(path):
    lines = path.read_text().splitlines()
    return lines[0].split(), [ln.split() for ln in lines[1:]]


@pytest.fixture(scope="module")
def tiny_run(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("tiny")
    cfg = tiny(tmp)
    cmd_generate(cfg)
    res = cmd_sweep(cfg)
    paths = cmd_report(cfg.output_dir)
    return cfg, res, paths


class TestConfig:
    def test_defaults_desk(self):
        cfg = ExperimentConfig()
        assert (cfg.scenario.x, cfg.scenario.y, cfg.scenario.n, cfg.scenario.k) == (4, 4, 2, 64)
        assert cfg.r_max == 16 and cfg.n_realizations == 50
        assert cfg.snr_grid_db == (-20.0, -10.0, 0.0)

    def test_full_profile(self):
        cfg = full_profile()
        assert cfg.scenario.dims == (8, 8, 2, 512)
        assert cfg.r_max == 40 and cfg.n_realizations == 1200
        assert cfg.snr_grid_db[0] == -24 and cfg.snr_grid_db[-1] == 4
        assert cfg.plan_for("cpd").mode_decomposition == (1, 1, 1)
        assert cfg.plan_for("mtcpd").mode_decomposition == (3, 3, 9)

    @pytest.mark.parametrize("kw", [dict(n_realizations=0), dict(snr_grid_db=()), dict(r_max=0),
                                    dict(methods=("tucker",)), dict(streams_p=(3,))])
    def test_invalid(self, kw):
        with pytest.raises(ValueError):
            replace(ExperimentConfig(scenario=ScenarioConfig(x=1, y=2, n=2, k=4)), **kw)

    def test_toml(self, tmp_path):
        p = tmp_path / "c.toml"
        p.write_text('snr_grid_db = [-3, "inf"]\nn_realizations = 3\n'
                     '[scenario]\nx = 2\ny = 2\nk = 16\n'
                     '[als]\ntolerance = 1e-8\n'
                     '[plans.mtcpd]\nfactors_k = [4, 4]\n')
        cfg = load_config(p)
        assert cfg.snr_grid_db == (-3.0, float("inf"))
        assert cfg.als.tolerance == 1e-8
        assert cfg.plan_for("mtcpd").factors_k == (4, 4)

    def test_unknown_key(self):
        with pytest.raises(ValueError):
            config_from_dict({"n_realisations": 3})

    def test_roundtrip_dict_and_digest(self, tmp_path):
        cfg = tiny(tmp_path, snr_grid_db=(0.0, float("inf")))
        back = config_from_dict(cfg.to_dict())
        assert back == cfg and back.digest() == cfg.digest()
        assert replace(cfg, output_dir="elsewhere").digest() == cfg.digest()
        assert replace(cfg, master_seed=12).digest() != cfg.digest()

    def test_parse_snr(self):
        assert parse_snr("noiseless") == float("inf")
        assert parse_snr(" -7.5") == -7.5

    def test_noise_keys_distinct(self):
        keys = {noise_stream_key(s) for s in (-24, -10.5, 0, 0.001, 4, float("inf"))}
        assert len(keys) == 6 and min(keys) >= 0


class TestGenerate:
    def test_byte_identical(self, tmp_path):
        a, b = tiny(tmp_path / "a"), tiny(tmp_path / "b")
        (tmp_path / "a").mkdir()
        (tmp_path / "b").mkdir()
        da, db = cmd_generate(a), cmd_generate(b)
        names = sorted(p.name for p in da.iterdir())
        assert names == ["metadata.json", "realization_00000.mtct", "realization_00001.mtct"]
        for n in names:
            assert (da / n).read_bytes() == (db / n).read_bytes()

    def test_zero_spread_rank1(self, tmp_path):
        sc = ScenarioConfig(x=2, y=4, n=2, k=8, n_clusters=1, subpaths_per_cluster=3,
                            angular_spread=0, delay_spread=0)
        ds = cmd_generate(tiny(tmp_path, scenario=sc))
        for q in range(2):
            h = read_tensor(ds / f"realization_{q:05d}.mtct")
            for n in range(3):
                s = np.linalg.svd(unfold(h, n), compute_uv=False)
                assert s[1:].max(initial=0) <= 1e-10 * s[0]

    def test_nested_missing_parent(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            cmd_generate(tiny(tmp_path, output_dir=str(tmp_path / "no" / "such")))


class TestSweep:
    def test_record_count(self, tiny_run):
        cfg, res, _ = tiny_run
        methods = [r for r in res.records if r["method"] in cfg.methods]
        assert len(methods) == 2 * 2 * cfg.scenario.n * len(cfg.methods) * len(cfg.rank_rules)
        assert all(r["status"] == "ok" for r in res.records)
        keys = {(r["realization"], r["ue_slice"], r["snr_db"], r["method"], r["rank_rule"])
                for r in res.records}
        assert len(keys) == len(res.records)

    def test_provenance(self, tiny_run):
        cfg, res, _ = tiny_run
        p = res.provenance
        assert p["config_digest"] == cfg.digest() and p["code_version"] and p["master_seed"] == 11
        assert load_sweep_config(cfg.output_dir) == cfg

    def test_rerun_identical(self, tiny_run, tmp_path):
        cfg, _, _ = tiny_run
        other = replace(cfg, output_dir=str(tmp_path / "again"))
        (tmp_path / "again").mkdir()
        cmd_generate(other)
        cmd_sweep(other)
        for name in ("records.csv", "components.csv", "se.csv", "rank_avg.csv"):
            a = (tmp_path / "again" / name).read_bytes()
            assert a == (type(tmp_path)(cfg.output_dir) / name).read_bytes()

    def test_noiseless_single_path(self, tmp_path):
        sc = ScenarioConfig(x=2, y=2, n=2, k=8, n_clusters=1, subpaths_per_cluster=1)
        cfg = tiny(tmp_path, scenario=sc, snr_grid_db=(float("inf"),))
        cmd_generate(cfg)
        res = cmd_sweep(cfg)
        for m in cfg.methods:
            assert res.rank_avg[(float("inf"), m)] == 1
        for r in res.records:
            if r["rank_rule"] == "avg":
                assert r["selected_rank"] == 1
                assert r["slice_error"] <= 1e-6

    def test_failure_marked_within_budget(self, tmp_path):
        cfg = tiny(tmp_path, n_realizations=10, snr_grid_db=(0.0,), methods=("cpd",),
                   rank_rules=("avg",))
        ds = cmd_generate(cfg)
        (ds / "realization_00003.mtct").write_bytes(b"junk")
        res = cmd_sweep(cfg)
        bad = [r for r in res.records if r["status"] != "ok"]
        assert len(bad) == cfg.scenario.n
        assert all(r["realization"] == 3 and r["status"].startswith("error") for r in bad)
        assert res.provenance["failed_tasks"] == 1

    def test_failure_budget_exceeded(self, tmp_path):
        cfg = tiny(tmp_path, snr_grid_db=(0.0,))
        ds = cmd_generate(cfg)
        (ds / "realization_00000.mtct").write_bytes(b"junk")
        with pytest.raises(SweepFailed):
            cmd_sweep(cfg)

    def test_missing_dataset(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            cmd_sweep(tiny(tmp_path))


class TestReport:
    def test_shapes(self, tiny_run):
        _, _, paths = tiny_run
        assert set(paths) == {"rank_avg", "slice_error_db", "se_p1", "se_p2", "full_error"}
        for p in paths.values():
            header, rows = read_dat(p)
            assert header[0] == "snr_db"
            assert len(rows) == 2
            assert all(len(r) == len(header) for r in rows)

    def test_db_conversion(self, tiny_run):
        cfg, res, paths = tiny_run
        header, rows = read_dat(paths["slice_error_db"])
        col = header.index("mtcpd_pcm")
        for row in rows:
            snr = float(row[0])
            vals = [r["slice_error"] for r in res.records
                    if r["snr_db"] == snr and r["method"] == "mtcpd" and r["rank_rule"] == "pcm"]
            assert float(row[col]) == pytest.approx(np.median(10 * np.log10(vals)), abs=1e-12)

    def test_recomputable_from_records(self, tiny_run):
        cfg, _, paths = tiny_run
        records = read_rows(type(paths["se_p1"])(cfg.output_dir) / "records.csv")
        header, rows = read_dat(paths["se_p1"])
        for row in rows:
            for j, key in enumerate(header[1:], start=1):
                vals = [float(r["se_p1"]) for r in records if r["snr_db"] == row[0]
                        and r["ue_slice"] == "0" and f"{r['method']}_{r['rank_rule']}" == key]
                assert float(row[j]) == pytest.approx(np.median(vals), abs=1e-12)

    def test_perfect_constant(self, tiny_run):
        _, _, paths = tiny_run
        for name in ("se_p1", "se_p2"):
            header, rows = read_dat(paths[name])
            col = header.index("perfect_none")
            assert len({row[col] for row in rows}) == 1

    def test_empty(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            cmd_report(tmp_path)


class TestCli:
    def test_selftest_passes(self):
        buf = io.StringIO()
        assert cmd_selftest(None, buf) == 0
        assert "FAIL" not in buf.getvalue()

    def test_selftest_reports_bad_config(self, tmp_path):
        p = tmp_path / "bad.toml"
        p.write_text("[als]\ntolerance = -1e-6\n")
        args = make_parser().parse_args(["selftest", "--config", str(p)])
        buf = io.StringIO()
        assert cmd_selftest(args, buf) == 1
        assert "FAIL  configuration valid" in buf.getvalue()

    def test_flags(self):
        args = make_parser().parse_args(["sweep", "--seed", "5", "--methods", "mtcpd",
                                         "--snr=-4,inf", "--out", "x"])
        cfg = build_config(args)
        assert cfg.master_seed == 5 and cfg.methods == ("mtcpd",)
        assert cfg.snr_grid_db == (-4.0, float("inf")) and cfg.output_dir == "x"

    def test_bad_method(self, capsys):
        assert main(["generate", "--methods", "svd"]) == 2
        assert "unknown methods" in capsys.readouterr().err

    def test_end_to_end(self, tmp_path, capsys):
        cfg_path = tmp_path / "tiny.toml"
        cfg_path.write_text("n_realizations = 2\nr_max = 3\n"
                            "[scenario]\nx = 2\ny = 2\nk = 8\nn_clusters = 1\n")
        out = tmp_path / "run"
        common = ["--config", str(cfg_path), "--out", str(out), "--snr", "0,10"]
        assert main(["generate", *common]) == 0
        assert main(["sweep", *common, "--workers", "2"]) == 0
        assert main(["report", *common]) == 0
        text = capsys.readouterr().out
        assert "R_avg=" in text and "se_p2" in text
        assert (out / "report" / "full_error.dat").exists()
