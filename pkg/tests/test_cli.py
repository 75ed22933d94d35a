import json
import subprocess
import sys

import numpy as np
import pytest

from salientpref.dataio import read_json

RUN = [sys.executable, "-m", "salientpref.cli"]


def run_cli(*args, check=True):
    proc = subprocess.run(
        RUN + [str(a) for a in args], capture_output=True, text=True
    )
    if check and proc.returncode != 0:
        raise AssertionError(f"cli failed ({proc.returncode}): {proc.stderr}")
    return proc


@pytest.fixture(scope="module")
def sim_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("sim")
    run_cli(
        "simulate",
        "--d", 3, "--n", 12, "--m", 3000,
        "--selection", '{"kind":"top_t","t":2}',
        "--seed", 7,
        "--out-dir", out,
    )
    return out


class TestSimulate:
    def test_writes_four_files(self, sim_dir):
        names = sorted(p.name for p in sim_dir.iterdir())
        assert names == [
            "comparisons.csv",
            "features.csv",
            "manifest.json",
            "truth_weights.json",
        ]

    def test_deterministic_outputs(self, sim_dir, tmp_path):
        again = tmp_path / "again"
        run_cli(
            "simulate",
            "--d", 3, "--n", 12, "--m", 3000,
            "--selection", '{"kind":"top_t","t":2}',
            "--seed", 7,
            "--out-dir", again,
        )
        for name in ("features.csv", "comparisons.csv", "truth_weights.json"):
            assert (again / name).read_bytes() == (sim_dir / name).read_bytes()

    def test_manifest_contents(self, sim_dir):
        manifest = read_json(str(sim_dir / "manifest.json"))
        assert manifest["subcommand"] == "simulate"
        assert manifest["seed"] == 7
        assert manifest["flags"]["selection"] == {"kind": "top_t", "t": 2}
        assert "library_version" in manifest

    def test_zero_dimension_is_usage_error(self, tmp_path):
        proc = run_cli(
            "simulate", "--d", 0, "--n", 5, "--m", 10,
            "--selection", '{"kind":"full"}', "--seed", 1,
            "--out-dir", tmp_path / "x",
            check=False,
        )
        assert proc.returncode == 2

    def test_bad_selection_json_is_usage_error(self, tmp_path):
        proc = run_cli(
            "simulate", "--d", 2, "--n", 5, "--m", 10,
            "--selection", '{"kind":"nope"}', "--seed", 1,
            "--out-dir", tmp_path / "x",
            check=False,
        )
        assert proc.returncode == 2


class TestFitRankEvaluate:
    def test_full_chain(self, sim_dir, tmp_path):
        fit_out = tmp_path / "fit.json"
        run_cli(
            "fit",
            "--features", sim_dir / "features.csv",
            "--comparisons", sim_dir / "comparisons.csv",
            "--selection", '{"kind":"top_t","t":2}',
            "--mu", 0.0,
            "--out", fit_out,
        )
        result = read_json(str(fit_out))
        assert result["converged"] is True
        truth = read_json(str(sim_dir / "truth_weights.json"))
        err = np.linalg.norm(np.array(result["w_hat"]) - np.array(truth["w"]))
        assert err < 0.5

        rank_out = tmp_path / "ranking.csv"
        run_cli(
            "rank",
            "--features", sim_dir / "features.csv",
            "--weights", fit_out,
            "--out", rank_out,
        )
        lines = rank_out.read_text().strip().splitlines()
        assert lines[0] == "rank,item_id,utility"
        assert len(lines) == 13

        eval_out = tmp_path / "eval.json"
        run_cli(
            "evaluate",
            "--features", sim_dir / "features.csv",
            "--weights", fit_out,
            "--comparisons", sim_dir / "comparisons.csv",
            "--selection", '{"kind":"top_t","t":2}',
            "--out", eval_out,
        )
        evaluation = read_json(str(eval_out))
        assert evaluation["metric"] == "pairwise_accuracy"
        assert 0.5 < evaluation["value"] <= 1.0

    def test_evaluate_against_rankings(self, sim_dir, tmp_path):
        fm_path = sim_dir / "features.csv"
        ids = [line.split(",")[0] for line in fm_path.read_text().splitlines()[1:]]
        rankings = tmp_path / "rankings.csv"
        rankings.write_text(
            "ranker_id,rank,item_id\n"
            + "".join(f"r1,{k+1},{item}\n" for k, item in enumerate(ids[:5]))
            + "".join(f"r2,{k+1},{item}\n" for k, item in enumerate(reversed(ids[:4]))),
            encoding="utf-8",
        )
        out = tmp_path / "eval.json"
        run_cli(
            "evaluate",
            "--features", fm_path,
            "--weights", sim_dir / "truth_weights.json",
            "--rankings", rankings,
            "--out", out,
        )
        payload = read_json(str(out))
        assert payload["metric"] == "kendall_tau"
        assert payload["rankers"] == 2
        assert -1.0 <= payload["mean"] <= 1.0

    def test_missing_file_is_runtime_error(self, tmp_path):
        proc = run_cli(
            "fit",
            "--features", tmp_path / "nope.csv",
            "--comparisons", tmp_path / "nope2.csv",
            "--selection", '{"kind":"full"}',
            "--out", tmp_path / "out.json",
            check=False,
        )
        assert proc.returncode == 1
        assert proc.stderr.strip() != ""


class TestDiagnose:
    def test_empirical_and_model(self, sim_dir, tmp_path):
        out = tmp_path / "diag.json"
        run_cli(
            "diagnose",
            "--features", sim_dir / "features.csv",
            "--comparisons", sim_dir / "comparisons.csv",
            "--weights", sim_dir / "truth_weights.json",
            "--selection", '{"kind":"top_t","t":2}',
            "--min-count", 1,
            "--out", out,
        )
        payload = read_json(str(out))
        for key in ("empirical", "model", "inconsistency"):
            assert key in payload
        for level in ("strong", "moderate", "weak"):
            assert payload["model"][f"{level}_violations"] >= 0

    def test_needs_some_source(self, sim_dir, tmp_path):
        proc = run_cli(
            "diagnose",
            "--features", sim_dir / "features.csv",
            "--out", tmp_path / "d.json",
            check=False,
        )
        assert proc.returncode == 1


class TestTheoryCommand:
    def test_full_selection_report_included(self, tmp_path):
        sim = tmp_path / "sim"
        run_cli(
            "simulate", "--d", 2, "--n", 8, "--m", 100,
            "--selection", '{"kind":"full"}', "--seed", 3,
            "--out-dir", sim,
        )
        out = tmp_path / "theory.json"
        run_cli(
            "theory",
            "--features", sim / "features.csv",
            "--selection", '{"kind":"full"}',
            "--weights", sim / "truth_weights.json",
            "--delta", 0.1,
            "--out", out,
        )
        payload = read_json(str(out))
        assert payload["certificate"]["identifiable"] is True
        assert payload["certificate"]["lambda"] > 0
        assert "full_selection" in payload
        assert "single_coordinate" not in payload
        assert payload["ranking_recovery"]["k"] == 1
        assert payload["b_star"] == payload["certificate"]["b_star"]

    def test_single_coordinate_report_included(self, tmp_path):
        sim = tmp_path / "sim"
        run_cli(
            "simulate", "--d", 3, "--n", 8, "--m", 100,
            "--selection", '{"kind":"top_t","t":1}', "--seed", 4,
            "--out-dir", sim,
        )
        out = tmp_path / "theory.json"
        run_cli(
            "theory",
            "--features", sim / "features.csv",
            "--selection", '{"kind":"top_t","t":1}',
            "--delta", 0.1,
            "--out", out,
        )
        payload = read_json(str(out))
        assert "single_coordinate" in payload
        assert "full_selection" not in payload
        assert payload["certificate"]["b_star"] is None


class TestSweep:
    def test_long_format_csv(self, tmp_path):
        spec = tmp_path / "spec.json"
        spec.write_text(
            json.dumps(
                {
                    "d": 2,
                    "n": 8,
                    "selections": [{"kind": "full"}, {"kind": "top_t", "t": 1}],
                    "m_grid": [200, 800],
                    "seeds": [0, 1],
                    "mu": 0.0,
                }
            ),
            encoding="utf-8",
        )
        out = tmp_path / "sweep"
        run_cli("sweep", "--spec", spec, "--out-dir", out)
        lines = (out / "sweep.csv").read_text().strip().splitlines()
        assert lines[0] == "selection,m,seed,metric,value"
        # 2 selections x 2 m x 2 seeds x 8 metrics
        assert len(lines) == 1 + 2 * 2 * 2 * 8
        # deterministic: a rerun is byte-identical
        out2 = tmp_path / "sweep2"
        run_cli("sweep", "--spec", spec, "--out-dir", out2)
        assert (out / "sweep.csv").read_bytes() == (out2 / "sweep.csv").read_bytes()

    def test_worker_pool_same_bytes(self, tmp_path):
        spec = tmp_path / "spec.json"
        spec.write_text(
            json.dumps(
                {
                    "d": 2,
                    "n": 6,
                    "selections": [{"kind": "full"}],
                    "m_grid": [100],
                    "seeds": [0, 1, 2, 3],
                    "workers": 1,
                }
            ),
            encoding="utf-8",
        )
        serial = tmp_path / "serial"
        run_cli("sweep", "--spec", spec, "--out-dir", serial)
        spec.write_text(
            spec.read_text().replace('"workers": 1', '"workers": 3'), encoding="utf-8"
        )
        parallel = tmp_path / "parallel"
        run_cli("sweep", "--spec", spec, "--out-dir", parallel)
        assert (serial / "sweep.csv").read_bytes() == (parallel / "sweep.csv").read_bytes()
