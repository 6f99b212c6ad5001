import copy
import json
import os

import numpy as np
import pytest

from semcom.add import AllocState, baseline_allocate
from semcom.bundle import AttentionMap, SemComBundle, WordAnnotation, save_bundle
from semcom.cli import main as cli_main
from semcom.harness import (ConfigError, DbscanParams, build_alloc_env,
                            export_matrices_csv, load_scenario, parse_scenario,
                            run_allocation_experiment, run_pipeline,
                            run_robustness_sweep, run_simulation, xi_for)


def scenario_raw(corpus, users=None):
    return {
        "corpus": corpus,
        "users": users or [
            {"bundle": 0, "distance_m": 10.0, "latency_s": 5.0},
            {"bundle": 0, "distance_m": 100.0, "latency_s": 5.0},
        ],
        "channel": {"W_hz": 1000.0, "P_w": 1.0, "N0_w_per_hz": 1e-6, "seed": 7},
        "jpsq": {"t_max": 0.6},
        "seed": 3,
    }


@pytest.fixture
def scenario_path(tmp_path, blue_car_bundle):
    save_bundle(blue_car_bundle, str(tmp_path / "bundle0"))
    raw = scenario_raw(["bundle0"])
    path = tmp_path / "scenario.json"
    path.write_text(json.dumps(raw))
    return str(path)


class TestScenarioParsing:
    def test_loads_and_resolves_paths(self, scenario_path):
        scenario = load_scenario(scenario_path)
        assert os.path.isabs(scenario.corpus[0])
        assert scenario.channel.W_hz == 1000.0
        assert scenario.jpsq.t_max == 0.6
        assert scenario.seed == 3
        assert scenario.channel_seed == 7

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            load_scenario(str(tmp_path / "nope.json"))

    def test_malformed_json(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{not json")
        with pytest.raises(ConfigError):
            load_scenario(str(path))

    def test_missing_corpus_key(self):
        with pytest.raises(ConfigError):
            parse_scenario({"users": [], "channel": {}})

    def test_user_bundle_out_of_range(self):
        raw = scenario_raw(["b"], users=[{"bundle": 5, "distance_m": 1, "latency_s": 1}])
        with pytest.raises(ConfigError, match="bundle 5"):
            parse_scenario(raw)

    def test_xi_out_of_range(self):
        raw = scenario_raw(["b"])
        raw["xi_scheme"] = {"NN": 1.5}
        with pytest.raises(ConfigError, match="xi"):
            parse_scenario(raw)

    def test_unknown_scorer_kind(self):
        raw = scenario_raw(["b"])
        raw["scorer"] = {"kind": "neural"}
        with pytest.raises(ConfigError, match="scorer"):
            parse_scenario(raw)

    def test_table_scorer_needs_path(self):
        raw = scenario_raw(["b"])
        raw["scorer"] = {"kind": "table"}
        with pytest.raises(ConfigError, match="path"):
            parse_scenario(raw)

    def test_seed_override(self):
        scenario = parse_scenario(scenario_raw(["b"]), seed_override=99)
        assert scenario.seed == 99
        assert scenario.add.seed == 99

    def test_xi_for_scheme(self):
        scheme = {"PROPN": 0.9, "NN": 0.8, "default": 0.5}
        assert xi_for("PROPN", scheme) == 0.9
        assert xi_for("VERB", scheme) == 0.5

    def test_config_hash_sensitivity(self):
        raw = scenario_raw(["b"])
        base = parse_scenario(raw).config_hash()
        assert parse_scenario(copy.deepcopy(raw)).config_hash() == base
        changed = copy.deepcopy(raw)
        changed["channel"]["W_hz"] = 2000.0
        assert parse_scenario(changed).config_hash() != base
        changed = copy.deepcopy(raw)
        changed["seed"] = 4
        assert parse_scenario(changed).config_hash() != base


def shared_mask_bundle():
    """Two retained words whose attention covers the same solid block."""
    words = [WordAnnotation(0, "cat", "NN", -1, "ROOT"),
             WordAnnotation(1, "hat", "NN", 0, "dobj")]
    values = np.zeros((32, 32), dtype=np.float32)
    values[4:10, 2:10] = 1.0  # 48-pixel block, above the min cluster size
    maps = {i: AttentionMap(word_index=i, values=values.copy()) for i in range(2)}
    return SemComBundle(prompt="cat hat", image_width=32, image_height=32,
                        words=words, maps=maps)


class TestRunPipeline:
    def test_shared_mask_counted_once(self):
        result = run_pipeline(shared_mask_bundle())
        assert result.info.total_tokens == 48
        sent = [len(px) for _, px in result.info.blocks]
        assert sorted(sent) == [0, 48]

    def test_token_count_equals_set_algebra_oracle(self, blue_car_bundle):
        result = run_pipeline(blue_car_bundle)
        union = set().union(*(seg.pixels for seg in result.segments.values()))
        assert result.info.total_tokens == len(union)

    def test_custom_xi_scheme_changes_masks(self, blue_car_bundle):
        loose = run_pipeline(blue_car_bundle, xi_scheme={"default": 0.2})
        tight = run_pipeline(blue_car_bundle, xi_scheme={"default": 0.9})
        assert loose.info.total_tokens > tight.info.total_tokens


class TestRobustnessSweep:
    def test_endpoints_and_monotonicity(self, scenario_path):
        scenario = load_scenario(scenario_path)
        result = run_pipeline(blue := __import__("semcom").bundle.load_bundle(
            scenario.corpus[0]), scenario.xi_scheme, scenario.dbscan)
        total = result.info.total_tokens
        grid = [0, total // 4, total // 2, total, total + 100]
        curve = run_robustness_sweep(scenario, grid)
        assert curve[0][1] == pytest.approx(4.9827, abs=1e-9)
        assert curve[3][1] == pytest.approx(5.2651, abs=1e-9)
        assert curve[4][1] == pytest.approx(5.2651, abs=1e-9)  # clamped
        qs = [q for _, q in curve]
        assert qs == sorted(qs)


class TestRunSimulation:
    def test_byte_identical_reports(self, scenario_path, tmp_path):
        p1 = tmp_path / "r1.csv"
        p2 = tmp_path / "r2.csv"
        run_simulation(load_scenario(scenario_path)).to_csv(str(p1))
        run_simulation(load_scenario(scenario_path)).to_csv(str(p2))
        assert p1.read_bytes() == p2.read_bytes()
        assert p1.read_bytes()  # non-empty

    def test_rows_and_aggregates_consistent(self, scenario_path):
        report = run_simulation(load_scenario(scenario_path))
        assert len(report.rows) == 2
        assert report.aggregates["mean_reduction"] == pytest.approx(
            np.mean([r["reduction_ratio"] for r in report.rows]))
        assert report.aggregates["mean_Q"] == pytest.approx(
            np.mean([r["Q"] for r in report.rows]))
        assert report.aggregates["total_utility"] == pytest.approx(
            sum(r["utility"] for r in report.rows))
        for row in report.rows:
            assert 0 <= row["tokens_sent"]
            assert 0.0 <= row["reduction_ratio"] <= 1.0

    def test_provenance_fields(self, scenario_path):
        scenario = load_scenario(scenario_path)
        report = run_simulation(scenario)
        assert report.provenance["seed"] == "3"
        assert report.provenance["config_hash"] == scenario.config_hash()
        assert "artifact_version" in report.provenance

    def test_channel_seed_changes_budgets(self, scenario_path, tmp_path):
        scenario_a = load_scenario(scenario_path)
        raw = json.loads(open(scenario_path).read())
        raw["channel"]["seed"] = 8
        other = tmp_path / "s2.json"
        other.write_text(json.dumps(raw))
        scenario_b = load_scenario(str(other))
        a = [r["tokens_sent"] for r in run_simulation(scenario_a).rows]
        b = [r["tokens_sent"] for r in run_simulation(scenario_b).rows]
        assert a != b


class TestAllocationExperiment:
    def test_policies_see_identical_states(self, scenario_path):
        scenario = load_scenario(scenario_path)
        report = run_allocation_experiment(
            scenario, {"fixed": "fixed", "greedy": "greedy_table"}, n_states=4)
        assert len(report.rows) == 8
        # fixed allocates the caps; with one image in the corpus every state
        # is that image, so all fixed rows agree
        fixed_rows = [r for r in report.rows if r["policy"] == "fixed"]
        assert len({r["allocation"] for r in fixed_rows}) == 1

    def test_fixed_utility_matches_direct_evaluation(self, scenario_path):
        scenario = load_scenario(scenario_path)
        env = build_alloc_env(scenario)
        report = run_allocation_experiment(scenario, {"fixed": "fixed"}, n_states=3)
        rng = np.random.Generator(np.random.Philox(scenario.seed))
        for row in report.rows:
            state = env.sample_state(rng)
            action = baseline_allocate("fixed", state)
            assert row["utility"] == pytest.approx(env.utility(state, action.b))

    def test_aggregate_totals(self, scenario_path):
        scenario = load_scenario(scenario_path)
        report = run_allocation_experiment(scenario, {"random": "random"}, n_states=5)
        total = sum(r["utility"] for r in report.rows)
        assert report.aggregates["total_utility_random"] == pytest.approx(total)

    def test_user_count_sweep_row_shape(self, scenario_path):
        scenario = load_scenario(scenario_path)
        for n_users in (2, 3):
            env = build_alloc_env(scenario, n_users=n_users)
            state = env.sample_state(np.random.default_rng(0))
            assert state.n_users == n_users
            assert baseline_allocate("fixed", state).b.shape == (n_users,)


class TestExportMatrices:
    def test_files_written(self, blue_car_bundle, tmp_path):
        result = run_pipeline(blue_car_bundle)
        out = tmp_path / "matrices"
        export_matrices_csv(blue_car_bundle, result, str(out))
        for name in ("dependency.csv", "levels.csv", "importance.csv"):
            assert (out / name).is_file()
        lines = (out / "importance.csv").read_text().strip().splitlines()
        values = [float(ln.split(",")[1]) for ln in lines[1:]]
        assert sum(values) == pytest.approx(1.0, abs=1e-9)


class TestCli:
    def test_extract_success(self, scenario_path, capsys):
        bundle_dir = os.path.join(os.path.dirname(scenario_path), "bundle0")
        assert cli_main(["extract", bundle_dir]) == 0
        out = capsys.readouterr().out
        assert "semantic info" in out

    def test_extract_dump_stream(self, scenario_path, tmp_path):
        bundle_dir = os.path.join(os.path.dirname(scenario_path), "bundle0")
        stream = tmp_path / "stream.bin"
        assert cli_main(["extract", bundle_dir, "--dump-stream", str(stream)]) == 0
        assert stream.stat().st_size % 11 == 0 and stream.stat().st_size > 0

    def test_pack_with_budget(self, scenario_path, capsys):
        bundle_dir = os.path.join(os.path.dirname(scenario_path), "bundle0")
        assert cli_main(["pack", bundle_dir, "--budget", "100"]) == 0
        assert "coverage" in capsys.readouterr().out

    def test_simulate_and_report(self, scenario_path, tmp_path):
        out = tmp_path / "report.csv"
        assert cli_main(["simulate", scenario_path, "--out", str(out)]) == 0
        assert out.read_text().startswith("user,")
        svg = tmp_path / "report.svg"
        assert cli_main(["report", "--in", str(out), "--format", "svg",
                         "--out", str(svg)]) == 0
        assert svg.read_text().lstrip().startswith("<?xml")

    def test_simulate_seed_env_override(self, scenario_path, tmp_path, monkeypatch):
        out = tmp_path / "report.csv"
        monkeypatch.setenv("SEMCOM_SEED", "41")
        assert cli_main(["simulate", scenario_path, "--out", str(out)]) == 0
        assert "# seed=41" in out.read_text()

    def test_config_error_exit_code(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text("{broken")
        assert cli_main(["simulate", str(bad)]) == 2

    def test_missing_bundle_exit_code(self, tmp_path):
        assert cli_main(["extract", str(tmp_path / "nothing")]) == 2

    def test_bad_usage_exit_code(self, capsys):
        assert cli_main(["no-such-command"]) == 2

    def test_runtime_error_exit_code(self, scenario_path, tmp_path):
        missing_ckpt = str(tmp_path / "no.ckpt")
        assert cli_main(["eval", "--scenario", scenario_path,
                         "--policy", missing_ckpt]) == 3

    def test_eval_baselines(self, scenario_path, tmp_path, capsys):
        out = tmp_path / "eval.csv"
        assert cli_main(["eval", "--scenario", scenario_path, "--policy", "fixed",
                         "--policy", "greedy", "--states", "3",
                         "--out", str(out)]) == 0
        text = out.read_text()
        assert text.startswith("policy,")
        assert "total_utility_fixed" in text and "total_utility_greedy" in text
