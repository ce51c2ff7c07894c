import json

import numpy as np
import pytest
from fractions import Fraction

from graphbalance.cli import main
from graphbalance.generators import gen_complete
from graphbalance.graphcore import make_graph, sample_iid, save_graph
from graphbalance.harness import (
    CSV_HEADER,
    ExperimentConfig,
    ExperimentError,
    csv_summary,
    prepare_experiment,
    reports_to_csv,
    resolve_graph_source,
    run_experiment,
    run_trial,
)
from graphbalance.complete import CompleteGraph
from graphbalance.online import run_threshold_greedy
from graphbalance.rng import child_seed


def small_cfg(**kw):
    base = dict(graph_source="complete:6", T_mode="n", trials=4, seed=17,
                algorithms=("greedy_random", "greedy_left", "threshold_greedy",
                            "left_assign", "regime_auto"))
    base.update(kw)
    return ExperimentConfig(**base)


class TestConfig:
    def test_validation(self):
        with pytest.raises(ExperimentError):
            ExperimentConfig(graph_source="x", trials=0).validate()
        with pytest.raises(ExperimentError):
            ExperimentConfig(graph_source="x", algorithms=()).validate()
        with pytest.raises(ExperimentError):
            ExperimentConfig(graph_source="x", algorithms=("nope",)).validate()

    def test_from_dict(self):
        cfg = ExperimentConfig.from_dict({
            "graph_source": "complete:4",
            "algorithms": ["greedy_left"],
            "c": "7/2",
            "trials": 2,
        })
        assert cfg.c == Fraction(7, 2)
        assert cfg.algorithms == ("greedy_left",)

    def test_resolve_sources(self, tmp_path):
        assert resolve_graph_source("complete:5").m == 10
        assert resolve_graph_source("regular:8:3:1").m == 12
        assert resolve_graph_source("bipartite:3:2").m == 6
        assert resolve_graph_source("biregular:4:2:1:4").m == 32
        assert resolve_graph_source("layered:2:2:2").m == 16
        assert isinstance(resolve_graph_source("complete:65536"), CompleteGraph)
        g = make_graph(3, [(0, 1)])
        p = tmp_path / "g.el"
        save_graph(g, p)
        assert resolve_graph_source(str(p)).m == 1


class TestTrials:
    def test_k4_pinned_seed_snapshot(self):
        # K_4, T = 4, 1 trial, fixed seed: deterministic report with
        # M* in {1, 2} and every algorithm at or above it
        cfg = ExperimentConfig(graph_source="complete:4", T_mode=4, trials=1, seed=1234,
                               algorithms=("greedy_random", "threshold_greedy"))
        prep = prepare_experiment(cfg)
        r1 = run_trial(prep, 0)
        r2 = run_trial(prep, 0)
        assert r1.offline_opt in (1, 2)
        assert [o.max_load for o in r1.outcomes] == [o.max_load for o in r2.outcomes]
        assert all(o.max_load >= r1.offline_opt for o in r1.outcomes)

    def test_greedy_edges_and_component_diagnostic(self):
        # T large enough to exhaust every threshold quota: greedy edges
        # appear and the component diagnostic reports a nonzero size
        cfg = ExperimentConfig(graph_source="bipartite:2:2", T_mode=400, trials=1, seed=2,
                               algorithms=("threshold_greedy",))
        prep = prepare_experiment(cfg)
        rep = run_trial(prep, 0)
        assert rep.outcomes[0].largest_greedy_component > 0
        assert sum(rep.outcomes[0].threshold_totals) < 400

    def test_single_edge_forced(self):
        cfg = ExperimentConfig(graph_source="bipartite:1:1", T_mode=3, trials=1, seed=0,
                               algorithms=("greedy_random",))
        prep = prepare_experiment(cfg)
        rep = run_trial(prep, 0)
        assert rep.offline_opt == 2
        assert rep.outcomes[0].max_load == 2

    def test_max_load_never_below_offline(self):
        cfg = small_cfg(trials=6)
        prep = prepare_experiment(cfg)
        reports, _ = run_experiment(cfg, prep)
        for r in reports:
            assert r.offline_opt >= 1
            for out in r.outcomes:
                assert out.max_load >= r.offline_opt

    def test_load_conservation_every_algorithm(self):
        cfg = small_cfg(trials=3)
        prep = prepare_experiment(cfg)
        seed_t = child_seed(cfg.seed, 0)
        stream = sample_iid(prep.base, prep.T, seed_t)
        from graphbalance.harness import _stream_on
        from graphbalance.online import run_greedy
        state = run_greedy(stream, "random", 1)
        assert state.total_load.sum() == prep.T
        pipe = prep.tg
        st2 = run_threshold_greedy(pipe.work, pipe.dec, pipe.alphas,
                                   _stream_on(pipe.work, stream))
        assert st2.total_load.sum() == prep.T

    def test_fold_on_nonbipartite(self):
        # threshold-greedy on K6 runs on the bipartized graph; loads fold back
        cfg = small_cfg(trials=2, algorithms=("threshold_greedy",))
        prep = prepare_experiment(cfg)
        assert prep.tg.fold is not None
        assert prep.tg.work.n == 12
        reports, _ = run_experiment(cfg, prep)
        for r in reports:
            assert r.outcomes[0].max_load >= r.offline_opt

    def test_case2_equivalence_with_direct_threshold_greedy(self):
        # T = n: the regime route must produce identical loads to direct TG
        cfg = small_cfg(trials=4, algorithms=("threshold_greedy", "regime_auto"))
        prep = prepare_experiment(cfg)
        assert prep.regime_tg is prep.tg
        reports, _ = run_experiment(cfg, prep)
        for r in reports:
            tg = next(o for o in r.outcomes if o.algo == "threshold_greedy")
            auto = next(o for o in r.outcomes if o.algo == "regime_auto")
            assert tg.max_load == auto.max_load
            assert tg.threshold_totals == auto.threshold_totals

    def test_regime_case4_runs_greedy(self):
        cfg = ExperimentConfig(graph_source="complete:64", T_mode=5, trials=2, seed=1,
                               algorithms=("regime_auto",))
        prep = prepare_experiment(cfg)
        assert prep.regime.wrapped_algorithm == "greedy"
        reports, _ = run_experiment(cfg, prep)
        assert all(r.outcomes[0].max_load >= r.offline_opt for r in reports)

    def test_regime_case1_left_assign(self):
        cfg = ExperimentConfig(graph_source="complete:8", T_mode=200, trials=2, seed=1,
                               algorithms=("regime_auto",))
        prep = prepare_experiment(cfg)
        assert prep.regime.case == "T>n*logn"
        reports, _ = run_experiment(cfg, prep)
        assert all(r.outcomes[0].max_load >= r.offline_opt for r in reports)

    def test_regime_case2_isolated_augmentation(self):
        # K16: d_av = 15 > lg 16 = 4, T = 24 in [n, n lg n]
        cfg = ExperimentConfig(graph_source="complete:16", T_mode=24, trials=2, seed=3,
                               algorithms=("regime_auto",))
        prep = prepare_experiment(cfg)
        assert prep.regime.isolated_added == 8
        assert prep.regime.augmented_graph.n == 24
        reports, _ = run_experiment(cfg, prep)
        assert all(r.outcomes[0].max_load >= r.offline_opt for r in reports)

    def test_claim_cap_reroutes_to_left_assign(self, tmp_path):
        # K_256 plus 3840 isolated vertices: d_av = 15.9 > lg(4096) = 12 puts
        # the linear case on the threshold path, but Delta_L(H) = 128 exceeds
        # lg(8192) * d_av(H) = 103.6, so left-assign becomes the algorithm of
        # record for the routed case
        pairs = [(i, j) for i in range(256) for j in range(i + 1, 256)]
        g = make_graph(4096, pairs)
        p = tmp_path / "blob.el"
        save_graph(g, p)
        cfg = ExperimentConfig(graph_source=str(p), T_mode="n", trials=2, seed=6,
                               algorithms=("regime_auto",))
        prep = prepare_experiment(cfg)
        assert prep.regime.case == "n<=T<=n*logn"
        assert prep.regime.wrapped_algorithm == "left_assign"
        assert "left-degree cap" in prep.regime.note
        reports, _ = run_experiment(cfg, prep)
        assert all(r.outcomes[0].max_load >= r.offline_opt for r in reports)

    def test_unknown_diagnostic_rejected(self):
        with pytest.raises(ExperimentError, match="diagnostic"):
            ExperimentConfig(graph_source="complete:4",
                             diagnostics=("bogus",)).validate()

    def test_regime_case3_cliques_execute_on_original_arrivals(self):
        # small dense graph with T between lg n and n
        cfg = ExperimentConfig(graph_source="complete:32", T_mode=16, trials=2, seed=4,
                               algorithms=("regime_auto",))
        prep = prepare_experiment(cfg)
        assert prep.regime.case == "logn<T<n"
        assert prep.regime.clique_size is not None
        # arrivals must stay on the original edge index range
        seed_t = child_seed(cfg.seed, 0)
        stream = sample_iid(prep.base, prep.T, seed_t)
        assert stream.arrivals.max() < prep.base.m
        reports, _ = run_experiment(cfg, prep)
        assert all(r.outcomes[0].max_load >= r.offline_opt for r in reports)


class TestDeterminismAndCSV:
    def test_rerun_byte_identical(self):
        cfg = small_cfg()
        prep = prepare_experiment(cfg)
        r1, _ = run_experiment(cfg, prep)
        text1 = reports_to_csv(r1, prep)
        prep2 = prepare_experiment(small_cfg())
        r2, _ = run_experiment(small_cfg(), prep2)
        text2 = reports_to_csv(r2, prep2)
        assert text1 == text2

    def test_parallel_workers_byte_identical(self):
        cfg1 = small_cfg(trials=6, workers=1)
        prep1 = prepare_experiment(cfg1)
        r1, _ = run_experiment(cfg1, prep1)
        cfg2 = small_cfg(trials=6, workers=3)
        prep2 = prepare_experiment(cfg2)
        r2, _ = run_experiment(cfg2, prep2)
        assert reports_to_csv(r1, prep1) == reports_to_csv(r2, prep2)

    def test_csv_columns(self):
        cfg = small_cfg(trials=2)
        prep = prepare_experiment(cfg)
        reports, _ = run_experiment(cfg, prep)
        text = reports_to_csv(reports, prep)
        lines = text.strip().split("\n")
        assert lines[0] == CSV_HEADER
        assert len(lines) == 1 + 2 * len(cfg.algorithms)
        first = lines[1].split(",")
        assert first[0] == "0" and first[1] == "greedy_random"
        float(first[5])  # ratio column parses

    def test_summary_sane(self):
        cfg = small_cfg(trials=3)
        prep = prepare_experiment(cfg)
        reports, summary = run_experiment(cfg, prep)
        assert summary["trials"] == 3
        assert summary["min_offline_opt"] <= summary["mean_offline_opt"] <= summary["max_offline_opt"]
        for rec in summary["algorithms"].values():
            assert rec["mean_max_load"] <= rec["max_max_load"]

    def test_single_report_echo(self):
        cfg = small_cfg(trials=1, algorithms=("greedy_left",))
        prep = prepare_experiment(cfg)
        reports, summary = run_experiment(cfg, prep)
        rec = summary["algorithms"]["greedy_left"]
        assert rec["mean_max_load"] == rec["max_max_load"] == reports[0].outcomes[0].max_load

    def test_all_ratios_one_summary(self):
        cfg = ExperimentConfig(graph_source="bipartite:1:1", T_mode=3, trials=2, seed=0,
                               algorithms=("greedy_random",))
        prep = prepare_experiment(cfg)
        _, summary = run_experiment(cfg, prep)
        assert summary["algorithms"]["greedy_random"]["competitive_ratio"] == 1.0


class TestFrequencyDiagnostic:
    def test_sampled_histogram_uniform_3_sigma(self):
        g = gen_complete(12)
        s = sample_iid(g, 200_000, seed=100)
        counts = np.bincount(s.arrivals, minlength=g.m)
        p = 1 / g.m
        sigma = (s.T * p * (1 - p)) ** 0.5
        # allow a small number of 3-sigma outliers among 66 cells
        outliers = np.abs(counts - s.T * p) > 3 * sigma
        assert outliers.sum() <= 2


class TestCLI:
    def test_run_and_report(self, tmp_path):
        out = tmp_path / "r.csv"
        summ = tmp_path / "s.json"
        rc = main(["run", "-g", "complete:6", "-T", "n", "--trials", "2", "--seed", "3",
                   "--algos", "greedy_random,threshold_greedy", "-o", str(out),
                   "--summary", str(summ)])
        assert rc == 0
        table = csv_summary(str(out))
        assert set(table) == {"greedy_random", "threshold_greedy"}
        data = json.loads(summ.read_text())
        assert data["trials"] == 2
        assert main(["report", str(out)]) == 0

    def test_config_file_with_flag_override(self, tmp_path):
        cfgfile = tmp_path / "cfg.json"
        cfgfile.write_text(json.dumps({
            "graph_source": "complete:6",
            "T_mode": "n",
            "trials": 5,
            "seed": 9,
            "algorithms": ["greedy_left"],
        }))
        out = tmp_path / "o.csv"
        rc = main(["run", "--config", str(cfgfile), "--trials", "2", "-o", str(out)])
        assert rc == 0
        with open(out) as fh:
            rows = fh.read().strip().split("\n")
        assert len(rows) == 3  # header + 2 trials x 1 algorithm

    def test_gen_opt_decompose_flow(self, tmp_path):
        el = tmp_path / "g.el"
        assert main(["gen", "bipartite", "8", "2", "-o", str(el)]) == 0
        dec = tmp_path / "g.dec"
        assert main(["decompose", str(el), "-o", str(dec), "--verify"]) == 0
        assert main(["verify", str(el), str(dec)]) == 0
        assert main(["opt", str(el)]) == 0
        assert main(["skew", str(el)]) == 0
