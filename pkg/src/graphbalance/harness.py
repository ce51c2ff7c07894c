"""Experiment orchestration: seeded trials, per-sample exact optima,
algorithm runs, and bit-stable CSV reporting.

Per trial: sample a stream with a child seed, run every selected algorithm,
compute the exact offline optimum of the sample (peeling fallback above the
edge budget, flagged), and emit one CSV row per (trial, algorithm). The
graph, bipartization, decomposition and thresholds are computed once and
shared read-only; trials may run across processes and still produce
byte-identical output.
"""

from __future__ import annotations

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from multiprocessing import get_context

import numpy as np

from .complete import CompleteGraph
from .generators import (
    LayeredLBParams,
    gen_biregular_imbalanced,
    gen_complete,
    gen_complete_bipartite,
    gen_layered_lb,
    gen_regular,
)
from .graphcore import (
    SampledStream,
    ceil_frac,
    degree_stats,
    load_graph,
    sample_iid,
    components,
)
from .offline import (
    DensityCertificate,
    bipartize,
    lower_bounds,
    max_density,
    offline_opt,
    peel_certificate,
)
from .online import (
    Regime,
    RegimePlan,
    left_degree_cap_exceeded,
    make_thresholds,
    run_greedy,
    run_left_assign,
    run_threshold_greedy,
    select_regime,
)
from .rng import child_seed
from .skewness import decompose, estimate_skew

CSV_HEADER = "trial,algo,T,max_load,offline_opt,ratio,largest_greedy_component,alpha_sum,seed"

KNOWN_ALGORITHMS = ("greedy_random", "greedy_left", "threshold_greedy", "left_assign",
                    "regime_auto")

MATERIALIZE_BUDGET = 5_000_000


class ExperimentError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    graph_source: str
    T_mode: str | int = "n"
    trials: int = 1
    seed: int = 0
    algorithms: tuple[str, ...] = ("greedy_random",)
    c: Fraction = Fraction(8)
    s_override: Fraction | None = None
    diagnostics: tuple[str, ...] = ("greedy_components",)
    workers: int = 1
    offline_budget: int = 5_000_000
    decomposition_path: str | None = None

    def validate(self) -> None:
        if self.trials < 1:
            raise ExperimentError("trials must be >= 1")
        if not self.algorithms:
            raise ExperimentError("at least one algorithm is required")
        for a in self.algorithms:
            if a not in KNOWN_ALGORITHMS:
                raise ExperimentError(f"unknown algorithm {a!r}")
        for d in self.diagnostics:
            if d not in ("greedy_components", "threshold_usage"):
                raise ExperimentError(f"unknown diagnostic {d!r}")
        if Fraction(self.c) <= 0:
            raise ExperimentError("c must be positive")

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        kw = dict(data)
        if "algorithms" in kw and isinstance(kw["algorithms"], (list, tuple)):
            kw["algorithms"] = tuple(kw["algorithms"])
        if "diagnostics" in kw and isinstance(kw["diagnostics"], (list, tuple)):
            kw["diagnostics"] = tuple(kw["diagnostics"])
        if "c" in kw:
            kw["c"] = Fraction(str(kw["c"]))
        if kw.get("s_override") is not None:
            kw["s_override"] = Fraction(str(kw["s_override"]))
        cfg = cls(**kw)
        cfg.validate()
        return cfg


def resolve_graph_source(source: str, materialize_budget: int = MATERIALIZE_BUDGET):
    """A file path, or a generator spec 'family:arg:...'.

    Families: complete:n, regular:n:d:seed, bipartite:a:b, biregular:B:f:s:d,
    layered:g:t:b. complete:n falls back to the implicit representation when
    its edge list exceeds the budget.
    """
    head, _, rest = source.partition(":")
    if head == "complete" and rest:
        n = int(rest)
        if n * (n - 1) // 2 > materialize_budget:
            return CompleteGraph(n)
        return gen_complete(n)
    if head == "regular" and rest:
        n, d, seed = (int(x) for x in rest.split(":"))
        return gen_regular(n, d, seed)
    if head == "bipartite" and rest:
        a, b = (int(x) for x in rest.split(":"))
        return gen_complete_bipartite(a, b)
    if head == "biregular" and rest:
        b_size, f, s, d = (int(x) for x in rest.split(":"))
        return gen_biregular_imbalanced(b_size, f, s, d)
    if head == "layered" and rest:
        g, t, b = (int(x) for x in rest.split(":"))
        return gen_layered_lb(LayeredLBParams(g, t, b))
    return load_graph(source)


def _density_for(graph, budget: int) -> DensityCertificate:
    """Exact density below the budget; witnessed peel value (flagged) above."""
    special = getattr(graph, "density_certificate", None)
    if special is not None:
        return special()
    if graph.m <= budget:
        return max_density(graph)
    return peel_certificate(graph)


@dataclass
class ThresholdPipeline:
    """Bipartite working graph + decomposition + thresholds for one base."""

    work: object
    fold: object | None  # Bipartization when the base had to be split
    cert: DensityCertificate
    dec: object
    alphas: object
    s_hat: Fraction
    claim_cap_route: bool


def _prepare_threshold(graph, c: Fraction, s_override, budget: int,
                       dec_path: str | None = None) -> ThresholdPipeline:
    base_cert = _density_for(graph, budget)
    needs_split = not graph.is_bipartite
    if not needs_split:
        st = degree_stats(graph)
        needs_split = st.max_left_degree > 4 * base_cert.value
    if dec_path is not None:
        if needs_split:
            raise ExperimentError(
                "a stored decomposition needs a left-degree-bounded bipartite base; "
                "decompose the bipartized graph instead"
            )
        from .skewness import load_decomposition

        dec = load_decomposition(dec_path, graph)
        work, bip, cert = graph, None, base_cert
        s_hat = dec.s
        st = degree_stats(work)
        alphas = make_thresholds(dec.rho_star, st.avg_degree, s_hat, work.n, c, dec.h)
        return ThresholdPipeline(work=work, fold=None, cert=cert, dec=dec, alphas=alphas,
                                 s_hat=s_hat, claim_cap_route=left_degree_cap_exceeded(work))
    if needs_split:
        bip = bipartize(graph)
        work = bip.graph
        cert = _density_for(work, budget)
    else:
        bip = None
        work = graph
        cert = base_cert
    chunked = getattr(work, "chunked_decomposition", None)
    if chunked is not None:
        dec = chunked(s_override if s_override is not None else Fraction(1))
        s_hat = dec.s
    elif s_override is not None:
        s_hat = Fraction(s_override)
        dec = decompose(work, s_hat, cert.value)
        if dec is None:
            raise ExperimentError(f"decomposition infeasible at s_override={s_override}")
    else:
        s_hat, dec = estimate_skew(work, cert.value, with_decomposition=True)
    st = degree_stats(work)
    alphas = make_thresholds(cert.value, st.avg_degree, s_hat, work.n, c, dec.h)
    return ThresholdPipeline(
        work=work,
        fold=bip,
        cert=cert,
        dec=dec,
        alphas=alphas,
        s_hat=s_hat,
        claim_cap_route=left_degree_cap_exceeded(work),
    )


@dataclass
class PreparedExperiment:
    cfg: ExperimentConfig
    base: object
    T: int
    base_cert: DensityCertificate
    bounds: object
    tg: ThresholdPipeline | None = None
    left: ThresholdPipeline | None = None
    regime: RegimePlan | None = None
    regime_tg: ThresholdPipeline | None = None

    @property
    def alpha_sum(self) -> int:
        return self.tg.alphas.alpha_sum if self.tg is not None else 0


def prepare_experiment(cfg: ExperimentConfig) -> PreparedExperiment:
    cfg.validate()
    base = resolve_graph_source(cfg.graph_source)
    if base.m == 0:
        raise ExperimentError("base graph has no edges")
    T = base.n if cfg.T_mode == "n" else int(cfg.T_mode)
    if T < 1:
        raise ExperimentError("T must be >= 1")
    base_cert = _density_for(base, cfg.offline_budget)
    bounds = lower_bounds(base, T, base_cert)
    prep = PreparedExperiment(cfg=cfg, base=base, T=T, base_cert=base_cert, bounds=bounds)

    algs = set(cfg.algorithms)
    if "threshold_greedy" in algs:
        prep.tg = _prepare_threshold(base, Fraction(cfg.c), cfg.s_override,
                                     cfg.offline_budget, cfg.decomposition_path)
    if "left_assign" in algs:
        prep.left = prep.tg or _prepare_threshold(base, Fraction(cfg.c), cfg.s_override,
                                                  cfg.offline_budget, cfg.decomposition_path)
    if "regime_auto" in algs:
        prep.regime = select_regime(base, T)
        plan = prep.regime
        if plan.wrapped_algorithm == "threshold_greedy":
            if plan.case == Regime.SUBLINEAR and plan.augmented_graph is None:
                raise ExperimentError("budget exceeded: regime augmentation cannot be built")
            target = plan.augmented_graph if plan.augmented_graph is not None else base
            if target is base and prep.tg is not None:
                prep.regime_tg = prep.tg
            else:
                prep.regime_tg = _prepare_threshold(target, Fraction(cfg.c), cfg.s_override,
                                                    cfg.offline_budget)
            if prep.regime_tg.claim_cap_route:
                # Claim-2.6 guard: Delta_L beyond lg(n)*d_av makes left-assign
                # the algorithm of record for the routed case
                plan.wrapped_algorithm = "left_assign"
                plan.note = (plan.note + "; left-degree cap exceeded: routed to left-assign").strip("; ")
        elif plan.wrapped_algorithm == "left_assign":
            prep.regime_tg = None
        if plan.wrapped_algorithm == "left_assign" and prep.regime_tg is None:
            # left-assign needs a bipartite surface for the routed case too
            prep.regime_tg = (prep.tg or prep.left
                              or _prepare_threshold(base, Fraction(cfg.c), cfg.s_override,
                                                    cfg.offline_budget))
    return prep


@dataclass
class AlgoOutcome:
    algo: str
    max_load: int
    largest_greedy_component: int
    threshold_totals: tuple[int, ...] = ()


@dataclass
class TrialReport:
    trial_index: int
    seed: int
    T: int
    offline_opt: int
    offline_exact: bool
    outcomes: list[AlgoOutcome] = field(default_factory=list)

    def ratio(self, outcome: AlgoOutcome) -> Fraction:
        return Fraction(outcome.max_load, max(self.offline_opt, 1))


def _stream_on(work, stream: SampledStream) -> SampledStream:
    """Re-root an arrival sequence onto an edge-index-compatible graph."""
    if work is stream.base:
        return stream
    return SampledStream(base=work, arrivals=stream.arrivals, seed=stream.seed, T=stream.T)


def _folded_max(pipe: ThresholdPipeline, state) -> int:
    if pipe.fold is None:
        return state.max_load
    return int(pipe.fold.fold_loads(state.total_load).max())


def _conserve(state, stream: SampledStream) -> None:
    if int(state.total_load.sum()) != stream.T:
        raise AssertionError("load conservation violated")


def _run_one(prep: PreparedExperiment, algo: str, stream: SampledStream, seed_t: int,
             want_components: bool) -> AlgoOutcome:
    if algo == "greedy_random":
        state = run_greedy(stream, tie_break="random", tie_seed=child_seed(seed_t, 1))
        _conserve(state, stream)
        return AlgoOutcome(algo, state.max_load, 0)
    if algo == "greedy_left":
        state = run_greedy(stream, tie_break="prefer_left")
        _conserve(state, stream)
        return AlgoOutcome(algo, state.max_load, 0)
    if algo == "left_assign":
        pipe = prep.left
        state = run_left_assign(_stream_on(pipe.work, stream))
        _conserve(state, stream)
        return AlgoOutcome(algo, _folded_max(pipe, state), 0)
    if algo == "threshold_greedy":
        pipe = prep.tg
        state = run_threshold_greedy(pipe.work, pipe.dec, pipe.alphas,
                                     _stream_on(pipe.work, stream))
        _conserve(state, stream)
        lgc = _largest_component(pipe.work, state.greedy_edges) if want_components else 0
        totals = tuple(int(x) for x in state.class_load.sum(axis=0))
        return AlgoOutcome(algo, _folded_max(pipe, state), lgc, totals)
    if algo == "regime_auto":
        plan = prep.regime
        if plan.wrapped_algorithm == "greedy":
            state = run_greedy(stream, tie_break="random", tie_seed=child_seed(seed_t, 2))
            _conserve(state, stream)
            return AlgoOutcome(algo, state.max_load, 0)
        pipe = prep.regime_tg
        if plan.wrapped_algorithm == "left_assign":
            state = run_left_assign(_stream_on(pipe.work, stream))
            _conserve(state, stream)
            return AlgoOutcome(algo, _folded_max(pipe, state), 0)
        state = run_threshold_greedy(pipe.work, pipe.dec, pipe.alphas,
                                     _stream_on(pipe.work, stream))
        _conserve(state, stream)
        lgc = _largest_component(pipe.work, state.greedy_edges) if want_components else 0
        totals = tuple(int(x) for x in state.class_load.sum(axis=0))
        return AlgoOutcome(algo, _folded_max(pipe, state), lgc, totals)
    raise ExperimentError(f"unknown algorithm {algo!r}")


def _largest_component(work, greedy_edges) -> int:
    sizes = diagnostic_greedy_components_from_edges(work, greedy_edges)
    return sizes[0] if sizes else 0


def diagnostic_greedy_components_from_edges(g, greedy_edges) -> list[int]:
    return components(g, np.asarray(greedy_edges, dtype=np.int64))


def diagnostic_greedy_components(state, g) -> list[int]:
    """Component sizes of the greedy-edge subgraph of a threshold run."""
    return diagnostic_greedy_components_from_edges(g, state.greedy_edges)


def _offline_for(stream: SampledStream, budget: int) -> tuple[int, bool]:
    if stream.T == 0:
        return 0, True
    if stream.T <= budget:
        return offline_opt(stream), True
    return ceil_frac(peel_certificate(stream).value), False


def run_trial(prep: PreparedExperiment, trial_index: int) -> TrialReport:
    cfg = prep.cfg
    seed_t = child_seed(cfg.seed, trial_index)
    stream = sample_iid(prep.base, prep.T, seed_t)
    m_star, exact = _offline_for(stream, cfg.offline_budget)
    want_components = "greedy_components" in cfg.diagnostics
    report = TrialReport(trial_index=trial_index, seed=seed_t, T=prep.T,
                         offline_opt=m_star, offline_exact=exact)
    for algo in cfg.algorithms:
        out = _run_one(prep, algo, stream, seed_t, want_components)
        if out.max_load < m_star:
            raise AssertionError(
                f"trial {trial_index}: {algo} max load {out.max_load} below the "
                f"offline optimum {m_star}"
            )
        report.outcomes.append(out)
    return report


_WORKER_PREP: PreparedExperiment | None = None


def _worker(trial_index: int) -> TrialReport:
    return run_trial(_WORKER_PREP, trial_index)


def run_experiment(cfg: ExperimentConfig,
                   prep: PreparedExperiment | None = None) -> tuple[list[TrialReport], dict]:
    """Execute all trials (possibly across processes) and summarize."""
    global _WORKER_PREP
    if prep is None:
        prep = prepare_experiment(cfg)
    if cfg.workers <= 1 or cfg.trials == 1:
        reports = [run_trial(prep, i) for i in range(cfg.trials)]
    else:
        _WORKER_PREP = prep
        try:
            ctx = get_context("fork")
            with ProcessPoolExecutor(max_workers=cfg.workers, mp_context=ctx) as pool:
                reports = list(pool.map(_worker, range(cfg.trials)))
        finally:
            _WORKER_PREP = None
    reports.sort(key=lambda r: r.trial_index)
    return reports, summarize(reports, prep)


def summarize(reports: list[TrialReport], prep: PreparedExperiment | None = None) -> dict:
    """Aggregate per-algorithm means, maxima and empirical competitive ratios."""
    if not reports:
        raise ExperimentError("summarize needs at least one report")
    algos: dict[str, dict] = {}
    mean_m_star = Fraction(sum(r.offline_opt for r in reports), len(reports))
    for r in reports:
        for out in r.outcomes:
            rec = algos.setdefault(out.algo, {"loads": [], "ratios": []})
            rec["loads"].append(out.max_load)
            rec["ratios"].append(r.ratio(out))
    summary: dict = {
        "trials": len(reports),
        "T": reports[0].T,
        "mean_offline_opt": float(mean_m_star),
        "min_offline_opt": min(r.offline_opt for r in reports),
        "max_offline_opt": max(r.offline_opt for r in reports),
        "offline_exact": all(r.offline_exact for r in reports),
        "algorithms": {},
    }
    for algo, rec in algos.items():
        loads = rec["loads"]
        mean_load = Fraction(sum(loads), len(loads))
        summary["algorithms"][algo] = {
            "mean_max_load": float(mean_load),
            "max_max_load": max(loads),
            "competitive_ratio": float(mean_load / mean_m_star) if mean_m_star else 0.0,
            "worst_trial_ratio": float(max(rec["ratios"])),
        }
    if prep is not None:
        summary["lower_bounds"] = {
            "density_lb": float(prep.bounds.density_lb),
            "multiplicity_lb": float(prep.bounds.multiplicity_lb),
        }
        summary["alpha_sum"] = prep.alpha_sum
        if prep.tg is not None:
            summary["s_hat"] = str(prep.tg.s_hat)
            summary["h"] = prep.tg.dec.h
            summary["rho_star_work"] = str(prep.tg.cert.value)
            summary["rho_star_exact"] = prep.tg.cert.exact
        if prep.regime is not None:
            summary["regime"] = {
                "case": prep.regime.case,
                "algorithm": prep.regime.wrapped_algorithm,
                "gamma": str(prep.regime.gamma),
                "clique_size": prep.regime.clique_size,
                "isolated_added": prep.regime.isolated_added,
                "note": prep.regime.note,
            }
        summary["base_rho_star"] = str(prep.base_cert.value)
        summary["base_rho_exact"] = prep.base_cert.exact
    return summary


def reports_to_csv(reports: list[TrialReport], prep: PreparedExperiment) -> str:
    """Fixed column order; bit-stable formatting."""
    lines = [CSV_HEADER]
    for r in reports:
        for out in r.outcomes:
            ratio = r.ratio(out)
            lines.append(
                f"{r.trial_index},{out.algo},{r.T},{out.max_load},{r.offline_opt},"
                f"{float(ratio):.6f},{out.largest_greedy_component},{prep.alpha_sum},{r.seed}"
            )
    return "\n".join(lines) + "\n"


def csv_summary(path: str) -> dict:
    """Summarize a written CSV (the `balance report` path)."""
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != CSV_HEADER:
            raise ExperimentError("unrecognized CSV header")
        rows = [line.strip().split(",") for line in fh if line.strip()]
    by_algo: dict[str, list[tuple[int, int]]] = {}
    for row in rows:
        by_algo.setdefault(row[1], []).append((int(row[3]), int(row[4])))
    out = {}
    for algo, vals in sorted(by_algo.items()):
        loads = [v[0] for v in vals]
        opts = [v[1] for v in vals]
        mean_load = sum(loads) / len(loads)
        mean_opt = sum(opts) / len(opts)
        out[algo] = {
            "trials": len(vals),
            "mean_max_load": mean_load,
            "max_max_load": max(loads),
            "mean_offline_opt": mean_opt,
            "competitive_ratio": mean_load / mean_opt if mean_opt else 0.0,
            "worst_trial_ratio": max(l / max(o, 1) for l, o in vals),
        }
    return out


def write_outputs(reports, prep, csv_path=None, summary_path=None) -> str:
    text = reports_to_csv(reports, prep)
    if csv_path:
        with open(csv_path, "w", encoding="utf-8") as fh:
            fh.write(text)
    if summary_path:
        with open(summary_path, "w", encoding="utf-8") as fh:
            json.dump(summarize(reports, prep), fh, indent=2, sort_keys=True)
            fh.write("\n")
    return text
