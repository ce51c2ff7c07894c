"""`balance` command line: generators, offline optima, skew estimation,
decomposition, the Monte Carlo harness, and CSV summaries."""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction

from .generators import (
    LayeredLBParams,
    gen_biregular_imbalanced,
    gen_complete,
    gen_complete_bipartite,
    gen_layered_lb,
    gen_regular,
    layer_labels,
    layered_params_for,
)
from .graphcore import degree_stats, load_graph, save_graph
from .harness import (
    ExperimentConfig,
    csv_summary,
    prepare_experiment,
    run_experiment,
    write_outputs,
)
from .offline import (
    bipartize,
    max_density,
    optimal_orientation,
    peel_approx,
    save_certificate,
    save_orientation,
)
from .skewness import (
    decompose,
    estimate_skew,
    load_decomposition,
    save_decomposition,
    verify_decomposition,
)


def _cmd_gen(args) -> int:
    comments = [f"generated by balance gen {args.family}"]
    if args.family == "complete":
        g = gen_complete(args.n)
    elif args.family == "regular":
        g = gen_regular(args.n, args.d, args.seed)
    elif args.family == "bipartite":
        g = gen_complete_bipartite(args.a, args.b)
    elif args.family == "biregular":
        g = gen_biregular_imbalanced(args.B, args.f, args.s, args.d)
    elif args.family == "layered":
        params = LayeredLBParams(args.g, args.t, args.b)
        g = gen_layered_lb(params)
        labels = layer_labels(params)
        comments += [f"layer {v} {labels[v]}" for v in range(g.n)]
    else:
        raise SystemExit(f"unknown family {args.family}")
    save_graph(g, args.output, comments=comments)
    print(f"wrote {args.output}: n={g.n} m={g.m}"
          + (f" (bipartite, nL={g.n_left})" if g.is_bipartite else ""))
    return 0


def _cmd_layered_params(args) -> int:
    p = layered_params_for(args.n)
    print(f"target n={args.n}: group_size={p.group_size} ratio={p.ratio} "
          f"layers={p.layers} vertices={p.total_vertices} edges={p.total_edges}")
    return 0


def _cmd_opt(args) -> int:
    g = load_graph(args.graph)
    if args.approx:
        value, orient = peel_approx(g)
        print(f"peel value = {value} (= {float(value):.6f}); "
              f"guarantees {value} <= rho* <= {2 * value}")
        print(f"peel orientation max in-degree = {orient.max_in_degree}")
        return 0
    cert = max_density(g)
    orient = optimal_orientation(g)
    print(f"rho* = {cert.value} (= {float(cert.value):.6f})")
    print(f"M* = ceil(rho*) = {orient.max_in_degree}")
    print(f"witness size = {cert.witness.size}")
    if args.cert:
        save_certificate(cert, args.cert)
    if args.orientation:
        save_orientation(orient, args.orientation)
    return 0


def _cmd_bipartize(args) -> int:
    g = load_graph(args.graph)
    bip = bipartize(g)
    save_graph(bip.graph, args.output,
               comments=[f"bipartized from {args.graph}; u_L=u, u_R=n+u"])
    st = degree_stats(bip.graph)
    print(f"wrote {args.output}: n={bip.graph.n} m={bip.graph.m} Delta_L={st.max_left_degree}")
    return 0


def _cmd_skew(args) -> int:
    g = load_graph(args.graph)
    if not g.is_bipartite:
        g = bipartize(g).graph
        print("input is not bipartite; estimating on its bipartization")
    s_hat, dec = estimate_skew(g, with_decomposition=True)
    print(f"s_hat = {s_hat}")
    print(f"decomposition at s_hat: h = {dec.h}, "
          f"class sizes = {[int((dec.edge_class == i).sum()) for i in range(1, dec.h + 1)]}")
    return 0


def _cmd_decompose(args) -> int:
    g = load_graph(args.graph)
    if not g.is_bipartite:
        raise SystemExit("decompose needs a bipartite edge list; run `balance bipartize` first")
    if args.s is not None:
        dec = decompose(g, Fraction(args.s))
        if dec is None:
            raise SystemExit(f"decomposition infeasible at s={args.s}")
    else:
        _, dec = estimate_skew(g, with_decomposition=True)
    save_decomposition(dec, args.output)
    print(f"wrote {args.output}: h={dec.h} s={dec.s} rho*={dec.rho_star}")
    if args.verify:
        rep = verify_decomposition(g, dec)
        print(rep.text())
        return 0 if rep.ok else 1
    return 0


def _cmd_verify(args) -> int:
    g = load_graph(args.graph)
    dec = load_decomposition(args.decomposition, g)
    rep = verify_decomposition(g, dec)
    print(rep.text())
    return 0 if rep.ok else 1


def _cmd_run(args) -> int:
    data: dict = {}
    if args.config:
        with open(args.config, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    if args.graph is not None:
        data["graph_source"] = args.graph
    if args.dec is not None:
        data["decomposition_path"] = args.dec
    if args.T is not None:
        data["T_mode"] = args.T if args.T == "n" else int(args.T)
    if args.trials is not None:
        data["trials"] = args.trials
    if args.seed is not None:
        data["seed"] = args.seed
    if args.algos is not None:
        data["algorithms"] = tuple(args.algos.split(","))
    if args.c is not None:
        data["c"] = args.c
    if args.s is not None:
        data["s_override"] = args.s
    if args.diag is not None:
        data["diagnostics"] = tuple(args.diag.split(",")) if args.diag else ()
    if args.workers is not None:
        data["workers"] = args.workers
    cfg = ExperimentConfig.from_dict(data)
    prep = prepare_experiment(cfg)
    reports, summary = run_experiment(cfg, prep)
    write_outputs(reports, prep, csv_path=args.output, summary_path=args.summary)
    if not args.output:
        sys.stdout.write(write_outputs(reports, prep))
    _print_summary_table(summary)
    return 0


def _print_summary_table(summary: dict) -> None:
    print(f"trials={summary['trials']} T={summary['T']} "
          f"mean M*={summary['mean_offline_opt']:.3f} "
          f"(exact={summary['offline_exact']})")
    for algo, rec in sorted(summary["algorithms"].items()):
        print(f"  {algo:18s} mean={rec['mean_max_load']:8.3f} "
              f"max={rec['max_max_load']:5d} ratio={rec['competitive_ratio']:7.3f} "
              f"worst={rec['worst_trial_ratio']:7.3f}")
    if "regime" in summary:
        r = summary["regime"]
        print(f"  regime: case [{r['case']}] -> {r['algorithm']} {r['note']}")


def _cmd_report(args) -> int:
    table = csv_summary(args.csv)
    for algo, rec in table.items():
        print(f"{algo:18s} trials={rec['trials']:4d} mean={rec['mean_max_load']:8.3f} "
              f"max={rec['max_max_load']:5d} mean M*={rec['mean_offline_opt']:6.3f} "
              f"ratio={rec['competitive_ratio']:7.3f} worst={rec['worst_trial_ratio']:7.3f}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="balance",
                                 description="online graph balancing workbench")
    sub = ap.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="generate an instance family")
    gsub = gen.add_subparsers(dest="family", required=True)
    g1 = gsub.add_parser("complete")
    g1.add_argument("n", type=int)
    g2 = gsub.add_parser("regular")
    g2.add_argument("n", type=int)
    g2.add_argument("d", type=int)
    g2.add_argument("--seed", type=int, default=0)
    g3 = gsub.add_parser("bipartite")
    g3.add_argument("a", type=int)
    g3.add_argument("b", type=int)
    g4 = gsub.add_parser("biregular")
    g4.add_argument("B", type=int)
    g4.add_argument("f", type=int)
    g4.add_argument("s", type=int)
    g4.add_argument("d", type=int)
    g5 = gsub.add_parser("layered")
    g5.add_argument("g", type=int)
    g5.add_argument("t", type=int)
    g5.add_argument("b", type=int)
    for p in (g1, g2, g3, g4, g5):
        p.add_argument("-o", "--output", required=True)
        p.set_defaults(func=_cmd_gen)

    pp = sub.add_parser("layered-params",
                        help="canonical layered-family parameters for a target n")
    pp.add_argument("n", type=int)
    pp.set_defaults(func=_cmd_layered_params)

    opt = sub.add_parser("opt", help="offline optimum of a graph")
    opt.add_argument("graph")
    opt.add_argument("--approx", action="store_true", help="peeling 2-approximation")
    opt.add_argument("--cert", help="write the density certificate here")
    opt.add_argument("--orientation", help="write the optimal orientation here")
    opt.set_defaults(func=_cmd_opt)

    bip = sub.add_parser("bipartize", help="left-degree-bounded bipartite split")
    bip.add_argument("graph")
    bip.add_argument("-o", "--output", required=True)
    bip.set_defaults(func=_cmd_bipartize)

    sk = sub.add_parser("skew", help="estimate the skew parameter")
    sk.add_argument("graph")
    sk.set_defaults(func=_cmd_skew)

    dec = sub.add_parser("decompose", help="skew-biregular decomposition")
    dec.add_argument("graph")
    dec.add_argument("-s", type=str, default=None, help="skew parameter (default: estimate)")
    dec.add_argument("-o", "--output", required=True)
    dec.add_argument("--verify", action="store_true")
    dec.set_defaults(func=_cmd_decompose)

    ver = sub.add_parser("verify", help="re-check a stored decomposition")
    ver.add_argument("graph")
    ver.add_argument("decomposition")
    ver.set_defaults(func=_cmd_verify)

    run = sub.add_parser("run", help="Monte Carlo experiment")
    run.add_argument("-g", "--graph", help="edge-list path or generator spec family:args")
    run.add_argument("-d", "--dec", default=None,
                     help="stored decomposition for a bipartite -g graph")
    run.add_argument("-T", type=str, default=None, help="'n' or an integer")
    run.add_argument("--trials", type=int, default=None)
    run.add_argument("--seed", type=int, default=None)
    run.add_argument("--algos", type=str, default=None,
                     help="comma list from greedy_random,greedy_left,threshold_greedy,"
                          "left_assign,regime_auto")
    run.add_argument("--c", type=str, default=None)
    run.add_argument("-s", type=str, default=None, help="override the estimated skew")
    run.add_argument("--diag", type=str, default=None)
    run.add_argument("--workers", type=int, default=None)
    run.add_argument("--config", help="JSON config file; flags override its values")
    run.add_argument("-o", "--output", help="CSV path")
    run.add_argument("--summary", help="JSON summary path")
    run.set_defaults(func=_cmd_run)

    rep = sub.add_parser("report", help="summarize a result CSV")
    rep.add_argument("csv")
    rep.set_defaults(func=_cmd_report)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
