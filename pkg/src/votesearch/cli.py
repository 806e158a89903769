"""Command line interface.

Subcommands map one-to-one onto the library layers: `ingest` builds the
binary cache, `query` runs a single committee search, `synth` repeats the
grid experiment on generated elections, `calibrate`, `embed` and `bench`
drive the measurement tools, and `serve` starts the HTTP service.

Option values resolve in three layers: an explicit flag wins, then a
`key = value` line in the --config file, then the built-in default.
Recognised config keys: cache, gamma, k, p, seed, steps, t_max, t_min.

Exit codes: 0 on success, 1 for data problems (missing files, unknown
movies, degenerate queries) with a one-line diagnosis on stderr, 2 for
usage problems. Experiment subcommands print the effective seed so any
run can be replayed.
"""

from __future__ import annotations

import argparse
import difflib
import json
import sys
from dataclasses import dataclass, fields
from pathlib import Path

from .analysis import (
    DEFAULT_GAMMAS,
    bench_algorithms,
    build_dissimilarity_graph,
    build_extension,
    calibrate_gamma,
    embed,
)
from .elections import ApprovalElection
from .ingest import (
    CacheError,
    Catalog,
    IngestError,
    load_cache,
    load_movies,
    load_ratings,
    build_global_election,
    save_cache,
)
from .search import (
    NoSupportersError,
    Query,
    UnknownResourceError,
    format_p,
    parse_p,
    search,
)
from .service import create_app, synthetic_fixture
from .solvers import AnnealingConfig
from .synthetic import SyntheticConfig, run_histogram_experiment

EXIT_OK = 0
EXIT_DATA = 1
EXIT_USAGE = 2

_ALGO_ALIASES = {"greedy": "greedy", "anneal": "annealing", "annealing": "annealing",
                 "exact": "exact0"}


class UsageError(Exception):
    """Bad flags or config; exits 2."""


class DataError(Exception):
    """The request was well-formed but the data cannot satisfy it; exits 1."""


@dataclass
class RunConfig:
    """Defaults loadable from a --config file."""

    cache: str | None = None
    gamma: float | None = None
    k: int | None = None
    p: str | None = None
    seed: int | None = None
    steps: int | None = None
    t_max: float | None = None
    t_min: float | None = None


_CONFIG_TYPES = {f.name: f.type for f in fields(RunConfig)}
_CONFIG_COERCERS = {
    "cache": str, "gamma": float, "k": int, "p": str,
    "seed": int, "steps": int, "t_max": float, "t_min": float,
}


def load_run_config(path) -> RunConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read config file: {exc}") from None
    cfg = RunConfig()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        coerce = _CONFIG_COERCERS.get(key)
        if coerce is None:
            known = ", ".join(sorted(_CONFIG_COERCERS))
            raise UsageError(f"{path}:{lineno}: unknown key {key!r} (known: {known})")
        try:
            setattr(cfg, key, coerce(value))
        except ValueError:
            raise UsageError(
                f"{path}:{lineno}: bad value {value!r} for {key}"
            ) from None
    return cfg


def pick(flag_value, config_value, default):
    if flag_value is not None:
        return flag_value
    if config_value is not None:
        return config_value
    return default


def resolve_movie(text: str, catalog: Catalog, election: ApprovalElection) -> int:
    """Movie id from an id string, exact title, or unique title substring."""
    t = text.strip()
    if t.isdigit():
        mid = int(t)
        if mid in election.resources:
            return mid
        raise DataError(f"unknown movie id {mid}")
    exact = catalog.exact(t)
    if exact is not None:
        return exact
    hits = catalog.search(t)
    if len(hits) == 1:
        return hits[0]
    if len(hits) > 1:
        shown = "; ".join(catalog.get(m).title for m in hits[:5])
        raise DataError(f"{text!r} is ambiguous, candidates: {shown}")
    by_lower = {}
    for mid, info in catalog.items():
        by_lower.setdefault(info.title.lower(), info.title)
    near = difflib.get_close_matches(t.lower(), list(by_lower), n=5, cutoff=0.3)
    if near:
        hint = "; ".join(by_lower[n] for n in near)
        raise DataError(f"no movie matches {text!r}, closest titles: {hint}")
    raise DataError(f"no movie matches {text!r}")


def _require_cache(args, config: RunConfig):
    path = pick(args.cache, config.cache, None)
    if path is None:
        raise UsageError("no cache given (use --cache or a config file)")
    try:
        return load_cache(path)
    except FileNotFoundError:
        raise DataError(f"cache file not found: {path}") from None


def _parse_p_list(text: str) -> list:
    values = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        try:
            values.append(parse_p(part))
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    if not values:
        raise UsageError("empty p list")
    return values


def _parse_algos(text: str) -> tuple[str, ...]:
    out = []
    for part in text.split(","):
        part = part.strip().lower()
        if not part:
            continue
        internal = _ALGO_ALIASES.get(part)
        if internal is None or internal == "exact0":
            raise UsageError(f"unknown algorithm {part!r} (greedy, anneal)")
        if internal not in out:
            out.append(internal)
    if not out:
        raise UsageError("empty algorithm list")
    return tuple(out)


def _annealing_config(args, config: RunConfig) -> AnnealingConfig:
    base = AnnealingConfig()
    return AnnealingConfig(
        steps=pick(getattr(args, "steps", None), config.steps, base.steps),
        t_max=pick(None, config.t_max, base.t_max),
        t_min=pick(None, config.t_min, base.t_min),
    )


# ---------------------------------------------------------------- subcommands


def cmd_ingest(args, config: RunConfig) -> int:
    out = pick(args.out, None, None)
    if out is None:
        raise UsageError("--out is required")
    try:
        rows = load_ratings(args.ratings)
        report = build_global_election(
            rows, threshold=args.threshold, min_approvals=args.min_approvals
        )
        catalog = load_movies(args.movies).restrict(report.election.resources)
    except FileNotFoundError as exc:
        raise DataError(str(exc)) from None
    save_cache(
        out,
        report.election,
        catalog,
        threshold=args.threshold,
        min_approvals=args.min_approvals,
    )
    size = Path(out).stat().st_size
    if args.json:
        print(json.dumps({
            "ratings_parsed": report.ratings_parsed,
            "duplicate_ratings": report.duplicate_ratings,
            "agents": report.election.num_agents,
            "resources": len(report.election.resources),
            "resources_dropped": report.resources_dropped,
            "catalog_entries": len(catalog),
            "cache": str(out),
            "bytes": size,
        }, indent=2))
        return EXIT_OK
    print(f"ratings parsed: {report.ratings_parsed} "
          f"({report.duplicate_ratings} duplicate)")
    print(f"agents: {report.election.num_agents}")
    print(f"resources kept: {len(report.election.resources)} "
          f"({report.resources_dropped} dropped below min approvals)")
    print(f"catalog entries: {len(catalog)}")
    print(f"cache written: {out} ({size} bytes)")
    return EXIT_OK


def cmd_query(args, config: RunConfig) -> int:
    ds = _require_cache(args, config)
    ids = [resolve_movie(text, ds.catalog, ds.election) for text in args.movie]
    try:
        p = parse_p(pick(args.p, config.p, "0"))
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    algorithm = _ALGO_ALIASES[args.algo]
    seed = pick(args.seed, config.seed, None)
    try:
        query = Query(
            resources=frozenset(ids),
            p=p,
            gamma=pick(args.gamma, config.gamma, 2.0),
            k=pick(args.k, config.k, 10),
            algorithm=algorithm,
            seed=seed,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None

    result = search(ds.election, ds.catalog, query)
    if result.no_results:
        raise DataError(
            f"query {sorted(query.resources)}: supporters of the query "
            "approve nothing else"
        )
    if result.algorithm == "annealing":
        print(f"seed: {result.seed}", file=sys.stderr)
    if args.json:
        print(json.dumps(result.to_json_dict(), indent=2))
        return EXIT_OK

    names = ", ".join(
        f"{ds.catalog.get(m).title} [{m}]" if m in ds.catalog else f"[{m}]"
        for m in sorted(query.resources)
    )
    print(f"query: {names}")
    print(
        f"p={format_p(query.p)}  k={query.k}  algorithm={result.algorithm}  "
        f"score={result.score:.4f}  local agents={result.n_local_agents}  "
        f"local resources={result.n_local_resources}"
        + ("  [truncated]" if result.truncated else "")
    )
    width = max((len(m.title) for m in result.members), default=5)
    print(f"{'rank':>4}  {'id':>7}  {'title':<{width}}  {'tfidf':>10}  "
          f"{'local':>5}  {'global':>6}  {'iter':>4}")
    for rank, m in enumerate(result.members, start=1):
        iteration = str(m.iteration) if m.iteration is not None else "-"
        print(f"{rank:>4}  {m.id:>7}  {m.title:<{width}}  {m.tfidf:>10.4f}  "
              f"{m.local_approvals:>5}  {m.global_approvals:>6}  {iteration:>4}")
    return EXIT_OK


def cmd_synth(args, config: RunConfig) -> int:
    seed = pick(args.seed, config.seed, 0)
    p_values = _parse_p_list(args.p_values)
    algorithms = _parse_algos(args.algos)
    k = pick(args.k, config.k, 10)
    gamma = pick(args.gamma, config.gamma, 2.0)
    cfg = SyntheticConfig(voters=args.voters, draws_per_voter=args.draws, seed=seed)

    print(f"seed: {seed}")
    trials = args.trials
    every = max(1, trials // 10)
    progress = None
    if trials >= 20:
        def progress(done, total=trials, step=every):
            if done % step == 0 or done == total:
                print(f"  trial {done}/{total}", file=sys.stderr)

    result = run_histogram_experiment(
        cfg,
        trials=trials,
        k=k,
        p_values=tuple(p_values),
        algorithms=algorithms,
        gamma=gamma,
        annealing=_annealing_config(args, config),
        progress=progress,
    )

    u, v, i = cfg.movie_label(result.query)
    print(f"query: movie {result.query} (category {u}, subcategory {v}, item {i})")
    header = "p\talgorithm\tx\ty\tz\ttotal"
    lines = [header]
    ordered = sorted(result.histograms, key=lambda key: (float(key[0]), key[1]))
    for p, algo in ordered:
        hist = result.histograms[(p, algo)]
        x, y, z = hist.summary
        lines.append(f"{format_p(p)}\t{algo}\t{x}\t{y}\t{z}\t{hist.total}")
    print("\n".join(lines))
    if result.regenerated:
        print(f"regenerated: {len(result.regenerated)} trial attempts")

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "summary.tsv").write_text("\n".join(lines) + "\n")
    for p, algo in ordered:
        hist = result.histograms[(p, algo)]
        grid = "\n".join("\t".join(str(c) for c in row) for row in hist.counts)
        (out / f"grid_p{format_p(p)}_{algo}.tsv").write_text(grid + "\n")
    print(f"wrote {len(ordered) + 1} files to {out}")

    if args.plot:
        _plot_grids(result, ordered, args.plot)
        print(f"plot written: {args.plot}")
    return EXIT_OK


def cmd_calibrate(args, config: RunConfig) -> int:
    ds = _require_cache(args, config)
    if len(args.movie) < 2:
        raise UsageError("calibrate needs at least two --movie arguments")
    family = sorted(resolve_movie(t, ds.catalog, ds.election) for t in args.movie)
    if args.gammas is None:
        gammas = DEFAULT_GAMMAS
    else:
        try:
            gammas = tuple(float(g) for g in args.gammas.split(",") if g.strip())
        except ValueError as exc:
            raise UsageError(f"bad --gammas: {exc}") from None
    result = calibrate_gamma(
        ds.election, family, gammas=gammas, top=args.top
    )
    print("gamma\t" + "\t".join(str(m) for m in family) + "\tmean")
    for row in result.rows:
        counts = "\t".join(str(row.counts[m]) for m in family)
        print(f"{row.gamma:g}\t{counts}\t{row.mean:.4f}")
    if result.flagged:
        flagged = ", ".join(str(m) for m in sorted(result.flagged))
        print(f"warning: degenerate family members: {flagged}", file=sys.stderr)
    return EXIT_OK


def cmd_embed(args, config: RunConfig) -> int:
    ds = _require_cache(args, config)
    ids = sorted({resolve_movie(t, ds.catalog, ds.election) for t in args.movie})
    p_values = _parse_p_list(args.p_values)
    gamma = pick(args.gamma, config.gamma, 2.0)
    seed = pick(args.seed, config.seed, 0)
    k = pick(args.k, config.k, 10)

    ext = build_extension(ds.election, ids, k=k, p_values=tuple(p_values), gamma=gamma)
    if not ext:
        raise DataError("every queried movie has a degenerate local election")
    graph = build_dissimilarity_graph(ds.election, ext, gamma=gamma)
    layout = embed(graph, iterations=args.iterations, seed=seed)
    print(f"seed: {seed}", file=sys.stderr)
    print(f"nodes: {len(graph.nodes)}", file=sys.stderr)

    nodes = []
    for mid in sorted(graph.nodes):
        x, y = layout.positions[mid]
        if mid in ds.catalog:
            info = ds.catalog.get(mid)
            title = info.title
            genre = info.genres[0] if info.genres else ""
        else:
            title, genre = f"movie-{mid}", ""
        nodes.append(
            {"id": mid, "title": title, "genre": genre,
             "x": float(x), "y": float(y)}
        )
    edges = [
        {"a": a, "b": b, "diss": value}
        for (a, b), value in sorted(graph.diss.items())
    ]
    doc = json.dumps({"nodes": nodes, "edges": edges}, indent=2) + "\n"
    if args.out:
        Path(args.out).write_text(doc)
        print(f"embedding written: {args.out}", file=sys.stderr)
    else:
        sys.stdout.write(doc)

    if args.plot:
        _plot_embedding(nodes, args.plot)
        print(f"plot written: {args.plot}", file=sys.stderr)
    return EXIT_OK


def cmd_bench(args, config: RunConfig) -> int:
    ds = _require_cache(args, config)
    seed = pick(args.seed, config.seed, 0)
    p_values = _parse_p_list(args.p_values)
    k = pick(args.k, config.k, 10)
    gamma = pick(args.gamma, config.gamma, 2.0)
    result = bench_algorithms(
        ds.election,
        sample_size=args.sample,
        p_values=tuple(p_values),
        k=k,
        seed=seed,
        gamma=gamma,
        annealing=_annealing_config(args, config),
    )
    print(f"seed: {seed}")
    print("p\tmean\tstd\trows")
    for p in p_values:
        mean, std = result.summary[p]
        count = sum(1 for row in result.rows if row.p == p)
        print(f"{format_p(p)}\t{mean:.4f}\t{std:.4f}\t{count}")
    if result.skipped:
        skipped = ", ".join(str(m) for m in result.skipped)
        print(f"skipped: {skipped} (degenerate local elections)", file=sys.stderr)
    if args.out:
        lines = ["movie\tp\tratio\tgreedy_score\tannealing_score\tglobal_approvals"]
        for row in result.rows:
            lines.append(
                f"{row.movie}\t{format_p(row.p)}\t{row.ratio:.6f}\t"
                f"{row.greedy_score:.6f}\t{row.annealing_score:.6f}\t"
                f"{row.global_approvals}"
            )
        Path(args.out).write_text("\n".join(lines) + "\n")
        print(f"rows written: {args.out}", file=sys.stderr)
    return EXIT_OK


def cmd_serve(args, config: RunConfig) -> int:
    if args.synthetic_seed is not None and args.cache is not None:
        raise UsageError("--cache and --synthetic-seed are mutually exclusive")
    gamma = pick(args.gamma, config.gamma, 2.0)
    if args.synthetic_seed is not None:
        election, catalog = synthetic_fixture(
            seed=args.synthetic_seed, voters=args.voters, draws=args.draws
        )
        source = f"synthetic fixture (seed {args.synthetic_seed})"
    else:
        path = pick(args.cache, config.cache, None)
        if path is None:
            raise UsageError("serve needs --cache or --synthetic-seed")
        ds = load_cache(path)
        election, catalog = ds.election, ds.catalog
        source = str(path)
    app = create_app(
        election, catalog, gamma_default=gamma, node_cap=args.node_cap
    )
    print(f"dataset: {source} "
          f"({election.num_agents} agents, {len(election.resources)} resources)")
    print(f"listening on http://{args.host}:{args.port}")
    _run_server(app, args.host, args.port)
    return EXIT_OK


def _run_server(app, host: str, port: int) -> None:
    import uvicorn

    uvicorn.run(app, host=host, port=port, log_level="warning")


# --------------------------------------------------------------------- plots


def _pyplot():
    try:
        import matplotlib
    except ImportError:
        raise UsageError("plotting requires matplotlib") from None
    matplotlib.use("Agg")
    from matplotlib import pyplot as plt

    return plt


def _plot_grids(result, ordered, path) -> None:
    plt = _pyplot()
    cols = len(ordered)
    fig, axes = plt.subplots(1, cols, figsize=(3 * cols, 3.2), squeeze=False)
    for ax, key in zip(axes[0], ordered):
        hist = result.histograms[key]
        ax.imshow(hist.counts, cmap="viridis")
        ax.set_title(f"p={format_p(key[0])} {key[1]}", fontsize=9)
        ax.set_xlabel("subcategory")
        ax.set_ylabel("category")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def _plot_embedding(nodes, path) -> None:
    plt = _pyplot()
    genres = sorted({n["genre"] for n in nodes})
    cmap = plt.get_cmap("tab10")
    colors = {g: cmap(i % 10) for i, g in enumerate(genres)}
    fig, ax = plt.subplots(figsize=(6, 6))
    for g in genres:
        xs = [n["x"] for n in nodes if n["genre"] == g]
        ys = [n["y"] for n in nodes if n["genre"] == g]
        ax.scatter(xs, ys, s=24, color=colors[g], label=g or "(none)")
    ax.set_xlim(0, 1)
    ax.set_ylim(0, 1)
    ax.legend(fontsize=7, loc="best")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


# -------------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--cache", help="path to a cache built by ingest")
    common.add_argument("--config", help="key = value defaults file")
    common.add_argument("--seed", type=int, help="random seed")
    common.add_argument("--json", action="store_true",
                        help="JSON output (query, ingest)")
    common.add_argument("--threads", type=int,
                        help="reserved; the pipeline is single-threaded")

    parser = argparse.ArgumentParser(
        prog="votesearch",
        description="Committee search over approval data with a tunable "
                    "focus/diversity dial.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_ingest = sub.add_parser("ingest", parents=[common],
                              help="build a binary cache from CSV files")
    p_ingest.add_argument("--ratings", required=True)
    p_ingest.add_argument("--movies", required=True)
    p_ingest.add_argument("--threshold", type=float, default=4.0,
                          help="minimum rating that counts as approval")
    p_ingest.add_argument("--min-approvals", type=int, default=20,
                          help="drop movies with fewer approvals")
    p_ingest.add_argument("--out", required=True, help="cache file to write")
    p_ingest.set_defaults(func=cmd_ingest)

    p_query = sub.add_parser("query", parents=[common],
                             help="search for a committee")
    p_query.add_argument("--movie", action="append", required=True,
                         help="movie id, exact title, or unique title substring "
                              "(repeatable)")
    p_query.add_argument("--p", help="focus/diversity dial: 0, 1, 2, ... or inf")
    p_query.add_argument("--k", type=int, help="committee size (default 10)")
    p_query.add_argument("--algo", choices=["greedy", "anneal", "exact"],
                         default="greedy")
    p_query.add_argument("--gamma", type=float, help="IDF base (default 2.0)")
    p_query.set_defaults(func=cmd_query)

    p_synth = sub.add_parser("synth", parents=[common],
                             help="histogram experiment on synthetic elections")
    p_synth.add_argument("--trials", type=int, default=100)
    p_synth.add_argument("--k", type=int)
    p_synth.add_argument("--p-values", default="0,1,2,3")
    p_synth.add_argument("--algos", default="greedy,anneal")
    p_synth.add_argument("--voters", type=int, default=2000)
    p_synth.add_argument("--draws", type=int, default=162)
    p_synth.add_argument("--steps", type=int, help="annealing steps")
    p_synth.add_argument("--gamma", type=float)
    p_synth.add_argument("--out", required=True, help="directory for TSV grids")
    p_synth.add_argument("--plot", help="write a PNG of the grids")
    p_synth.set_defaults(func=cmd_synth)

    p_cal = sub.add_parser("calibrate", parents=[common],
                           help="sweep gamma against a known movie family")
    p_cal.add_argument("--movie", action="append", required=True)
    p_cal.add_argument("--gammas", help="comma-separated gamma values")
    p_cal.add_argument("--top", type=int, default=10)
    p_cal.set_defaults(func=cmd_calibrate)

    p_embed = sub.add_parser("embed", parents=[common],
                             help="2-D map of the neighbourhood of a query")
    p_embed.add_argument("--movie", action="append", required=True)
    p_embed.add_argument("--k", type=int)
    p_embed.add_argument("--p-values", default="0,1,2,3")
    p_embed.add_argument("--iterations", type=int, default=10_000)
    p_embed.add_argument("--gamma", type=float)
    p_embed.add_argument("--out", help="JSON file (stdout when omitted)")
    p_embed.add_argument("--plot", help="write a PNG scatter")
    p_embed.set_defaults(func=cmd_embed)

    p_bench = sub.add_parser("bench", parents=[common],
                             help="greedy vs annealing score ratios")
    p_bench.add_argument("--sample", type=int, default=1000)
    p_bench.add_argument("--p-values", default="1,2,3")
    p_bench.add_argument("--k", type=int)
    p_bench.add_argument("--steps", type=int, help="annealing steps")
    p_bench.add_argument("--gamma", type=float)
    p_bench.add_argument("--out", help="TSV file for per-movie rows")
    p_bench.set_defaults(func=cmd_bench)

    p_serve = sub.add_parser("serve", parents=[common],
                             help="start the HTTP service")
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=8000)
    p_serve.add_argument("--node-cap", type=int, default=200,
                         help="largest embedding the service will compute")
    p_serve.add_argument("--gamma", type=float)
    p_serve.add_argument("--synthetic-seed", type=int,
                         help="serve a generated dataset instead of a cache")
    p_serve.add_argument("--voters", type=int, default=500,
                         help="synthetic fixture size")
    p_serve.add_argument("--draws", type=int, default=120,
                         help="synthetic fixture draws per voter")
    p_serve.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        config = load_run_config(args.config) if args.config else RunConfig()
        return args.func(args, config)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        print(f"run 'votesearch {args.command} --help' for usage", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, IngestError, CacheError,
            UnknownResourceError, NoSupportersError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
