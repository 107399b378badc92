"""Command-line front end: ``qcfr <command> ...``.

Exit codes
    0  success
    1  other library error
    2  invalid parameters or usage
    3  no coefficients found (search)
    4  file cannot be rebuilt (singular subset, too few shards)
    5  repair impossible (fixed helpers missing)
    6  shard header mismatch or scheme violation
    7  infeasible MBR / tradeoff parameters
    8  problem too large for exhaustive enumeration
    9  I/O error

The default seed for every randomized path is read from ``QCFR_SEED``
(0 when unset) and can be overridden with ``--seed``.
"""

from __future__ import annotations

import argparse
import itertools
import json
import math
import os
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import analysis, gf, mbr, shard, simulator, tradeoff
from .errors import (
    HeaderMismatch,
    InsufficientShards,
    InvalidParams,
    MissingHelpers,
    NotFound,
    QcfrError,
    SearchFailed,
)
from .qcfmsr import (
    CodeParams,
    bytes_to_symbols,
    encode,
    reconstruct,
    regenerate,
    repair_helpers,
    symbols_to_bytes,
    to_stripes,
)

SEED_ENV = "QCFR_SEED"
EXIT_IO = 9
AUTO_TRIALS = 200
VERIFY_LIMIT = 20_000  # beyond this many k-subsets, auto coefficients are screened, not proven
AUTO_SCREEN = 500


def default_seed() -> int:
    raw = os.environ.get(SEED_ENV, "0")
    try:
        return int(raw, 0)
    except ValueError:
        raise InvalidParams(f"{SEED_ENV}={raw!r} is not an integer") from None


def _frac(x: Fraction) -> str:
    return str(x)


def emit(args, text: str, data: dict) -> None:
    if args.format == "structured":
        print(json.dumps(data, indent=2, default=str))
    else:
        print(text)


def parse_zeta(spec: str, k: int, q: int) -> tuple[int, ...]:
    field = gf.field_new(q)
    try:
        zeta = tuple(field.parse(t) for t in spec.split(","))
    except ValueError as exc:
        raise InvalidParams(f"bad coefficient list {spec!r}: {exc}") from None
    if len(zeta) != k:
        raise InvalidParams(f"need {k} coefficients, got {len(zeta)}")
    if 0 in zeta:
        raise InvalidParams("coefficients must be nonzero")
    return zeta


def resolve_code(k: int, q: int, zeta: str, seed: int) -> CodeParams:
    if zeta != "auto":
        return CodeParams(k, q, parse_zeta(zeta, k, q))
    screen = None
    if math.comb(2 * k, k) > VERIFY_LIMIT:
        screen = AUTO_SCREEN
        print(f"qcfr: note: k={k} coefficients are screened on {screen} random subsets, not proven MDS",
              file=sys.stderr)
    try:
        return analysis.search_coefficients(k, q, analysis.SearchConfig("random", AUTO_TRIALS, seed, screen))
    except NotFound as exc:
        raise SearchFailed(str(exc)) from None


# ---------------------------------------------------------------------------
# encode / repair / decode
# ---------------------------------------------------------------------------


def cmd_encode(args) -> int:
    data = Path(args.file).read_bytes()
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if args.scheme == "mbr":
        params = mbr.solve_mbr_params(args.kbar, args.rbar)
        base = resolve_code(params.k, args.q, args.zeta, args.seed)
        graph = mbr.build_regular_graph(params.n_bar, params.r_bar)
        code = mbr.build_mbr_code(base, graph, params.k_bar)
    else:
        base = resolve_code(args.k, args.q, args.zeta, args.seed)
    stripes = to_stripes(bytes_to_symbols(data, base.q), base.n)
    poly = shard.field_poly(base.q)

    def header(scheme, idx, ghash):
        return shard.ShardHeader(scheme, base.q, poly, base.k, idx, base.zeta, ghash, len(data), len(stripes))

    written = []
    if args.scheme == "mbr":
        (out / shard.GRAPH_SIDECAR).write_text(graph.to_text())
        for w, store in mbr.mbr_encode(code, stripes).items():
            path = out / shard.shard_name(w)
            shard.write_shard(path, header(shard.MBR, w, graph.digest()), shard.mbr_payload(store.coords))
            written.append(path.name)
    else:
        for i, store in encode(base, stripes).nodes.items():
            path = out / shard.shard_name(i)
            shard.write_shard(path, header(shard.MSR, i, bytes(8)), shard.msr_payload(store))
            written.append(path.name)
    text = f"code\t{base}\nstripes\t{len(stripes)}\nshards\t{len(written)}\n" + "\n".join(written)
    emit(args, text, {"schema": "qcfr.encode/1", "code": str(base), "zeta": list(base.zeta),
                      "stripes": len(stripes), "shards": written})
    return 0


def _load_graph(directory: Path, header: shard.ShardHeader) -> mbr.RegularGraph:
    path = directory / shard.GRAPH_SIDECAR
    if not path.exists():
        raise HeaderMismatch(f"MBR shards need the {shard.GRAPH_SIDECAR} sidecar in {directory}")
    g = mbr.RegularGraph.from_text(path.read_text())
    if g.digest() != header.graph_hash:
        raise HeaderMismatch("graph sidecar does not match the shard graph hash")
    return g


def _infer_k_bar(k: int, g: mbr.RegularGraph) -> int | None:
    for k_bar in range(2, g.n_bar):
        try:
            p = mbr.solve_mbr_params(k_bar, g.r_bar)
        except QcfrError:
            continue
        if p.k == k and p.n_bar == g.n_bar:
            return k_bar
    return None


def _open_dir(directory: Path):
    """(shards by index, reference header, graph or None)."""
    directory = Path(directory)
    if not directory.is_dir():
        raise FileNotFoundError(f"no shard directory {directory}")
    probe = sorted(directory.glob("shard_*.qcfr"))
    if not probe:
        raise InsufficientShards(f"no shards in {directory}")
    first = shard.ShardHeader.unpack(probe[0].read_bytes())
    graph = _load_graph(directory, first) if first.scheme == shard.MBR else None
    shards = shard.scan_dir(directory, graph.r_bar if graph else 1)
    return shards, first, graph


def cmd_repair(args) -> int:
    directory = Path(args.from_dir)
    shards, ref, graph = _open_dir(directory)
    base = ref.params()
    node = args.node
    if node in shards:
        raise InvalidParams(f"shard {node} is present; delete it before repairing")
    if graph is None:
        if not 1 <= node <= base.n:
            raise InvalidParams(f"node {node} outside 1..{base.n}")
        ahead, behind = repair_helpers(base, node)
        needed = list(ahead) + [behind]
        missing = [j for j in needed if j not in shards]
        if missing:
            raise MissingHelpers(node, needed, missing)
        stores = {j: shard.msr_store(j, shards[j][1]) for j in needed}
        fetch_log = []

        def fetch(j, kind):
            fetch_log.append((j, kind))
            return stores[j].coordinate(kind)

        store = regenerate(base, node, fetch)
        payload = shard.msr_payload(store)
        transfers = len(fetch_log)
        header_scheme, ghash = shard.MSR, bytes(8)
    else:
        if not 1 <= node <= graph.n_bar:
            raise InvalidParams(f"vertex {node} outside 1..{graph.n_bar}")
        code = mbr.build_mbr_code(base, graph)
        helpers = mbr.mbr_helpers(code, node)
        needed = sorted(helpers)
        missing = [u for u in needed if u not in shards]
        if missing:
            raise MissingHelpers(node, needed, missing)
        vertices = {u: mbr.VertexStore(u, shard.mbr_coords(graph.labels(u), shards[u][1])) for u in needed}
        fetcher = mbr.VertexFetcher(vertices)
        store = mbr.mbr_repair(code, node, fetcher)
        payload = shard.mbr_payload(store.coords)
        transfers = fetcher.transfers
        header_scheme, ghash = shard.MBR, ref.graph_hash
    h = shard.ShardHeader(header_scheme, ref.q, ref.field_poly, ref.k, node, ref.zeta, ghash,
                          ref.file_len, ref.stripe_count)
    out = Path(args.out_dir) if args.out_dir else directory
    out.mkdir(parents=True, exist_ok=True)
    path = out / shard.shard_name(node)
    shard.write_shard(path, h, payload)
    text = f"repaired\t{node}\nhelpers\t{','.join(map(str, needed))}\ntransfers\t{transfers}\nwrote\t{path}"
    emit(args, text, {"schema": "qcfr.repair/1", "node": node, "helpers": needed,
                      "transfers": transfers, "path": str(path)})
    return 0


def cmd_decode(args) -> int:
    shards, ref, graph = _open_dir(Path(args.from_dir))
    base = ref.params()
    have = sorted(shards)
    if graph is None:
        if len(have) < base.k:
            raise InsufficientShards(f"{len(have)} shards present, need {base.k}")
        used = None
        for s in itertools.combinations(have, base.k):
            if analysis.subset_dets(base, [s])[0]:
                used = list(s)
                break
        if used is None:
            raise InsufficientShards(f"no {base.k} of the shards {have} determine the file")
        stores = {j: shard.msr_store(j, shards[j][1]) for j in used}
        symbols = reconstruct(base, used, stores)
    else:
        k_bar = _infer_k_bar(base.k, graph)
        need = k_bar if k_bar is not None else graph.n_bar
        if len(have) < need:
            raise InsufficientShards(f"{len(have)} shards present, need {need}")
        used = have[:need]
        code = mbr.build_mbr_code(base, graph, need)
        contents = {w: mbr.VertexStore(w, shard.mbr_coords(graph.labels(w), shards[w][1])) for w in used}
        symbols = mbr.mbr_reconstruct(code, used, contents)
    data = symbols_to_bytes(np.asarray(symbols).reshape(-1), base.q, ref.file_len)
    Path(args.out).write_bytes(data)
    text = f"decoded\t{len(data)} bytes\nfrom\t{','.join(map(str, used))}\nwrote\t{args.out}"
    emit(args, text, {"schema": "qcfr.decode/1", "bytes": len(data), "used": used, "path": str(args.out)})
    return 0


# ---------------------------------------------------------------------------
# analysis commands
# ---------------------------------------------------------------------------


def cmd_analyze(args) -> int:
    p = CodeParams(args.k, args.q, parse_zeta(args.zeta, args.k, args.q))
    report = analysis.verify_mds(p)
    if args.format == "structured":
        print(report.to_json())
    else:
        print(report.to_text())
    return 0 if report.is_mds else 4


def cmd_search(args) -> int:
    if args.exhaustive:
        cfg = analysis.SearchConfig("exhaustive")
    else:
        cfg = analysis.SearchConfig("random", args.trials, args.seed)
    try:
        p = analysis.search_coefficients(args.k, args.q, cfg)
    except NotFound as exc:
        emit(args, f"not_found\t{'conclusive' if exc.conclusive else 'inconclusive'}\n{exc}",
             {"schema": "qcfr.search/1", "found": False, "conclusive": exc.conclusive, "message": str(exc)})
        return exc.exit_code
    emit(args, f"found\t{','.join(map(str, p.zeta))}\ncode\t{p}",
         {"schema": "qcfr.search/1", "found": True, "k": p.k, "q": p.q, "zeta": list(p.zeta)})
    return 0


def cmd_tradeoff(args) -> int:
    pts = tradeoff.breakpoints(args.M, args.k, args.r)
    if args.plot:
        from .plotting import plot_tradeoff

        plot_tradeoff(args.k, args.r, args.plot)
    text = tradeoff.curve_text(args.M, args.k, args.r)
    data = {
        "schema": "qcfr.tradeoff/1",
        "k": args.k,
        "r": args.r,
        "M": _frac(Fraction(args.M)),
        "breakpoints": [{"i": p.i, "gamma": _frac(p.gamma), "alpha": _frac(p.alpha)} for p in pts],
    }
    emit(args, text, data)
    return 0


def _mbr_row(k_bar: int, r_bar: int) -> dict:
    p = mbr.solve_mbr_params(k_bar, r_bar)
    g = mbr.build_regular_graph(p.n_bar, p.r_bar)
    return {
        "params": str(p),
        "n_bar": p.n_bar,
        "k_bar": p.k_bar,
        "r_bar": p.r_bar,
        "k": p.k,
        "theta": p.theta,
        "graph": g.strategy,
        "alpha": mbr.mbr_alpha(p),
        "classical": mbr.classical_mbr_alpha(p),
    }


def cmd_mbr(args) -> int:
    pairs = mbr.TABLE_ROWS if args.table else [(args.kbar, args.rbar)]
    rows = [_mbr_row(kb, rb) for kb, rb in pairs]
    lines = ["params\tgraph\ttheta\talpha\tclassical"]
    for r in rows:
        lines.append(f"{r['params']}\t{r['graph']}\t{r['theta']}\t{r['alpha']}\t{r['classical']}")
    if args.plot:
        from .plotting import plot_comparison

        plot_comparison([(f"[{r['n_bar']},{r['k_bar']},{r['r_bar']}]", r["alpha"], r["classical"]) for r in rows],
                        args.plot)
    if args.graph_out and not args.table:
        g = mbr.build_regular_graph(rows[0]["n_bar"], rows[0]["r_bar"])
        Path(args.graph_out).write_text(g.to_text())
    data = {"schema": "qcfr.mbr/1", "rows": [{k: _frac(v) if isinstance(v, Fraction) else v
                                              for k, v in r.items()} for r in rows]}
    emit(args, "\n".join(lines), data)
    return 0


def _scheme_from_args(args):
    if args.scheme == "msr":
        return resolve_code(args.k, args.q, args.zeta, args.seed)
    if args.scheme == "mbr":
        p = mbr.solve_mbr_params(args.kbar, args.rbar)
        base = resolve_code(p.k, args.q, args.zeta, args.seed)
        return mbr.build_mbr_code(base, mbr.build_regular_graph(p.n_bar, p.r_bar), p.k_bar)
    return simulator.Replication(args.factor)


def cmd_simulate(args) -> int:
    scheme = _scheme_from_args(args)
    rng = np.random.default_rng(args.seed)
    q = scheme.q if isinstance(scheme, CodeParams) else getattr(getattr(scheme, "base", None), "q", 256)
    data = rng.integers(0, q, size=args.size, dtype=np.int64).astype(np.uint8)
    cluster = simulator.Cluster(scheme, data)
    if args.scenario:
        scenario = simulator.Scenario.parse(Path(args.scenario).read_text(), seed=args.seed)
    else:
        scenario = simulator.Scenario.rounds(cluster.n_nodes, args.rounds, seed=args.seed)
    report = simulator.run(cluster, scenario)
    emit(args, report.to_text(), report.to_dict())
    return 0 if report.intact else 4


def comparison_configs(q: int = 256, seed: int = 0):
    configs = []
    for k_bar, r_bar in mbr.TABLE_ROWS:
        p = mbr.solve_mbr_params(k_bar, r_bar)
        base = resolve_code(p.k, q, "auto", seed)
        configs.append(mbr.build_mbr_code(base, mbr.build_regular_graph(p.n_bar, p.r_bar), p.k_bar))
    return configs


def cmd_compare(args) -> int:
    configs = comparison_configs(args.q, args.seed)
    configs.append(simulator.Replication(2))
    rows = simulator.compare_schemes(args.M, configs, seed=args.seed)
    classical = {}
    for (k_bar, r_bar) in mbr.TABLE_ROWS:
        p = mbr.solve_mbr_params(k_bar, r_bar)
        classical[f"MBR [{p.n_bar},{p.k_bar},{p.r_bar}]"] = mbr.classical_mbr_alpha(p)
    lines = ["scheme\talpha\tgamma\tfault_tolerance\ttheory\tclassical\tagrees"]
    for r in rows:
        c = classical.get(r.scheme, "-")
        lines.append(f"{r.scheme}\t{r.alpha}\t{r.gamma}\t{r.fault_tolerance}\t{r.alpha_theory}\t{c}\t{int(r.agrees)}")
    if args.plot:
        from .plotting import plot_comparison

        plot_comparison([(r.scheme.replace("MBR ", ""), r.alpha, classical[r.scheme])
                         for r in rows if r.scheme in classical], args.plot)
    data = {
        "schema": "qcfr.compare/1",
        "rows": [
            {"scheme": r.scheme, "alpha": _frac(r.alpha), "gamma": _frac(r.gamma),
             "fault_tolerance": r.fault_tolerance, "alpha_theory": _frac(r.alpha_theory),
             "gamma_theory": _frac(r.gamma_theory), "classical": _frac(classical[r.scheme])
             if r.scheme in classical else None, "agrees": r.agrees, "intact": r.intact}
            for r in rows
        ],
    }
    emit(args, "\n".join(lines), data)
    return 0 if all(r.agrees and r.intact for r in rows) else 1


def cmd_report(args) -> int:
    """Tradeoff curve and comparison table as TSV files plus PNG figures."""
    from .plotting import plot_comparison, plot_tradeoff

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "tradeoff.tsv").write_text(tradeoff.curve_text(1, args.k, args.r) + "\n")
    plot_tradeoff(args.k, args.r, out / "tradeoff.png")
    rows = [_mbr_row(kb, rb) for kb, rb in mbr.TABLE_ROWS]
    lines = ["params\tgraph\ttheta\talpha\tclassical"]
    lines += [f"{r['params']}\t{r['graph']}\t{r['theta']}\t{r['alpha']}\t{r['classical']}" for r in rows]
    (out / "comparison.tsv").write_text("\n".join(lines) + "\n")
    plot_comparison([(f"[{r['n_bar']},{r['k_bar']},{r['r_bar']}]", r["alpha"], r["classical"]) for r in rows],
                    out / "comparison.png")
    files = ["tradeoff.tsv", "tradeoff.png", "comparison.tsv", "comparison.png"]
    emit(args, "\n".join(str(out / f) for f in files),
         {"schema": "qcfr.report/1", "files": [str(out / f) for f in files]})
    return 0


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    seed = default_seed()
    ap = argparse.ArgumentParser(prog="qcfr", description="Quasi-cyclic regenerating codes toolkit.")
    ap.add_argument("--format", choices=("text", "structured"), default="text")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("text", "structured"), default=argparse.SUPPRESS)
    sub = ap.add_subparsers(dest="command", required=True)

    def code_args(p, k_required=True):
        p.add_argument("--k", type=int, required=k_required)
        p.add_argument("--q", type=int, default=256)

    p = sub.add_parser("encode", parents=[common], help="split a file into shards")
    p.add_argument("file")
    p.add_argument("--scheme", choices=("msr", "mbr"), default="msr")
    code_args(p, k_required=False)
    p.add_argument("--kbar", type=int)
    p.add_argument("--rbar", type=int)
    p.add_argument("--zeta", default="auto", help="comma list (integers, z, z^e) or 'auto'")
    p.add_argument("--seed", type=int, default=seed)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("repair", parents=[common], help="regenerate one missing shard")
    p.add_argument("--node", type=int, required=True)
    p.add_argument("--from", dest="from_dir", required=True)
    p.add_argument("--out-dir")
    p.set_defaults(func=cmd_repair)

    p = sub.add_parser("decode", parents=[common], help="rebuild the file from surviving shards")
    p.add_argument("--from", dest="from_dir", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("analyze", parents=[common], help="check every k-subset of a code")
    code_args(p)
    p.add_argument("--zeta", required=True)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("search", parents=[common], help="look for MDS coefficients")
    code_args(p)
    p.add_argument("--exhaustive", action="store_true")
    p.add_argument("--trials", type=int, default=AUTO_TRIALS)
    p.add_argument("--seed", type=int, default=seed)
    p.set_defaults(func=cmd_search)

    p = sub.add_parser("tradeoff", parents=[common], help="storage/bandwidth curve breakpoints")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--r", type=int, required=True)
    p.add_argument("--M", type=Fraction, default=Fraction(1))
    p.add_argument("--plot", help="write the curve to this image file")
    p.set_defaults(func=cmd_tradeoff)

    p = sub.add_parser("mbr", parents=[common], help="graph-based MBR parameters")
    p.add_argument("--kbar", type=int)
    p.add_argument("--rbar", type=int)
    p.add_argument("--table", action="store_true", help="all rows of the comparison table")
    p.add_argument("--plot", help="write a comparison bar chart to this image file")
    p.add_argument("--graph-out", help="write the edge list to this file")
    p.set_defaults(func=cmd_mbr)

    p = sub.add_parser("simulate", parents=[common], help="replay a failure scenario")
    p.add_argument("--scheme", choices=("msr", "mbr", "replication"), default="msr")
    code_args(p, k_required=False)
    p.add_argument("--zeta", default="auto")
    p.add_argument("--kbar", type=int)
    p.add_argument("--rbar", type=int)
    p.add_argument("--factor", type=int, default=3)
    p.add_argument("--scenario", help="event script (FAIL i / REPAIR i / RECOVER i / CHECK)")
    p.add_argument("--rounds", type=int, default=20)
    p.add_argument("--size", type=int, default=4096, help="file size in symbols")
    p.add_argument("--seed", type=int, default=seed)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("compare", parents=[common], help="measured vs formula bandwidth for the table rows")
    p.add_argument("--M", type=int, default=840, help="file size in symbols")
    p.add_argument("--q", type=int, default=256)
    p.add_argument("--seed", type=int, default=seed)
    p.add_argument("--plot")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("report", parents=[common], help="write curve and comparison tables with figures")
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--r", type=int, default=9)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_report)
    return ap


def _check_args(args) -> None:
    need = []
    if getattr(args, "scheme", None) == "mbr":
        need = ["kbar", "rbar"]
    elif getattr(args, "scheme", None) == "msr" or args.command in ("analyze", "search"):
        need = ["k"]
    elif args.command == "mbr" and not args.table:
        need = ["kbar", "rbar"]
    missing = [f"--{n}" for n in need if getattr(args, n, None) is None]
    if missing:
        raise InvalidParams(f"{args.command} needs {' '.join(missing)}")


def main(argv=None) -> int:
    try:
        parser = build_parser()
        args = parser.parse_args(argv)
        _check_args(args)
        return args.func(args)
    except QcfrError as exc:
        print(f"qcfr: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except (OSError, EOFError) as exc:
        print(f"qcfr: error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"qcfr: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
