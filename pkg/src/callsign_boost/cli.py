"""Command-line interface: every pipeline stage as a subcommand.

Exit codes: 0 success, 1 usage, 2 I/O, 3 validation, 4 empty result.
Failures print a single ``error[<category>]: ...`` line on stderr.
"""

from __future__ import annotations

import argparse
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import __version__
from .biasing import build_biasing_fst
from .errors import (
    EmptyLattice,
    EmptyRescore,
    NegativeCycleError,
    ParseError,
    SchemaError,
    SymbolTableMismatch,
    ToolkitError,
    UnknownAirline,
)
from .expansion import default_airline_table, expand, load_airline_table
from .fst import SymbolTable, read_fst_text, write_fst_text
from .gboost import boost_grammar
from .lattice import best_hypothesis, load_lattices, rescore, write_lattice_text
from .metrics import callsign_metrics, read_callsign_file, read_trans_file, utterance_wer
from .report import ReportRow, format_report_table, write_diagnostics_tsv, write_report_tsv
from .surveillance import load_surveillance

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_IO = 2
EXIT_VALIDATION = 3
EXIT_EMPTY = 4


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _fail(category: str, message: str) -> None:
    print(f"error[{category}]: {message}", file=sys.stderr)


def _warn(message: str) -> None:
    print(f"warning: {message}", file=sys.stderr)


def _airline_table(args):
    if args.airlines:
        return load_airline_table(args.airlines)
    return default_airline_table()


# -- subcommands --------------------------------------------------------------


def cmd_expand(args) -> int:
    table = _airline_table(args)
    for raw in args.callsigns:
        for variant in expand(raw.upper(), table):
            print(" ".join(variant))
    return EXIT_OK


def _context_variants(ctx, table, truth_only: bool):
    raws = []
    if truth_only:
        if ctx.ground_truth_callsign:
            raws = [ctx.ground_truth_callsign]
    else:
        raws = list(ctx.callsigns)
    variants = set()
    for raw in raws:
        variants.update(expand(raw, table))
    return sorted(variants)


def cmd_build_bias(args) -> int:
    table = _airline_table(args)
    contexts = {c.utterance_id: c for c in load_surveillance(args.surveillance)}
    ctx = contexts.get(args.utt)
    if ctx is None:
        raise SchemaError(f"utterance {args.utt!r} not found in {args.surveillance}")
    variants = _context_variants(ctx, table, args.truth_only)
    if not variants:
        _warn(f"utterance {args.utt!r} has no callsigns; writing an identity acceptor")
    syms = SymbolTable.read(args.syms) if args.syms else SymbolTable()
    bias = build_biasing_fst(variants, args.discount, syms)
    out = Path(args.output)
    write_fst_text(bias, out)
    syms.write(out.with_suffix(".syms"))
    return EXIT_OK


def cmd_rescore(args) -> int:
    table = _airline_table(args)
    lattices = load_lattices(args.lattices)
    contexts = {c.utterance_id: c for c in load_surveillance(args.surveillance)}

    def one(lat):
        ctx = contexts.get(lat.utterance_id)
        if ctx is None:
            _warn(f"no surveillance record for {lat.utterance_id!r}; passing through")
            variants = []
        else:
            variants = _context_variants(ctx, table, args.truth_only)
        syms = SymbolTable(lat.words())
        bias = build_biasing_fst(variants, args.discount, syms) if variants else None
        out_lat = rescore(lat, bias) if bias is not None else lat
        hyp = best_hypothesis(out_lat, args.acoustic_scale, args.graph_scale)
        return lat.utterance_id, hyp.words, out_lat

    if args.jobs > 1:
        with ThreadPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(one, lattices))
    else:
        results = [one(lat) for lat in lattices]
    results.sort(key=lambda r: r[0])

    with open(args.output, "w", encoding="utf-8", newline="\n") as fh:
        for utt_id, words, _lat in results:
            fh.write(f"{utt_id}\t{' '.join(words)}\n")
    if args.dump_lattices:
        out_dir = Path(args.dump_lattices)
        out_dir.mkdir(parents=True, exist_ok=True)
        for utt_id, _words, lat in results:
            write_lattice_text(lat, out_dir / f"{utt_id}.lat")
    return EXIT_OK


def cmd_boost_g(args) -> int:
    if (args.utt is None) == (not args.all):
        raise UsageError("exactly one of --utt or --all is required")
    table = _airline_table(args)
    syms = SymbolTable.read(args.syms)
    grammar = read_fst_text(args.grammar, syms, syms)
    if "boosted" in grammar.metadata:
        _warn(f"input grammar already carries a boost marker: {grammar.metadata['boosted']}")
    contexts = {c.utterance_id: c for c in load_surveillance(args.surveillance)}
    new_arc_cost = args.new_arc_cost if args.new_arc_cost == "auto" else float(args.new_arc_cost)

    def boosted_for(ctx):
        variants = _context_variants(ctx, table, args.truth_only)
        return boost_grammar(grammar, variants, args.k, new_arc_cost, args.mode)

    if args.utt is not None:
        ctx = contexts.get(args.utt)
        if ctx is None:
            raise SchemaError(f"utterance {args.utt!r} not found in {args.surveillance}")
        out = Path(args.output)
        write_fst_text(boosted_for(ctx), out)
        syms.write(out.with_suffix(".syms"))
    else:
        out_dir = Path(args.output)
        out_dir.mkdir(parents=True, exist_ok=True)
        for utt_id in sorted(contexts):
            write_fst_text(boosted_for(contexts[utt_id]), out_dir / f"{utt_id}.fst")
        syms.write(out_dir / "words.txt")
    return EXIT_OK


def cmd_score(args) -> int:
    table = _airline_table(args)
    refs = read_trans_file(args.ref)
    hyps = read_trans_file(args.hyp)
    wer = utterance_wer(refs, hyps)
    row_label = Path(args.hyp).stem
    rows = []
    if args.callsigns:
        raw_by_utt = read_callsign_file(args.callsigns)
        expansions = {}
        for utt, raws in raw_by_utt.items():
            exp = []
            for raw in raws:
                exp.extend(expand(raw, table))
            expansions[utt] = exp
        cs_stats, accuracy, records = callsign_metrics(hyps, expansions)
        rows.append(ReportRow(row_label, wer.wer, cs_stats.wer, accuracy))
    else:
        records = []
        rows.append(ReportRow(row_label, wer.wer, 0.0, 0.0))
        _warn("no --callsigns given; callsign metrics are zeroed")
    sys.stdout.write(format_report_table(rows))
    if args.output:
        write_report_tsv(rows, args.output)
        if args.figures:
            from .plots import save_report_figure

            save_report_figure(rows, Path(args.output).with_suffix(".png"))
    return EXIT_OK


def cmd_simulate(args) -> int:
    from .simulate import generate_corpus, load_config, run_experiment, sweep_distractors

    cfg = load_config(args.config)
    if args.out_dir:
        cfg.out_dir = args.out_dir
    if args.jobs:
        cfg.jobs = args.jobs
    corpus = generate_corpus(cfg)
    report = run_experiment(cfg, corpus)

    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_report_tsv(report.rows, out_dir / "report.tsv")
    write_diagnostics_tsv(report.diagnostics, out_dir / "diagnostics.tsv")
    sys.stdout.write(format_report_table(report.rows))
    if cfg.figures:
        from .plots import save_report_figure

        save_report_figure(report.rows, out_dir / "report.png")
    if cfg.dump_corpus:
        corpus.write(out_dir / "corpus")
    if cfg.sweep_distractors:
        seeds = cfg.sweep_seeds or (cfg.seed,)
        points = sweep_distractors(cfg, cfg.sweep_distractors, seeds)
        with open(out_dir / "sweep.tsv", "w", encoding="utf-8", newline="\n") as fh:
            fh.write("distractors\tmean_acc\n")
            for k, acc in points:
                fh.write(f"{k}\t{acc:.2f}\n")
        if cfg.figures:
            from .plots import save_sweep_figure

            save_sweep_figure(points, out_dir / "sweep.png")
    return EXIT_OK


# -- parser -------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="callsign-boost", description=__doc__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("expand", help="expand compressed callsigns into spoken variants")
    p.add_argument("callsigns", nargs="+", metavar="CALLSIGN")
    p.add_argument("--airlines", help="airline table CSV (default: packaged table)")
    p.set_defaults(func=cmd_expand)

    p = sub.add_parser("build-bias", help="build one utterance's biasing FST")
    p.add_argument("--surveillance", required=True, help="surveillance JSONL")
    p.add_argument("--utt", required=True, help="utterance id")
    p.add_argument("--discount", type=float, default=2.0, help="credit for a complete match")
    p.add_argument("--syms", help="symbol table file to build on")
    p.add_argument("--truth-only", action="store_true", help="bias only the ground-truth callsign")
    p.add_argument("--airlines")
    p.add_argument("-o", "--output", required=True, help="output FST text path")
    p.set_defaults(func=cmd_build_bias)

    p = sub.add_parser("rescore", help="rescore lattices against per-utterance biases")
    p.add_argument("--lattices", required=True, help="lattice directory or stream file")
    p.add_argument("--surveillance", required=True)
    p.add_argument("--discount", type=float, default=2.0)
    p.add_argument("--truth-only", action="store_true")
    p.add_argument("--acoustic-scale", type=float, default=1.0)
    p.add_argument("--graph-scale", type=float, default=1.0)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--airlines")
    p.add_argument("--dump-lattices", help="also write rescored lattices to this directory")
    p.add_argument("-o", "--output", required=True, help="hypotheses TSV path")
    p.set_defaults(func=cmd_rescore)

    p = sub.add_parser("boost-g", help="write boosted copies of a grammar FST")
    p.add_argument("--g", dest="grammar", required=True, help="grammar FST text")
    p.add_argument("--syms", required=True, help="grammar symbol table")
    p.add_argument("--surveillance", required=True)
    p.add_argument("--utt", help="boost for one utterance")
    p.add_argument("--all", action="store_true", help="boost for every utterance into a directory")
    p.add_argument("--k", type=float, default=2.0, help="per-arc discount")
    p.add_argument("--mode", choices=("word", "sequence"), default="word")
    p.add_argument("--new-arc-cost", default="auto", help="cost for created arcs, or 'auto'")
    p.add_argument("--truth-only", action="store_true")
    p.add_argument("--airlines")
    p.add_argument("-o", "--output", required=True, help="output FST path (or directory with --all)")
    p.set_defaults(func=cmd_boost_g)

    p = sub.add_parser("score", help="WER / callsign WER / accuracy")
    p.add_argument("--ref", required=True, help="reference transcripts TSV")
    p.add_argument("--hyp", required=True, help="hypothesis transcripts TSV")
    p.add_argument("--callsigns", help="ground-truth callsigns TSV")
    p.add_argument("--airlines")
    p.add_argument("-o", "--output", help="also write the report TSV here")
    p.add_argument("--figures", action=argparse.BooleanOptionalAction, default=True,
                   help="render a figure next to the report TSV")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("simulate", help="run the synthetic boosting experiment")
    p.add_argument("--config", required=True, help="TOML experiment configuration")
    p.add_argument("--out-dir", help="override the configured output directory")
    p.add_argument("--jobs", type=int, help="override the configured worker count")
    p.set_defaults(func=cmd_simulate)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        _fail("usage", str(exc))
        return EXIT_USAGE
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    try:
        return args.func(args)
    except UsageError as exc:
        _fail("usage", str(exc))
        return EXIT_USAGE
    except (EmptyLattice, EmptyRescore) as exc:
        _fail("empty", str(exc))
        return EXIT_EMPTY
    except (
        SchemaError,
        ParseError,
        UnknownAirline,
        SymbolTableMismatch,
        NegativeCycleError,
        ToolkitError,
        ValueError,
    ) as exc:
        _fail("validation", str(exc))
        return EXIT_VALIDATION
    except OSError as exc:
        _fail("io", str(exc))
        return EXIT_IO


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
