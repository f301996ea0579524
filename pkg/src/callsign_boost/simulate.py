"""Synthetic experiment harness.

There is no audio and no acoustic model here: a generator stands in for
the first pass. Each utterance gets a true callsign, a surveillance
list of distractor callsigns, and a lattice holding the true hypothesis
plus one corrupted competitor. With probability confusion_rate the
competitor beats the truth by a margin drawn around the boosting
discount, so roughly half the confusions are recoverable; a slice of
the competitors realizes a distractor callsign instead of random
fillers, which is exactly the case where boosting the whole
surveillance list can go wrong.

Grammar-level boosting is evaluated at desk scale by composing the
acoustic side of each lattice with a toy lexicon-grammar acceptor
(boosted or baseline) and re-extracting best paths.

Every utterance draws from its own RNG substream keyed by (seed,
index), so sweeping the distractor count changes which distractors are
boosted without changing anything else about the corpus.
"""

from __future__ import annotations

import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence, Union

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from .biasing import build_biasing_fst
from .errors import SchemaError, ToolkitError
from .expansion import AirlineTable, DIGIT_WORDS, NATO_WORDS, default_airline_table, expand
from .fst import Fst, SymbolTable, compose, identity_acceptor
from .gboost import boost_grammar
from .lattice import Lattice, best_hypothesis, rescore, save_lattices
from .metrics import callsign_metrics, utterance_wer
from .report import DiagnosticRow, ReportRow
from .surveillance import UtteranceContext, context_stats, save_surveillance

METHODS = ("baseline", "rescore", "gboost", "gboost+rescore")
VARIANTS = ("surveillance", "ground_truth")

# Deliberately disjoint from airline names, digit words and the
# spelling alphabet, so corrupted words never form callsign n-grams.
FILLER_WORDS = (
    "hello", "good", "morning", "evening", "contact", "tower", "runway",
    "cleared", "wind", "station", "goodbye", "thanks", "please", "sovar",
    "landing", "report", "holding", "maintain", "expect", "traffic",
)

_TAIL_LETTERS = "BCDFGHJKLMNPQRSTVWXZ"

# Every utterance draws this many distractors no matter what the
# configuration asks for, so sweeping the boosted count k never shifts
# any other random draw. 28 covers the surveillance range seen in
# practice (list sizes up to 29 including the truth).
POOL_SIZE = 28


@dataclass
class SimConfig:
    utterances: int = 300
    seed: int = 1
    distractors: tuple[int, ...] = (5, 29)
    confusion_rate: float = 0.5
    collision_rate: float = 0.5
    discount: float = 2.0
    margin: tuple[float, float] = (0.5, 1.5)  # multiples of the discount
    no_callsign_rate: float = 0.0
    fillers_max: int = 2
    methods: tuple[str, ...] = METHODS
    variants: tuple[str, ...] = VARIANTS
    gboost_k: float = 2.0
    gboost_mode: str = "word"
    new_arc_cost: Union[float, str] = "auto"
    grammar_word_cost: float = 0.5
    out_dir: str = "report"
    figures: bool = True
    dump_corpus: bool = False
    jobs: int = 1
    sweep_distractors: Optional[tuple[int, ...]] = None
    sweep_seeds: Optional[tuple[int, ...]] = None
    airlines: Optional[str] = None

    def validate(self) -> None:
        for m in self.methods:
            if m not in METHODS:
                raise SchemaError(f"unknown method {m!r}; expected one of {sorted(METHODS)}")
        for v in self.variants:
            if v not in VARIANTS:
                raise SchemaError(f"unknown variant {v!r}; expected one of {sorted(VARIANTS)}")
        if not 0.0 <= self.confusion_rate <= 1.0:
            raise SchemaError("confusion_rate must be in [0, 1]")
        if not 0.0 <= self.collision_rate <= 1.0:
            raise SchemaError("collision_rate must be in [0, 1]")
        if self.discount <= 0:
            raise SchemaError("discount must be positive")
        all_ks = list(self.distractors) + list(self.sweep_distractors or ())
        if min(all_ks) < 1:
            raise SchemaError("distractor counts must be at least 1")
        if max(all_ks) > POOL_SIZE + 1:
            raise SchemaError(
                f"distractor counts above {POOL_SIZE + 1} are not supported; "
                "the generator draws a fixed pool of distractors"
            )
        if self.gboost_mode not in ("word", "sequence"):
            raise SchemaError("gboost mode must be 'word' or 'sequence'")


_CONFIG_SECTIONS = {
    "corpus": {
        "utterances", "seed", "distractors", "confusion_rate", "collision_rate",
        "discount", "margin", "no_callsign_rate", "fillers_max", "airlines",
        "grammar_word_cost",
    },
    "methods": {"run", "variants"},
    "gboost": {"k", "mode", "new_arc_cost"},
    "output": {"dir", "figures", "dump_corpus", "jobs"},
    "sweep": {"distractors", "seeds"},
}


def load_config(path: Union[str, Path]) -> SimConfig:
    with open(path, "rb") as fh:
        try:
            data = tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise SchemaError(f"{path}: {exc}") from None
    unknown = sorted(set(data) - set(_CONFIG_SECTIONS))
    if unknown:
        raise SchemaError(f"{path}: unknown config sections {unknown}")
    for section, keys in _CONFIG_SECTIONS.items():
        bad = sorted(set(data.get(section, {})) - keys)
        if bad:
            raise SchemaError(f"{path}: unknown keys {bad} in [{section}]")

    cfg = SimConfig()
    corpus = data.get("corpus", {})
    cfg.utterances = int(corpus.get("utterances", cfg.utterances))
    cfg.seed = int(corpus.get("seed", cfg.seed))
    cfg.distractors = tuple(corpus.get("distractors", cfg.distractors))
    cfg.confusion_rate = float(corpus.get("confusion_rate", cfg.confusion_rate))
    cfg.collision_rate = float(corpus.get("collision_rate", cfg.collision_rate))
    cfg.discount = float(corpus.get("discount", cfg.discount))
    cfg.margin = tuple(corpus.get("margin", cfg.margin))
    cfg.no_callsign_rate = float(corpus.get("no_callsign_rate", cfg.no_callsign_rate))
    cfg.fillers_max = int(corpus.get("fillers_max", cfg.fillers_max))
    cfg.grammar_word_cost = float(corpus.get("grammar_word_cost", cfg.grammar_word_cost))
    cfg.airlines = corpus.get("airlines", cfg.airlines)
    methods = data.get("methods", {})
    cfg.methods = tuple(methods.get("run", cfg.methods))
    cfg.variants = tuple(methods.get("variants", cfg.variants))
    gb = data.get("gboost", {})
    cfg.gboost_k = float(gb.get("k", cfg.gboost_k))
    cfg.gboost_mode = gb.get("mode", cfg.gboost_mode)
    cfg.new_arc_cost = gb.get("new_arc_cost", cfg.new_arc_cost)
    out = data.get("output", {})
    cfg.out_dir = out.get("dir", cfg.out_dir)
    cfg.figures = bool(out.get("figures", cfg.figures))
    cfg.dump_corpus = bool(out.get("dump_corpus", cfg.dump_corpus))
    cfg.jobs = int(out.get("jobs", cfg.jobs))
    sweep = data.get("sweep", {})
    if "distractors" in sweep:
        cfg.sweep_distractors = tuple(sweep["distractors"])
    if "seeds" in sweep:
        cfg.sweep_seeds = tuple(sweep["seeds"])
    cfg.validate()
    return cfg


# -- corpus generation --------------------------------------------------------


@dataclass
class UtteranceInfo:
    """Generator-side ground truth, enough to predict every outcome."""

    confused: bool
    collision: bool
    margin: float  # competitor beats truth by this much when confused
    distractor_index: int  # 1-based; <= k-1 means the competitor is boosted
    k: int
    corrupted: int  # corrupted positions of a noise competitor
    truth_realization: Optional[tuple[str, ...]]


@dataclass
class GeneratedUtterance:
    context: UtteranceContext
    lattice: Lattice  # graph channel carries the baseline grammar costs
    info: UtteranceInfo


@dataclass
class Corpus:
    utterances: list[GeneratedUtterance]
    grammar: Fst
    lexicon: Fst
    lg: Fst  # lexicon composed with the baseline grammar
    syms: SymbolTable
    table: AirlineTable
    discount: float

    def references(self) -> dict[str, list[str]]:
        return {u.context.utterance_id: list(u.context.reference) for u in self.utterances}

    def truth_expansions(self) -> dict[str, list[tuple[str, ...]]]:
        out = {}
        for u in self.utterances:
            truth = u.context.ground_truth_callsign
            if truth is not None:
                out[u.context.utterance_id] = expand(truth, self.table)
        return out

    def write(self, out_dir: Union[str, Path]) -> None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        save_lattices([u.lattice for u in self.utterances], out_dir / "lattices.txt")
        save_surveillance((u.context for u in self.utterances), out_dir / "surveillance.jsonl")
        with open(out_dir / "refs.tsv", "w", encoding="utf-8", newline="\n") as fh:
            for u in self.utterances:
                fh.write(f"{u.context.utterance_id}\t{' '.join(u.context.reference)}\n")


def _eligible_airlines(table: AirlineTable) -> list[str]:
    # single-word telephony names keep all expansions the same length,
    # which keeps competitor margins exact
    return [c for c in table.codes() if all(len(n) == 1 for n in table.get(c).telephony)]


def _universe(table: AirlineTable) -> list[str]:
    words = set(FILLER_WORDS) | set(DIGIT_WORDS.values()) | set(NATO_WORDS.values())
    for code in table.codes():
        for name in table.get(code).telephony:
            words.update(name)
    return sorted(words)


def _word_loop_grammar(syms: SymbolTable, cost: float) -> Fst:
    g = Fst(syms, syms)
    s = g.add_state()
    g.set_start(s)
    g.set_final(s, 0.0)
    for wid in syms.ids():
        g.add_arc(s, wid, wid, cost, s)
    return g


def _draw_tail(rng: random.Random, length: int) -> str:
    chars = [rng.choice("123456789")]
    for _ in range(length - 1):
        if rng.random() < 0.6:
            chars.append(rng.choice("0123456789"))
        else:
            chars.append(rng.choice(_TAIL_LETTERS))
    return "".join(chars)


def _two_branch_lattice(
    utt_id: str,
    pre: list[str],
    truth_span: list[str],
    comp_span: Optional[list[str]],
    post: list[str],
    comp_delta: float,
) -> Lattice:
    """Shared filler context, branching over the callsign span.

    Every arc costs 1.0 acoustic; the competitor's first span arc
    carries comp_delta on top (negative when it beats the truth).
    """
    lat = Lattice(utt_id)
    s = lat.add_state()
    lat.set_start(s)
    for w in pre:
        n = lat.add_state()
        lat.add_arc(s, w, 1.0, 0.0, n)
        s = n
    branch = s
    spans = [(truth_span, 0.0)]
    if comp_span is not None:
        spans.append((comp_span, comp_delta))
    join = lat.add_state()
    for span, delta in spans:
        prev = branch
        for i, w in enumerate(span):
            nxt = join if i == len(span) - 1 else lat.add_state()
            lat.add_arc(prev, w, 1.0 + (delta if i == 0 else 0.0), 0.0, nxt)
            prev = nxt
    s = join
    for w in post:
        n = lat.add_state()
        lat.add_arc(s, w, 1.0, 0.0, n)
        s = n
    lat.set_final(s, 0.0, 0.0)
    return lat


def generate_corpus(cfg: SimConfig, seed: Optional[int] = None) -> Corpus:
    """Deterministic synthetic corpus; same seed, same bytes."""
    cfg.validate()
    seed = cfg.seed if seed is None else seed
    table = load_table(cfg)
    eligible = _eligible_airlines(table)
    if len(eligible) < 2:
        raise SchemaError("airline table too small to draw distractors")
    universe = _universe(table)
    syms = SymbolTable(universe)
    grammar = _word_loop_grammar(syms, cfg.grammar_word_cost)
    lexicon = identity_acceptor(syms)
    lg = compose(lexicon, grammar)

    mlo, mhi = cfg.margin

    utterances = []
    for i in range(cfg.utterances):
        rng = random.Random(f"{seed}:{i}")
        utt_id = f"utt{i:05d}"

        has_callsign = rng.random() >= cfg.no_callsign_rate
        tail_len = rng.choice((3, 4))
        truth = rng.choice(eligible) + _draw_tail(rng, tail_len)
        pool: list[str] = []
        seen = {truth}
        while len(pool) < POOL_SIZE:
            cand = rng.choice(eligible) + _draw_tail(rng, tail_len)
            if cand not in seen:
                seen.add(cand)
                pool.append(cand)
        realizations = expand(truth, table)
        realization = rng.choice(realizations)
        p = rng.randint(0, cfg.fillers_max)
        q = rng.randint(0, cfg.fillers_max)
        pre = [rng.choice(FILLER_WORDS) for _ in range(p)]
        post = [rng.choice(FILLER_WORDS) for _ in range(q)]

        confused = rng.random() < cfg.confusion_rate
        magnitude = rng.uniform(mlo * cfg.discount, mhi * cfg.discount)
        collision = rng.random() < cfg.collision_rate
        j = rng.randint(1, POOL_SIZE)
        corrupted = rng.randint(1, min(2, len(realization)))
        corruption = [rng.choice(FILLER_WORDS) for _ in range(corrupted)]
        collision_realization = rng.choice(expand(pool[j - 1], table))

        # draws from here on may depend on k, so k comes last
        k = rng.choice(list(cfg.distractors))
        callsigns = [truth] + pool[: k - 1] if has_callsign else pool[:k]
        rng.shuffle(callsigns)

        if not has_callsign:
            words = (pre + post) or [rng.choice(FILLER_WORDS)]
            lat = _two_branch_lattice(utt_id, [], words, None, [], 0.0)
            ctx = UtteranceContext(utt_id, 1_650_000_000 + i, callsigns, None, words)
            info = UtteranceInfo(False, False, 0.0, j, k, 0, None)
        else:
            truth_span = list(realization)
            if collision:
                comp_span = list(collision_realization)
            else:
                comp_span = corruption + truth_span[corrupted:]
            delta = -magnitude if confused else magnitude
            lat = _two_branch_lattice(utt_id, pre, truth_span, comp_span, post, delta)
            reference = pre + truth_span + post
            ctx = UtteranceContext(utt_id, 1_650_000_000 + i, callsigns, truth, reference)
            info = UtteranceInfo(confused, collision, magnitude, j, k, corrupted, realization)

        lat = rescore(lat, lg)  # materialize baseline grammar costs
        utterances.append(GeneratedUtterance(ctx, lat, info))

    return Corpus(utterances, grammar, lexicon, lg, syms, table, cfg.discount)


def load_table(cfg: SimConfig) -> AirlineTable:
    from .expansion import load_airline_table

    if cfg.airlines:
        return load_airline_table(cfg.airlines)
    return default_airline_table()


# -- experiment runner --------------------------------------------------------


@dataclass
class ExperimentReport:
    rows: list[ReportRow]
    diagnostics: list[DiagnosticRow]
    corpus_stats: tuple[int, int, Optional[int]]  # with, without, median callsigns

    def row(self, label: str) -> ReportRow:
        for r in self.rows:
            if r.label == label:
                return r
        raise KeyError(label)


def _row_plan(cfg: SimConfig) -> list[tuple[str, str, Optional[str]]]:
    plan = []
    for method in cfg.methods:
        if method == "baseline":
            plan.append(("baseline", "baseline", None))
        else:
            for variant in cfg.variants:
                plan.append((f"{method} {variant}", method, variant))
    return plan


def _variant_word_lists(corpus: Corpus, ctx: UtteranceContext, variant: str) -> list[tuple[str, ...]]:
    if variant == "ground_truth":
        raws = [ctx.ground_truth_callsign] if ctx.ground_truth_callsign else []
    else:
        raws = list(ctx.callsigns)
    out = []
    for raw in raws:
        out.extend(expand(raw, corpus.table))
    return sorted(set(out))


def strip_graph(lat: Lattice) -> Lattice:
    """The acoustic side alone: graph costs zeroed everywhere."""
    out = lat.copy()
    for arcs in out.arcs:
        for a in arcs:
            a.graph = 0.0
    out.finals = {s: (fa, 0.0) for s, (fa, _fg) in out.finals.items()}
    return out


def _decode_utterance(corpus: Corpus, gu: GeneratedUtterance, cfg: SimConfig):
    """Best hypothesis and cost per planned report row for one utterance."""
    results = {}
    lat = gu.lattice
    biases = {}
    boosted_lats = {}

    def bias_for(variant):
        if variant not in biases:
            variants = _variant_word_lists(corpus, gu.context, variant)
            syms = SymbolTable(lat.words())
            biases[variant] = build_biasing_fst(variants, corpus.discount, syms)
        return biases[variant]

    def gboosted_lattice(variant):
        if variant not in boosted_lats:
            variants = _variant_word_lists(corpus, gu.context, variant)
            boosted = boost_grammar(
                corpus.grammar, variants, cfg.gboost_k, cfg.new_arc_cost, cfg.gboost_mode
            )
            lg_boosted = compose(corpus.lexicon, boosted)
            boosted_lats[variant] = rescore(strip_graph(lat), lg_boosted)
        return boosted_lats[variant]

    for label, method, variant in _row_plan(cfg):
        if method == "baseline":
            hyp = best_hypothesis(lat)
        elif method == "rescore":
            hyp = best_hypothesis(rescore(lat, bias_for(variant)))
        elif method == "gboost":
            hyp = best_hypothesis(gboosted_lattice(variant))
        else:  # gboost+rescore
            hyp = best_hypothesis(rescore(gboosted_lattice(variant), bias_for(variant)))
        results[label] = hyp
    return gu.context.utterance_id, results


def run_experiment(cfg: SimConfig, corpus: Optional[Corpus] = None) -> ExperimentReport:
    cfg.validate()
    if corpus is None:
        corpus = generate_corpus(cfg)
    plan = _row_plan(cfg)

    if cfg.jobs > 1:
        with ThreadPoolExecutor(max_workers=cfg.jobs) as pool:
            decoded = list(pool.map(lambda gu: _decode_utterance(corpus, gu, cfg), corpus.utterances))
    else:
        decoded = [_decode_utterance(corpus, gu, cfg) for gu in corpus.utterances]
    decoded.sort(key=lambda pair: pair[0])
    hyps_by_row: dict[str, dict[str, list[str]]] = {label: {} for label, _, _ in plan}
    costs: dict[tuple[str, str], float] = {}
    for utt_id, results in decoded:
        for label, hyp in results.items():
            hyps_by_row[label][utt_id] = hyp.words
            costs[(utt_id, label)] = hyp.cost

    refs = corpus.references()
    expansions = corpus.truth_expansions()
    rows = []
    diagnostics = []
    for label, _method, _variant in plan:
        hyps = hyps_by_row[label]
        wer = utterance_wer(refs, hyps)
        cs_stats, accuracy, records = callsign_metrics(hyps, expansions)
        rows.append(ReportRow(label, wer.wer, cs_stats.wer, accuracy))
        for rec in records:
            diagnostics.append(
                DiagnosticRow(
                    rec.utterance_id,
                    label,
                    costs[(rec.utterance_id, label)],
                    rec.exact_match,
                    rec.counts.errors,
                    " ".join(hyps[rec.utterance_id]),
                )
            )
    stats = context_stats(u.context for u in corpus.utterances)
    return ExperimentReport(rows, diagnostics, (stats.with_callsign, stats.without_callsign, stats.median_callsigns))


def sweep_distractors(
    cfg: SimConfig,
    ks: Sequence[int],
    seeds: Sequence[int],
    check_monotone: bool = True,
) -> list[tuple[int, float]]:
    """Mean rescore-surveillance accuracy per distractor count.

    With fixed seeds the per-utterance substreams make everything but
    the boosted list identical across counts, so the mean accuracy must
    be monotone nonincreasing in k; by default that is asserted.
    """
    points = []
    for k in ks:
        accs = []
        for seed in seeds:
            sub = SimConfig(**{**cfg.__dict__, "seed": seed, "distractors": (k,),
                               "methods": ("rescore",), "variants": ("surveillance",)})
            report = run_experiment(sub)
            accs.append(report.row("rescore surveillance").accuracy)
        points.append((k, sum(accs) / len(accs)))
    if check_monotone:
        for (k1, a1), (k2, a2) in zip(points, points[1:]):
            if a2 > a1 + 1e-9:
                raise ToolkitError(
                    f"accuracy increased from {a1:.2f} at k={k1} to {a2:.2f} at k={k2}; "
                    "distractor growth must not help"
                )
    return points
