"""WFST toolkit for boosting contextually known callsigns in ASR output.

Two boosting methods share one substrate: per-utterance lattice
rescoring with biasing FSTs, and grammar-level weight modification
before (simulated) decoding. Expansion of compressed callsigns,
WER / callsign-WER / accuracy metrics, surveillance context ingestion,
and a synthetic experiment harness round out the pipeline.
"""

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
from .expansion import (
    AirlineTable,
    ExpansionOptions,
    default_airline_table,
    expand,
    load_airline_table,
    parse_callsign,
)
from .fst import (
    Arc,
    Fst,
    Path,
    SymbolTable,
    arc_sort,
    compose,
    connect,
    identity_acceptor,
    read_fst_text,
    shortest_path,
    write_fst_text,
)
from .gboost import boost_grammar
from .lattice import (
    Hypothesis,
    Lattice,
    best_hypothesis,
    lattice_to_fst,
    load_lattices,
    read_lattice_text,
    rescore,
    save_lattices,
    write_lattice_text,
)
from .metrics import (
    CallsignEvalRecord,
    WerStats,
    align,
    best_callsign_span,
    callsign_metrics,
    edit_counts,
    utterance_wer,
)
from .surveillance import (
    ContextStats,
    UtteranceContext,
    context_stats,
    load_surveillance,
    save_surveillance,
)

__version__ = "0.1.0"
