"""Dual-specification SQL query synthesis.

Consumes a natural-language query with tagged literal values plus an optional
table sketch (typed example tuples, sort flag, row limit) and streams ranked
SQL candidates, pruning the search with database probes so every emitted query
satisfies the sketch.
"""

from .ast import (
    DecisionPoint, DecisionTrace, HOLE, JoinPath, PartialQuery, Predicate,
    PredicateChain, STAR, SelectItem, canonical_eq, canonical_key, holes,
    new_root, render_sql, apply_decision,
)
from .catalog import (
    ColumnRef, SchemaCatalog, SchemaGraph, ValueIndex, autocomplete,
    build_value_index, join_graph, load_catalog,
)
from .database import Database, EngineError
from .guidance import (
    GuidanceModel, LexicalConfig, Literal, ScoredChoice, lexical_model,
    score_choices, uniform_model,
)
from .joins import construct_join_paths, expand_one_hop, steiner
from .parser import ParseError, parse_gold
from .search import Candidate, EnumConfig, SearchState, enumerate_queries
from .tsq import (
    ExampleCell, ExampleTuple, TableSketchQuery, cell_matches, parse_tsq,
    satisfies, tsq_to_json,
)
from .verify import (
    VerificationOutcome, Verifier, build_cv_query, build_rv_query,
    can_check_rows, verify, verify_by_order, verify_clauses,
    verify_column_types, verify_literals, verify_semantics,
)

__version__ = "0.1.0"
