"""Causal consistency checking for read/write histories.

Parse or generate a history, then ask whether it conforms to CC, CCv, or CM
(two checking strategies for the latter), either natively over bit-matrix
relations or through an embedded Datalog fixpoint engine.
"""

from .checker import (
    PATTERN_MODEL,
    PATTERNS,
    Engine,
    check,
    detect_bad_patterns,
    parse_engine,
)
from .datalog import (
    Atom,
    Const,
    Constraint,
    DatalogProgram,
    Rule,
    Var,
    Violation,
    check_constraints,
    evaluate,
    parse_program,
    program_to_text,
)
from .encode import Model, emit_text, encode, parse_model
from .errors import (
    CannotInject,
    DuplicateId,
    DuplicateWrite,
    EngineDisagreement,
    IllFormedProgram,
    MalformedInput,
    NotExecuted,
    TooLarge,
)
from .generate import GenConfig, Xorshift64Star, execute_simulated, generate, mutate_violation
from .history import (
    History,
    Operation,
    Verdict,
    parse_history,
    po_maximal,
    serialize_history,
    validate_differentiated,
)
from .oracle import oracle_check, oracle_check_naive, srw_member
from .relations import (
    HbFamily,
    Relation,
    compute_cf,
    compute_co,
    compute_hb,
    find_cycle,
    transitive_closure,
)

__version__ = "0.1.0"

__all__ = [
    "Atom",
    "CannotInject",
    "Const",
    "Constraint",
    "DatalogProgram",
    "DuplicateId",
    "DuplicateWrite",
    "Engine",
    "EngineDisagreement",
    "GenConfig",
    "HbFamily",
    "History",
    "IllFormedProgram",
    "MalformedInput",
    "Model",
    "NotExecuted",
    "Operation",
    "PATTERNS",
    "PATTERN_MODEL",
    "Relation",
    "Rule",
    "TooLarge",
    "Var",
    "Verdict",
    "Violation",
    "Xorshift64Star",
    "check",
    "check_constraints",
    "compute_cf",
    "compute_co",
    "compute_hb",
    "detect_bad_patterns",
    "emit_text",
    "encode",
    "evaluate",
    "execute_simulated",
    "find_cycle",
    "generate",
    "mutate_violation",
    "oracle_check",
    "oracle_check_naive",
    "parse_engine",
    "parse_history",
    "parse_model",
    "parse_program",
    "po_maximal",
    "program_to_text",
    "serialize_history",
    "srw_member",
    "transitive_closure",
    "validate_differentiated",
    "__version__",
]
