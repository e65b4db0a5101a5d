"""fixkit: fixing-function types over S-expression values.

Declarative type definitions compile into recognizers, fixing functions,
induced equivalences, count measures, constructors and accessors.  A small
function language, a law harness and derived visitors sit on top.
"""

from fixkit.kernel import Kernel, derive
from fixkit.lang import Definitions, GuardViolation, call, evaluate
from fixkit.program import Program, load_file, load_program
from fixkit.schema import Schema, SchemaError, load_schema, parse_events, validate
from fixkit.values import NIL, T, Char, Pair, ParseError, Sym, from_list, kw, print_value, read_value, values_equal

__all__ = [
    "Char",
    "Definitions",
    "GuardViolation",
    "Kernel",
    "NIL",
    "Pair",
    "ParseError",
    "Program",
    "Schema",
    "SchemaError",
    "Sym",
    "T",
    "call",
    "derive",
    "evaluate",
    "from_list",
    "kw",
    "load_file",
    "load_program",
    "load_schema",
    "parse_events",
    "print_value",
    "read_value",
    "validate",
    "values_equal",
]

__version__ = "0.1.0"
