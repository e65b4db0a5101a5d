"""Loading a whole ``.fty`` source: schema, definitions, visitors, hooks."""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

from fixkit.lang import Definitions, FnDef, LangError
from fixkit.laws import LawReport, deffixequiv
from fixkit.schema import (
    DefineEvent,
    Event,
    FixequivEvent,
    HookEvent,
    Schema,
    SchemaError,
    VisitorEvent,
    parse_events,
    validate,
)
from fixkit.visitor import VisitorError, VisitorSpec, parse_visitor

HOOK_RUNS = 100
CORPUS_DIR = Path(__file__).with_name("corpus")


@dataclass
class Program:
    """Everything loaded from one ``.fty`` source; treat as read-only after loading."""

    schema: Schema
    defs: Definitions
    visitors: dict[str, VisitorSpec] = field(default_factory=dict)
    hook_reports: list[LawReport] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    @property
    def functions(self) -> Mapping[str, FnDef]:
        return self.defs.functions


def load_events(events: list[Event], hook_runs: int = HOOK_RUNS, hook_seed: int = 0) -> Program:
    schema = validate(events)
    program = Program(schema, Definitions(schema))
    hook = False
    for ev in events:
        try:
            if isinstance(ev, DefineEvent):
                fns = program.defs.add_group(ev.name, ev.forms, ev.mutual)
                if ev.mutual:
                    for fn in fns:
                        if fn.measure is None:
                            program.warnings.append(
                                f"defines {ev.name}: {fn.name} has no :measure; "
                                "termination is only enforced by the depth limit")
                if hook:
                    program.hook_reports.extend(
                        deffixequiv(program.defs, ev.name, hook_runs, hook_seed, mutual=ev.mutual))
            elif isinstance(ev, VisitorEvent):
                if ev.name in program.visitors:
                    raise VisitorError(f"redefinition of visitor {ev.name}")
                spec = parse_visitor(ev.form, program.defs)
                program.visitors[ev.name] = spec
                program.warnings.extend(spec.warnings)
            elif isinstance(ev, HookEvent):
                hook = ev.enabled
            elif isinstance(ev, FixequivEvent):
                opts = dict(ev.options)
                runs, seed = opts.get("runs", hook_runs), opts.get("seed", hook_seed)
                if type(runs) is not int or runs < 0 or type(seed) is not int:
                    raise SchemaError(":runs and :seed must be integers")
                if ev.target not in program.functions:
                    raise SchemaError(f"unknown function {ev.target}")
                program.hook_reports.extend(deffixequiv(program.defs, ev.target, runs, seed, mutual=ev.mutual))
        except (LangError, VisitorError) as exc:
            raise SchemaError(str(exc), ev.line, ev.column) from None
        except SchemaError as exc:
            if exc.line is None:
                raise SchemaError(exc.message, ev.line, ev.column) from None
            raise
    return program


def load_program(text: str, hook_runs: int = HOOK_RUNS, hook_seed: int = 0) -> Program:
    return load_events(parse_events(text), hook_runs, hook_seed)


def load_file(path: str | os.PathLike, hook_runs: int = HOOK_RUNS, hook_seed: int = 0) -> Program:
    with open(path, encoding="latin-1") as fh:
        return load_program(fh.read(), hook_runs, hook_seed)


def corpus_path(name: str) -> Path:
    """Path of a shipped ``.fty`` example, e.g. ``corpus_path("aterm.fty")``."""
    return CORPUS_DIR / name
