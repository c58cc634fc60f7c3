"""Access to the example programs shipped with the package."""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cache
from importlib import resources
from pathlib import Path

from .diagnostics import SaxError
from .program import Program, check_program, load_file


def corpus_dir() -> Path:
    return Path(str(resources.files("sax") / "corpus"))


@cache
def manifest() -> dict:
    return json.loads((corpus_dir() / "manifest.json").read_text())


@dataclass(frozen=True)
class CorpusRun:
    file: str
    entry: str
    expect: int | None
    terminates: bool
    sequential: bool


def program_files() -> list[str]:
    return [p["file"] for p in manifest()["programs"]]


def runs() -> list[CorpusRun]:
    return [CorpusRun(p["file"], r["entry"], r["expect"], r["terminates"], r["sequential"])
            for p in manifest()["programs"] for r in p["runs"]]


def mutants() -> list[dict]:
    return list(manifest()["mutants"])


def path_of(name: str) -> Path:
    return corpus_dir() / name


def load_checked(name: str) -> Program:
    """Load and check a corpus file; raises if it has any diagnostics."""
    prog = load_file(path_of(name))
    diags = check_program(prog)
    if diags:
        raise SaxError(diags)
    return prog


_checked: dict[str, Program] = {}


def program(name: str) -> Program:
    """A cached, checked corpus program."""
    if name not in _checked:
        _checked[name] = load_checked(name)
    return _checked[name]
