"""Bundled seed corpus and scripted mock verifiers."""

from __future__ import annotations

import shlex
import sys
from importlib import resources
from pathlib import Path
from typing import List, Tuple

from mugie.parser import parse
from mugie.syntax import Program

LISTING1_NAME = "listing1.bpl"


def corpus_dir() -> Path:
    return Path(str(resources.files(__name__) / "corpus"))


def mock_verifier_path() -> Path:
    return Path(str(resources.files(__name__) / "mock_verifier.py"))


def listing1_source() -> str:
    return (corpus_dir() / LISTING1_NAME).read_text(encoding="utf-8")


def build_listing1() -> Program:
    """The five-declaration motivating example: ``h``, its axiom, ``a``, its axiom, ``p``."""
    return parse(listing1_source(), LISTING1_NAME)


def corpus() -> List[Tuple[str, Program]]:
    out = []
    for path in sorted(corpus_dir().glob("*.bpl")):
        out.append((path.name, parse(path.read_text(encoding="utf-8"), path.name)))
    return out


def mock_command(behavior: str, **options) -> str:
    """Command template running the mock verifier; option ``fail_mode="x"`` becomes ``--fail-mode x``."""
    words = [sys.executable, str(mock_verifier_path()), "--behavior", behavior]
    for key, value in options.items():
        words += ["--" + key.replace("_", "-"), str(value)]
    return " ".join(shlex.quote(w) for w in words) + " {files}"
