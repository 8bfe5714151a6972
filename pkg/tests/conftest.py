from __future__ import annotations

from pathlib import Path

import pytest

from instrumenta.ir import IrModule, parse_module

CORPUS_DIR = Path(__file__).parent / "corpus"


def corpus_paths() -> list[Path]:
    return sorted(CORPUS_DIR.glob("*.ir"))


def load_corpus(name: str) -> IrModule:
    path = CORPUS_DIR / name
    return parse_module(path.read_text(encoding="utf-8"), source_name=str(path))


@pytest.fixture
def listing1() -> IrModule:
    return load_corpus("listing1.ir")


@pytest.fixture
def hotloop() -> IrModule:
    return load_corpus("hotloop.ir")


@pytest.fixture
def inline_leaves() -> IrModule:
    return load_corpus("inline_leaves.ir")
