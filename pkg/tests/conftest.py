from __future__ import annotations

import pytest

from verbalarm.kinematics import default_chain
from verbalarm.lexicon import Lexicon
from verbalarm.sim import default_world


@pytest.fixture
def lex():
    return Lexicon.default()


@pytest.fixture(scope="session")
def chain():
    return default_chain()


@pytest.fixture
def world(chain):
    return default_world(chain)


def corpus_commands() -> list[str]:
    from importlib import resources
    text = resources.files("verbalarm.data").joinpath("corpus.txt").read_text("utf-8")
    return [line.strip() for line in text.splitlines()
            if line.strip() and not line.startswith("#")]
