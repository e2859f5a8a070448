import json
from pathlib import Path

import pytest

from lmtk.bpe import load_reference_tokenizer

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def tokenizer():
    # loading parses 50k merges; share one instance across the whole run
    return load_reference_tokenizer()


@pytest.fixture(scope="session")
def bpe_reference_cases():
    with open(FIXTURES / "gpt2_reference.json", encoding="utf-8") as f:
        return json.load(f)["cases"]
