import json
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from fixture_corpus import (  # noqa: E402
    build_corpus,
    write_corpus_file,
    write_labels_file,
    write_venues_file,
)


@pytest.fixture(scope="session")
def corpus_docs():
    return build_corpus()


@pytest.fixture
def corpus_file(tmp_path):
    path = tmp_path / "corpus.jsonl"
    write_corpus_file(path)
    return path


@pytest.fixture
def labels_file(tmp_path):
    path = tmp_path / "labels.jsonl"
    write_labels_file(path)
    return path


@pytest.fixture
def venues_file(tmp_path):
    path = tmp_path / "venues.json"
    write_venues_file(path)
    return path


@pytest.fixture
def pipeline_config_file(tmp_path):
    path = tmp_path / "config.json"
    path.write_text(
        json.dumps(
            {
                "selector": {"top_k": 40},
                "classifier": {"c": 1.0, "epochs": 200},
                "cv_folds": 5,
                "seed": 42,
            }
        ),
        "utf-8",
    )
    return path
