from __future__ import annotations

from pathlib import Path

import pytest

from storesense.datastore import Datastore

FIXTURES = Path(__file__).resolve().parent.parent / "src" / "storesense" / "fixtures"


@pytest.fixture
def chain_snapshot_path() -> Path:
    return FIXTURES / "chain.snapshot.tsv"


@pytest.fixture
def chain_store(chain_snapshot_path: Path) -> Datastore:
    return Datastore.load(chain_snapshot_path)


@pytest.fixture
def sultan_config_path() -> Path:
    return FIXTURES / "sultan_center.yaml"


@pytest.fixture
def demo_config_path() -> Path:
    return FIXTURES / "chain_demo.yaml"
