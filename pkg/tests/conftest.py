import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

from spectral_gcn import data  # noqa: E402

ACCEPTANCE_LINES = []


def record_acceptance(line: str):
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def cars_hypergraph():
    """Cars hypergraph from the data file if present, else from the full factorial."""
    try:
        path = data.find_dataset_file("cars")
    except FileNotFoundError:
        return data.attributes_to_hypergraph(data.cars_attribute_rows())
    return data.table_to_hypergraph(data.load_categorical(path, "cars"))


def uci_or_none(name):
    try:
        return data.find_dataset_file(name)
    except FileNotFoundError:
        return None
