import os

import numpy as np
import pytest

from glrfair.data import Schema, load_csv

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
GERMAN_CSV = os.path.join(ROOT, "data", "german_credit_aif360.csv")
GERMAN_RAW = os.path.join(ROOT, "data", "german.data")
CONFIG_DIR = os.path.join(ROOT, "configs")
GERMAN_SCHEMA = Schema(label="credit", positive_label=2)


@pytest.fixture(scope="session")
def german():
    return load_csv(GERMAN_CSV, GERMAN_SCHEMA)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def write_csv(path, header, rows):
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for r in rows:
            fh.write(",".join(str(x) for x in r) + "\n")
    return str(path)


# criterion number -> PASS/FAIL line, filled by test_acceptance.py
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for number in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[number])
