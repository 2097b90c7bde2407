import csv

import numpy as np
import pytest

from netclust.ingest import Column, RawTable

# pass/fail lines collected by the acceptance gate, echoed after the run
acceptance_lines: list[str] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if acceptance_lines:
        terminalreporter.section("acceptance criteria")
        for line in acceptance_lines:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def write_rows(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        if header is not None:
            writer.writerow(header)
        writer.writerows(rows)
    return path


def numeric_table(names, columns):
    cols = [Column(n, "numeric", np.asarray(c, dtype=float)) for n, c in zip(names, columns)]
    return RawTable(column_names=list(names), columns=cols, n_rows=len(columns[0]))


@pytest.fixture
def tiny_blobs(rng):
    """Two well-separated planted blobs in 2-D with ground-truth labels."""
    a = rng.normal([0.0, 0.0], 0.5, size=(40, 2))
    b = rng.normal([10.0, 10.0], 0.5, size=(40, 2))
    X = np.vstack([a, b])
    y = np.array([0] * 40 + [1] * 40)
    perm = rng.permutation(80)
    return X[perm], y[perm]
