from pathlib import Path

import pytest

from headspan.treebank import DepTree, read_conllu_file

DATA = Path(__file__).parent / "data"

FIG1_HEADS = (2, 6, 2, 5, 3, 0, 6, 7, 8, 9)
# the ten rectangles of the example tree, as (l, r, head word)
FIG1_SPANS = {(0, 10, 6), (0, 5, 2), (6, 10, 7), (0, 1, 1), (2, 5, 3),
              (7, 10, 8), (3, 5, 5), (8, 10, 9), (3, 4, 4), (9, 10, 10)}


@pytest.fixture
def data_dir():
    return DATA


@pytest.fixture
def fig1():
    (item,) = read_conllu_file(DATA / "fig1.conllu")
    return item


@pytest.fixture
def fig1_tree():
    return DepTree(FIG1_HEADS)


# -- acceptance summary ----------------------------------------------------------
# Tests in test_acceptance.py carry a "criterion" user property; one PASS/FAIL
# line per criterion is printed at the end of the run.

_CRITERIA = []


def pytest_runtest_logreport(report):
    props = dict(report.user_properties)
    if "criterion" not in props:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        _CRITERIA.append((props["criterion"], report.outcome, props.get("detail", "")))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome, detail in _CRITERIA:
        status = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"{status}  {name}" + (f"  ({detail})" if detail else ""))
