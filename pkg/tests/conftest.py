import numpy as np
import pytest

from alime.dataset import load_dataset
from alime.models import train_autoencoder, train_blackbox


@pytest.fixture(scope="session")
def breast_cancer():
    return load_dataset("breast_cancer", seed=0)


@pytest.fixture(scope="session")
def blackbox(breast_cancer):
    return train_blackbox(breast_cancer)


@pytest.fixture(scope="session")
def autoencoder(breast_cancer):
    return train_autoencoder(breast_cancer)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def write_rows(path, rows):
    path.write_text("\n".join(",".join(str(c) for c in row) for row in rows) + "\n")
    return path


# -- acceptance gate reporting ---------------------------------------------

_criteria: dict[int, dict] = {}


def pytest_runtest_logreport(report):
    info = getattr(report, "criterion", None)
    if info is None:
        return
    number, title = info
    entry = _criteria.setdefault(number, {"title": title, "failed": [], "ran": set()})
    if report.failed:
        entry["failed"].append(report.nodeid.split("::")[-1])
    if report.when == "call" or report.failed:
        entry["ran"].add(report.nodeid)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    marker = item.get_closest_marker("criterion")
    if marker is not None:
        outcome.get_result().criterion = (marker.args[0], marker.args[1])


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        entry = _criteria[number]
        status = "FAIL" if entry["failed"] else "PASS"
        line = f"criterion {number}: {status}  {entry['title']} ({len(entry['ran'])} checks)"
        if entry["failed"]:
            line += "  failing: " + ", ".join(sorted(set(entry["failed"])))
        terminalreporter.write_line(line)
