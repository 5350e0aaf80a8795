import os

import pytest


@pytest.fixture(scope="session", autouse=True)
def _cache_dir(tmp_path_factory):
    # keep eigenpair caches out of the home directory during tests
    if "HLL_CACHE_DIR" not in os.environ:
        os.environ["HLL_CACHE_DIR"] = str(tmp_path_factory.mktemp("hll-cache"))
    yield


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
