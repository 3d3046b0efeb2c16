import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False,
                     help="run the slow acceptance criteria (7 and 8)")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: multi-hour acceptance runs")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip = pytest.mark.skip(reason="slow suite: pass --runslow to enable")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)
