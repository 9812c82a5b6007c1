import os
import sys

import pytest


def _ensure_src_on_path():
    repo_root = os.path.dirname(os.path.dirname(__file__))
    src = os.path.join(repo_root, 'src')
    if src not in sys.path:
        sys.path.insert(0, src)


_ensure_src_on_path()


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run full-size experiments")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)
