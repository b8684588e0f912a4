import os
import shutil

import pytest


@pytest.fixture(scope="session")
def cli():
    path = os.environ.get("COVSTREAM_CLI") or shutil.which("covstream")
    if not path:
        pytest.skip("covstream executable not found (set COVSTREAM_CLI)")
    return path
