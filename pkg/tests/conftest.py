import os
import sys
from pathlib import Path

import pytest
from hypothesis import settings

# "acceptance" runs the property suites with many more examples
settings.register_profile("quick", deadline=None)
settings.register_profile("acceptance", max_examples=1000, deadline=None)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "quick"))

sys.path.insert(0, str(Path(__file__).parent))

ROOT = Path(__file__).resolve().parents[1]


def nsw_csv_path():
    """NSW CSV from $STRATHET_NSW_CSV or data/nsw_dw.csv (see scripts/fetch_nsw.py)."""
    env = os.environ.get("STRATHET_NSW_CSV")
    path = Path(env) if env else ROOT / "data" / "nsw_dw.csv"
    return path if path.is_file() else None


@pytest.fixture(scope="session")
def nsw_path():
    path = nsw_csv_path()
    if path is None:
        pytest.skip("NSW data not available; run scripts/fetch_nsw.py")
    return path


def pytest_terminal_summary(terminalreporter):
    from acceptance_log import LINES

    if LINES:
        terminalreporter.section("acceptance criteria")
        for line in LINES:
            terminalreporter.write_line(line)
