import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from subseg_qe.phrase_store import store_from_text  # noqa: E402

FIXTURE_A = """\
a b ||| x y ||| 0.5 0.5 ||| 0-0 1-1 ||| 4 4 3
a b ||| x q ||| 0.5 0.5 ||| 0-0 ||| 2 4 1
c ||| z ||| 0.5 0.5 ||| 0-0 ||| 2 2 2
a c ||| x z ||| 0.5 0.5 ||| 0-0 1-1 ||| 1 1 1
"""


@pytest.fixture
def store_a():
    return store_from_text(FIXTURE_A)


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    if module is None or not module.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in module.summary_lines():
        terminalreporter.write_line(line)
