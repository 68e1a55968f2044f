"""Run ids in log lines."""

import logging
import re

import pytest

from cli import EXIT_OK, main
from telemetrics.logger import RichLogger, logger
from telemetrics.request_manager import RequestIdManager


class _Capture(logging.Handler):
    def __init__(self):
        super().__init__(logging.DEBUG)
        self.setFormatter(RichLogger._ConsoleFormatter())
        self.lines = []

    def emit(self, record):
        self.lines.append(self.format(record))


@pytest.fixture
def captured():
    handler = _Capture()
    logger.logger.addHandler(handler)
    yield handler.lines
    logger.logger.removeHandler(handler)
    RequestIdManager.clear()


def test_log_line_carries_the_current_run_id(captured):
    RequestIdManager.set("run42")
    logger.warning("checked", tag="verify")
    assert captured[-1].endswith("[RID:run42] [verify] checked")


def test_log_line_without_a_run_id(captured):
    RequestIdManager.clear()
    logger.warning("idle", tag="verify")
    assert "[RID:" not in captured[-1]


def test_one_run_id_per_cli_invocation(tmp_path, captured):
    code = main(["bar", "builtin:unit-operad", "--max-weight", "2", "--out", str(tmp_path / "out.json")])
    assert code == EXIT_OK
    ids = {m.group(1) for line in captured if (m := re.search(r"\[RID:([0-9a-f]{8})\]", line))}
    assert len(ids) == 1
    assert all("[RID:" in line for line in captured)
    assert RequestIdManager.get() is None
