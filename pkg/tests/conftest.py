import json
import shutil
from pathlib import Path

import pytest

from cotsynth.inference import ChatClient, EndpointConfig
from cotsynth.mock_server import MockChatServer

DATA = Path(__file__).parent / "data"
GOLDEN = Path(__file__).parent / "golden"


def make_client(behavior, **kw):
    server = MockChatServer(behavior, reject_extensions=kw.pop("reject_extensions", False))
    cfg = EndpointConfig("http://mock.test", "mock-model", **kw)
    return ChatClient(cfg, transport=server.transport(), sleep=lambda s: None, env={}), server


@pytest.fixture
def fixture5(tmp_path):
    """Copy of the five-session fixture with its config."""
    dst = tmp_path / "fixture5"
    shutil.copytree(DATA / "fixture5", dst, ignore=shutil.ignore_patterns("out"))
    return dst


@pytest.fixture
def imbalanced(tmp_path):
    dst = tmp_path / "imbalanced"
    shutil.copytree(DATA / "imbalanced", dst, ignore=shutil.ignore_patterns("out"))
    return dst


def edit_config(root: Path, **changes) -> Path:
    path = root / "config.json"
    cfg = json.loads(path.read_text())
    cfg.update(changes)
    path.write_text(json.dumps(cfg))
    return path


def pytest_terminal_summary(terminalreporter):
    try:
        import test_acceptance as acc
    except ImportError:
        return
    if not acc.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, _, _ in acc.CRITERIA:
        if name in acc.RESULTS:
            terminalreporter.write_line(acc.result_line(name))
