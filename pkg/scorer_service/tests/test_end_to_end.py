"""End-to-end: the verification engine, configured with remote scorer and
classifier endpoints, runs its committed 20-claim fixture against a live
instance of this service. The run must finish cleanly: exit code 0 and no
recorded scorer/classifier failures (a malformed response would abort the
run, so a clean finish also means zero protocol errors).

The engine is driven through its public surfaces only: the experiment
config file, the CLI, and the HTTP wire protocol.
"""

import json
import socket
import subprocess
import sys
import threading
import time
from pathlib import Path

import pytest
import requests
import uvicorn

from scorer_service.app import create_app

ENGINE_FIXTURES = Path(__file__).resolve().parents[2] / "tests" / "fixtures"


def free_port() -> int:
    with socket.socket() as sock:
        sock.bind(("127.0.0.1", 0))
        return sock.getsockname()[1]


@pytest.fixture(scope="module")
def live_service(app):  # app fixture from conftest (session scope)
    port = free_port()
    server = uvicorn.Server(
        uvicorn.Config(app, host="127.0.0.1", port=port, log_level="error")
    )
    thread = threading.Thread(target=server.run, daemon=True)
    thread.start()
    base = f"http://127.0.0.1:{port}"
    for _ in range(100):
        try:
            if requests.get(f"{base}/info", timeout=1).status_code == 200:
                break
        except requests.RequestException:
            time.sleep(0.05)
    else:
        pytest.fail("service did not come up")
    yield base
    server.should_exit = True
    thread.join(timeout=5)


@pytest.fixture()
def engine_config(tmp_path, live_service) -> Path:
    config = {
        "tasks": [
            {"name": "main20", "path": str(ENGINE_FIXTURES / "tasks" / "main20.jsonl")}
        ],
        "kbs": [
            {"name": "general", "kind": "indexed", "path": str(ENGINE_FIXTURES / "kbs" / "general.jsonl")},
            {"name": "science", "kind": "indexed", "path": str(ENGINE_FIXTURES / "kbs" / "science.jsonl")},
            {"name": "news", "kind": "indexed", "path": str(ENGINE_FIXTURES / "kbs" / "news.jsonl")},
        ],
        "policies": [
            {"type": "single", "kb": "general"},
            {"type": "union", "kbs": ["general", "science", "news"]},
            {"type": "none"},
            {"type": "best_evidence_claim", "kbs": ["general", "science", "news"]},
        ],
        "scorer": {"kind": "remote", "endpoint": live_service},
        "classifier": {"kind": "remote", "endpoint": live_service},
        "output_dir": str(tmp_path / "out"),
        "workers": 2,
        "seed": 42,
    }
    path = tmp_path / "config.json"
    path.write_text(json.dumps(config, indent=2), encoding="utf-8")
    return path


def test_engine_runs_clean_against_service(engine_config, tmp_path):
    result = subprocess.run(
        [sys.executable, "-m", "verikb", "run", "--config", str(engine_config)],
        capture_output=True,
        text=True,
        timeout=600,
    )
    assert result.returncode == 0, result.stderr

    manifest = json.loads((tmp_path / "out" / "run_manifest.json").read_text())
    assert manifest["failure_counts"] == {}
    assert len(manifest["cells"]) == 4

    # every recorded outcome is protocol-clean: scores strictly inside
    # (0,1) without hitting the engine's clamp bounds, probs sum to 1
    clamp = 1e-6
    outcome_files = sorted((tmp_path / "out" / "outcomes").glob("*.jsonl"))
    assert len(outcome_files) == 4
    checked = 0
    for path in outcome_files:
        lines = path.read_text().splitlines()
        assert json.loads(lines[0])["type"] == "header"
        for line in lines[1:]:
            record = json.loads(line)
            assert record["failure"] is None
            for sentence in record["evidence"]["sentences"]:
                assert clamp < sentence["score"] < 1.0 - clamp
            probs = record["verdict"]["probs"]
            assert abs(sum(probs) - 1.0) <= 1e-6
            assert all(0.0 <= p <= 1.0 for p in probs)
            checked += 1
    assert checked == 4 * 20

    # reports were rendered from the remote-scored outcomes
    assert (tmp_path / "out" / "reports" / "accuracy_table.csv").exists()
