import json
from pathlib import Path

import pytest

FIXTURES = Path(__file__).parent / "fixtures"

_criteria: list[tuple[str, str]] = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    if rep.when == "call" or (rep.when == "setup" and rep.skipped):
        if hasattr(rep, "wasxfail"):
            status = "FAIL" if rep.skipped else "PASS"
            label = f"{marker.args[0]}  (known: {rep.wasxfail})" if rep.skipped else marker.args[0]
            _criteria.append((label, status))
            return
        status = "SKIP" if rep.skipped else ("PASS" if rep.passed else "FAIL")
        _criteria.append((marker.args[0], status))


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(label): acceptance criterion")


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for label, status in _criteria:
        terminalreporter.write_line(f"{status:4}  {label}")


@pytest.fixture(scope="session")
def e2e_instances_path():
    return FIXTURES / "e2e_instances.jsonl"


@pytest.fixture(scope="session")
def e2e_outputs():
    return json.loads((FIXTURES / "e2e_outputs.json").read_text())


@pytest.fixture(scope="session")
def e2e_hand_scores():
    return json.loads((FIXTURES / "e2e_hand_scores.json").read_text())


E2E_MODEL = "scripted-model"


@pytest.fixture
def e2e_store(tmp_path, e2e_instances_path, e2e_outputs):
    """Fixture store holding the hand-written outputs under rot/row/1-shot prompts."""
    from rot_harness.backend import ScriptedBackend
    from rot_harness.datasets import load_canonical
    from rot_harness.prompting import MethodSpec
    from rot_harness.runner import RunConfig, record_fixtures

    store = tmp_path / "fixtures.jsonl"
    config = RunConfig(spec=MethodSpec(), model_id=E2E_MODEL)
    record_fixtures(load_canonical(e2e_instances_path), config, e2e_outputs, ScriptedBackend(store))
    return store
