import math

import pytest

from oscillent import ModelParams, StateSpec


@pytest.fixture(autouse=True)
def _isolated_cache(tmp_path, monkeypatch):
    monkeypatch.setenv("OSCILLENT_CACHE", str(tmp_path / "cache"))


@pytest.fixture
def ref_params():
    return ModelParams(omega=1.0, Omega=math.sqrt(10.0), C=0.3, hbar=1.0)


@pytest.fixture
def ref_state():
    return StateSpec(E1=20.0, E2=200.0)


_CRITERIA: dict[int, str] = {}


@pytest.fixture
def criterion():
    """Record one acceptance line; printed in the terminal summary."""

    def record(number: int, ok: bool, detail: str):
        _CRITERIA[number] = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
        print(_CRITERIA[number])
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for n in sorted(_CRITERIA):
            terminalreporter.write_line(_CRITERIA[n])
