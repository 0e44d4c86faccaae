import pytest

CRITERIA = {
    "C1": "single-change projection angles",
    "C2": "single-change location RMSE",
    "C3": "multiple-change count and ARI",
    "C4": "oracle projection RMSE",
    "C5": "convex relaxation optimality ordering",
    "C6": "noiseless exact recovery",
    "C7": "gamma norm and eigenvalue bounds",
    "C8": "agreement with brute-force sparse direction",
    "C9": "precision-weighted direction beats vanilla",
    "C10": "temporal dependence robustness",
}

_results: dict[str, tuple[bool, str]] = {}


@pytest.fixture
def record():
    """Store the outcome of an acceptance criterion for the terminal summary."""

    def _record(cid: str, passed: bool, detail: str) -> None:
        _results[cid] = (bool(passed), detail)

    return _record


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for cid, name in CRITERIA.items():
        if cid in _results:
            ok, detail = _results[cid]
            terminalreporter.write_line(f"{cid} {'PASS' if ok else 'FAIL'}  {name}: {detail}")
        else:
            terminalreporter.write_line(f"{cid} NOT RUN  {name}")
