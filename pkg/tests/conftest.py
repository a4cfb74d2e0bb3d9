from __future__ import annotations

import pytest

_criteria = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    if not item.name.startswith("test_criterion_"):
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        title = (item.function.__doc__ or item.name).strip().splitlines()[0]
        _criteria.append((title, report.outcome))


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for title, outcome in _criteria:
        terminalreporter.write_line(f"{'PASS' if outcome == 'passed' else 'FAIL'}  {title}")


class SeasonRun:
    """A generated, classified and tallied synthetic season."""

    def __init__(self, params, n, seed):
        import time

        from faceoff_forge.aggregate import build_baselines, tally
        from faceoff_forge.classify import classify_all
        from faceoff_forge.synth import generate_season

        start = time.perf_counter()
        self.params = params
        self.records = generate_season(params, n, seed)
        self.tally = tally(classify_all(self.records))
        self.baselines = build_baselines(self.tally)
        self.seconds = time.perf_counter() - start


@pytest.fixture(scope="session")
def season_500k():
    from faceoff_forge.synth import random_params

    return SeasonRun(random_params(n_players=60, n_teams=15, seed=11), 500_000, seed=11)
