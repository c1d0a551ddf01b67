import pytest

from pseudoexp import BivariateSample, ModelVariant, PseudoExpParams, make_rng, sample_bivariate


def pytest_configure(config):
    config.stash[_RESULTS] = {}


_RESULTS = pytest.StashKey[dict]()


@pytest.fixture
def criterion_detail(request):
    """Attach a one-line measurement to the acceptance line of the running test."""
    notes = []
    request.node.stash[_NOTES] = notes
    return notes.append


_NOTES = pytest.StashKey[list]()


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or report.skipped:
        return
    if report.when == "call" or report.failed:
        number, title = marker.args
        detail = "; ".join(item.stash.get(_NOTES, []))
        # parametrized criteria accumulate: any failing case fails the criterion
        key = (number, item.nodeid)
        item.config.stash[_RESULTS][key] = (title, report.passed, detail)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    results = config.stash.get(_RESULTS, {})
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted({n for n, _ in results}):
        entries = [v for (n, _), v in results.items() if n == number]
        title = entries[0][0]
        passed = all(ok for _, ok, _ in entries)
        detail = " | ".join(d for _, _, d in entries if d)
        status = "PASS" if passed else "FAIL"
        line = f"criterion {number} [{status}] {title}"
        terminalreporter.write_line(f"{line}: {detail}" if detail else line)


@pytest.fixture
def small_sample():
    return BivariateSample.from_pairs([(1.0, 1.0), (2.0, 0.5)])


@pytest.fixture(scope="session")
def sub1_data_30():
    return sample_bivariate(PseudoExpParams.sub1(2.0, 5.0), ModelVariant.SUB1, 30, make_rng(2024))


@pytest.fixture(scope="session")
def sub2_data_30():
    return sample_bivariate(PseudoExpParams.sub2(2.0, 5.0), ModelVariant.SUB2, 30, make_rng(2025))
