from collections import defaultdict

import pytest

CRITERIA = {
    1: "chi-bar critical values",
    2: "chi-bar CDF vs Monte Carlo (KS)",
    3: "analytic kink bias",
    4: "cross-fit kink correlation and variance ratio",
    5: "regret closed form",
    6: "adaptive EL coverage",
    7: "EL deviance vs convex solver",
    8: "error decomposition identity",
    9: "regret ordering on shared seeds",
    10: "qualitative bias/MSE ordering",
    11: "platform calibration Cohen's d",
}

_outcomes: dict[int, list[tuple[str, str]]] = defaultdict(list)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    n = marker.args[0]
    if rep.when == "call" or (rep.when == "setup" and rep.outcome != "passed"):
        _outcomes[n].append((item.name, rep.outcome))


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n in sorted(CRITERIA):
        results = _outcomes.get(n)
        if not results:
            continue
        status = "PASS" if all(o == "passed" for _, o in results) else "FAIL"
        failed = [name for name, o in results if o != "passed"]
        extra = f"  (failing: {', '.join(failed)})" if failed else ""
        tr.write_line(f"criterion {n:>2} {status}  {CRITERIA[n]}{extra}")
