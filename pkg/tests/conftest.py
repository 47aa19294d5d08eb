import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("pwl", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("pwl")


def pytest_addoption(parser):
    parser.addoption("--skip-acceptance", action="store_true", help="skip the full-scale acceptance criteria")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--skip-acceptance"):
        skip = pytest.mark.skip(reason="--skip-acceptance")
        for item in items:
            if "acceptance" in item.keywords:
                item.add_marker(skip)


@pytest.fixture(scope="session")
def criterion_log(request):
    """Collects one pass/fail line per acceptance criterion for the terminal summary."""
    lines = request.config.__dict__.setdefault("_pwl_criteria", {})

    def record(n: int, passed: bool, detail: str, seconds: float):
        lines[n] = f"criterion {n:2d}: {'PASS' if passed else 'FAIL'}  ({seconds:.0f} s)  {detail}"
        print("\n" + lines[n])

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.__dict__.get("_pwl_criteria")
    if lines:
        terminalreporter.section("acceptance criteria")
        for n in sorted(lines):
            terminalreporter.write_line(lines[n])
