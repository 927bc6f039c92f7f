import pytest
from hypothesis import HealthCheck, settings

from faultlab.config import Config, load_config
from faultlab.service.ops import default_config_path

settings.register_profile("faultlab", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("faultlab")

# criterion number -> (ok, detail), filled by test_acceptance
ACCEPTANCE: dict = {}


@pytest.fixture(scope="session")
def desk_cfg() -> Config:
    return load_config(default_config_path())


@pytest.fixture
def cfg() -> Config:
    return Config()


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")
