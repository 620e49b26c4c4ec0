import pytest

from rotune import kernels
from rotune.config import load_config
from rotune.device import ChipSample, DelayParams, generate_population, standard_ros


@pytest.fixture(scope="session")
def cfg():
    return load_config()


@pytest.fixture(scope="session")
def population(cfg):
    return generate_population(cfg.population, cfg.seed)


@pytest.fixture
def chip():
    """Nominal die: every multiplier at unity, s_real 1.8."""
    return ChipSample("fixture", 1.0, standard_ros(), 1.8, delay=DelayParams(d0=4.0e-11))


@pytest.fixture(params=kernels.available_backends())
def backend(request):
    return kernels.get_backend(request.param)


ACCEPTANCE_LINES = {}


def record_criterion(number: int, name: str, ok: bool, detail: str) -> None:
    line = f"criterion {number:2d} {'PASS' if ok else 'FAIL'}  {name}: {detail}"
    ACCEPTANCE_LINES[number] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[n])
