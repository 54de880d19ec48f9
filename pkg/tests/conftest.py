import pytest

from epsstokes.harness import RunConfig, run_acceptance


@pytest.fixture(scope="session")
def acceptance_report():
    """One full acceptance run shared by every test that inspects it."""
    return run_acceptance(RunConfig())
