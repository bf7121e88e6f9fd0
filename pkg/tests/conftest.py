import pytest

from windsurge.turbine import reference_turbine


@pytest.fixture(scope="session")
def params():
    return reference_turbine()
