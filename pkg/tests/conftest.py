import pytest

from rupturesim.cli import preset_config


@pytest.fixture(scope="session")
def ex1():
    return preset_config("ex1")


@pytest.fixture(scope="session")
def ex2():
    return preset_config("ex2")


@pytest.fixture(scope="session")
def ex3():
    return preset_config("ex3")
