import pytest

from isatrain.challenges import load_templates
from isatrain.gamification import load_catalog
from isatrain.taxonomy import load_registry


@pytest.fixture(scope="session")
def registry():
    return load_registry()


@pytest.fixture(scope="session")
def templates():
    return load_templates()


@pytest.fixture(scope="session")
def catalog():
    return load_catalog()
