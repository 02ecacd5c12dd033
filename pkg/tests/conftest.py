import numpy as np
import pytest

from conegroup.gallery import cone_3_1, generator_3_1


@pytest.fixture
def A31():
    return generator_3_1()


@pytest.fixture
def K31():
    return cone_3_1()

