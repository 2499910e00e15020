import warnings

import numpy as np
import pytest

from statsurf.model import affine_model


@pytest.fixture(scope="session")
def client():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        from starlette.testclient import TestClient

    from statsurf.service.app import create_app

    with TestClient(create_app(), raise_server_exceptions=False) as c:
        yield c


@pytest.fixture
def ideal2():
    return affine_model(np.eye(2))


@pytest.fixture
def ideal3():
    return affine_model(np.eye(3))


@pytest.fixture
def binary1():
    # two opposed linear exponents over the line
    return affine_model(np.array([[1.0], [-1.0]]))
