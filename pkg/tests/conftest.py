import pytest

import susyquench as sq


@pytest.fixture(scope="session")
def geom():
    return sq.BoxGeometry(4.0)


@pytest.fixture(scope="session")
def basis(geom):
    return sq.HierarchyBasis(geom)


@pytest.fixture(scope="session")
def rule(geom):
    # order 600 integrates products of states up to index ~300 exactly
    return sq.build_quadrature(600, geom)
