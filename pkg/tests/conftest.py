import numpy as np
import pytest

from jetlag.diff_engine import JetPoint

import support


# points reused across suites; coordinates chosen away from symmetry axes
@pytest.fixture(scope="session")
def pt_flat22():
    return JetPoint.of([0.3, 0.1], [0.2, -0.5], [[0.4, 0.7], [-0.1, 0.2]])


@pytest.fixture(scope="session")
def pt_mixed22():
    return JetPoint.of([0.5, -0.3], [0.4, 0.6], [[0.2, -0.4], [0.3, 0.5]])


@pytest.fixture(scope="session")
def pt_tdep22():
    return JetPoint.of([0.3, 0.2], [0.5, -0.4], [[0.6, 0.1], [-0.2, 0.7]])


@pytest.fixture(scope="session")
def pt_mixed33():
    return JetPoint.of(
        [0.4, -0.2, 0.3],
        [0.3, 0.5, -0.4],
        [[0.2, -0.3, 0.1], [0.4, 0.2, -0.2], [0.1, 0.3, 0.2]],
    )


@pytest.fixture(scope="session")
def ctx_flat22():
    from jetlag.spaces import make_flat

    return make_flat(2, 2)


@pytest.fixture(scope="session")
def ctx_curved_h():
    """Curved h, identity g; the classical comparison space."""
    return support.curved_h_ctx()


@pytest.fixture(scope="session")
def ctx_mixed22():
    """Direction-dependent g with the phi-derived nonlinear connection."""
    return support.mixed22_ctx()


@pytest.fixture(scope="session")
def ctx_tdep22():
    """g depending on t and x, canonical quadratic connection."""
    return support.tdep_g_ctx()


@pytest.fixture(scope="session")
def ctx_xdep22():
    """g depending on x alone; every conservation law closes here."""
    return support.xdep_g_ctx()


@pytest.fixture(scope="session")
def ctx_mixed33():
    return support.mixed33_ctx()


@pytest.fixture(scope="session")
def ctx_xdep33():
    return support.xdep33_ctx()
