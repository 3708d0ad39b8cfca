import numpy as np
import pytest

from exbmdp.core import Emission, EndogenousDynamics, ExogenousChain, compose
from exbmdp.zoo import zoo_build


@pytest.fixture(scope="session")
def chain4():
    return zoo_build("fig2_chain4").env


@pytest.fixture(scope="session")
def periodic5():
    return zoo_build("fig2_periodic5").env


@pytest.fixture(scope="session")
def prime35():
    return zoo_build("prime_cycle", {"p": 3, "q": 5}).env


@pytest.fixture(scope="session")
def branching():
    return zoo_build("fig1_branching").env


@pytest.fixture(scope="session")
def nonunique():
    return zoo_build("nonunique2x2").env


@pytest.fixture(scope="session")
def coupling10():
    return zoo_build("periodic_coupling10").env


@pytest.fixture(scope="session")
def hex6():
    return zoo_build("fullmulti_hex").env


@pytest.fixture(scope="session")
def triangle():
    return zoo_build("selfedge_triangle").env


@pytest.fixture(scope="session")
def one_obs_env():
    endo = EndogenousDynamics(1, 1, np.array([[0]]))
    exo = ExogenousChain(1, np.array([[1.0]]))
    return compose(endo, exo, Emission(domain=((0, 0),)), name="single")


@pytest.fixture(scope="session")
def one_action_env():
    # Three-state cycle with a single action; every classifier is trivially
    # perfect, so every loss is exactly zero.
    endo = EndogenousDynamics(3, 1, np.array([[1], [2], [0]]))
    exo = ExogenousChain(1, np.array([[1.0]]))
    domain = tuple((s, 0) for s in range(3))
    return compose(endo, exo, Emission(domain=domain), name="cycle3-one-action")


@pytest.fixture(scope="session")
def two_class_env():
    # Controllable 2-cycle over an exogenous 2-cycle with full emission:
    # the parity coupling splits the observations into two closed classes.
    endo = EndogenousDynamics(2, 1, np.array([[1], [0]]))
    exo = ExogenousChain(2, np.array([[0.0, 1.0], [1.0, 0.0]]))
    domain = tuple((s, e) for s in range(2) for e in range(2))
    return compose(endo, exo, Emission(domain=domain), name="two-class")
