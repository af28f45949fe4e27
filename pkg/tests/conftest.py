import numpy as np
import pytest

from transuq import cli
from transuq.simulator import default_config
from transuq.space import default_space, lhs_sample


@pytest.fixture(scope="session")
def space():
    return default_space()


@pytest.fixture(scope="session")
def config():
    return default_config()


@pytest.fixture(scope="session")
def small_design(space):
    return lhs_sample(60, space, seed=101)


@pytest.fixture(scope="session")
def workspace(tmp_path_factory):
    """A CLI-built workspace: 60-point design, simulations, fitted models."""
    ws = tmp_path_factory.mktemp("workspace")
    design = ws / "design.csv"
    sim = ws / "sim.csv"
    models = ws / "models"
    assert cli.main(["design", "--n", "60", "--seed", "101",
                     "--out", str(design)]) == 0
    assert cli.main(["simulate", "--design", str(design),
                     "--out", str(sim)]) == 0
    assert cli.main(["fit", "--design", str(design), "--sim", str(sim),
                     "--models-dir", str(models),
                     "--regions", "global", "--outputs", "emissions_Mt",
                     "--years", "2030", "2050",
                     "--restarts", "1", "--seed", "11"]) == 0
    assert cli.main(["fit", "--design", str(design), "--sim", str(sim),
                     "--models-dir", str(models),
                     "--regions", "IN",
                     "--outputs", "solar_capacity_GW", "onshore_capacity_GW",
                     "emissions_Mt", "renewables_share", "weighted_cost",
                     "--years", "2030",
                     "--restarts", "1", "--seed", "11"]) == 0
    return ws


@pytest.fixture()
def rng():
    return np.random.default_rng(12345)
