import random

import pytest

from gridmend.fixtures import toy_scenario
from gridmend.milp import BINARY, CONTINUOUS, MilpModel
from gridmend.solver import adapter_from_spec


@pytest.fixture
def toy():
    return toy_scenario()


@pytest.fixture(scope="session")
def external():
    """Adapter shelling out to the scipy backend; fast and independent."""
    return adapter_from_spec("external")


def random_model(rng: random.Random, max_vars: int = 8) -> MilpModel:
    """Small random MILP; not necessarily feasible."""
    m = MilpModel("random")
    n = rng.randint(1, max_vars)
    for i in range(n):
        if rng.random() < 0.4:
            m.add_var(f"v{i}", BINARY)
        else:
            lb = rng.choice([0.0, round(-rng.uniform(0, 5), 3)])
            m.add_var(f"v{i}", CONTINUOUS, lb, lb + round(rng.uniform(0, 10), 3))
    for r in range(rng.randint(1, 10)):
        picks = rng.sample(range(n), rng.randint(1, n))
        terms = [(i, round(rng.uniform(-5, 5), 3)) for i in picks]
        m.add_con(f"c{r}", terms, rng.choice(["<=", ">=", "="]),
                  round(rng.uniform(-10, 10), 3))
    m.set_objective({i: round(rng.uniform(-3, 3), 3) for i in range(n)},
                    round(rng.uniform(-5, 5), 3))
    return m


def random_bounded_lp(rng: random.Random, max_vars: int = 7) -> MilpModel:
    """Continuous model with finite bounds, so it is never unbounded."""
    m = MilpModel("lp")
    n = rng.randint(1, max_vars)
    for i in range(n):
        lb = round(rng.uniform(-4, 1), 3)
        m.add_var(f"v{i}", CONTINUOUS, lb, lb + round(rng.uniform(0, 8), 3))
    for r in range(rng.randint(1, 9)):
        picks = rng.sample(range(n), rng.randint(1, n))
        terms = [(i, round(rng.uniform(-5, 5), 3)) for i in picks]
        m.add_con(f"c{r}", terms, rng.choice(["<=", ">=", "="]),
                  round(rng.uniform(-8, 8), 3))
    m.set_objective({i: round(rng.uniform(-3, 3), 3) for i in range(n)})
    return m
