import logging
from pathlib import Path

import pytest

from pbcontrol import make_instance

# Random instances in the sweeps routinely contain projects above the
# budget; the validator's warning about them is expected noise here.
logging.getLogger("pbcontrol").setLevel(logging.ERROR)

DATA = Path(__file__).parent / "data"


@pytest.fixture
def example1():
    """Three projects, six single-minded voters, budget 2.

    The greedy approval rule funds {c1, p}; deleting c1 funds {c2} and
    starves p.
    """
    return make_instance(
        projects=[("c1", 1), ("c2", 2), ("p", 1)],
        ballots=[{"c1"}, {"c1"}, {"c1"}, {"c2"}, {"c2"}, {"p"}],
        budget=2,
    )


@pytest.fixture
def example2():
    """Add-control toy: spoiler c can push out d and let p in."""
    return make_instance(
        projects=[("c", 1), ("d", 2), ("p", 1)],
        ballots=[{"c"}, {"c", "d"}, {"c", "d", "p"}],
        budget=2,
    )


@pytest.fixture
def data_dir():
    return DATA
