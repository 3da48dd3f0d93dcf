import os

import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_state(rng, a=None, scale=2.0):
    """A random point of R_a (a drawn when not given)."""
    from lagtop.models import project_to_constraints
    u = rng.normal(size=3)
    v = scale * rng.normal(size=3)
    if a is None:
        a = float(u @ v / np.linalg.norm(u))
    return project_to_constraints(u, v, a), a


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(mod.RESULTS):
        terminalreporter.write_line(line)
