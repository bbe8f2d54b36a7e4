import functools
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from unidyn.control import ManeuverKind, ManeuverSpec, design  # noqa: E402
from unidyn.dynamics import TABLE_I  # noqa: E402
from unidyn.simulate import run_maneuver  # noqa: E402


@pytest.fixture
def params():
    return TABLE_I


@pytest.fixture
def rng():
    return np.random.default_rng(20240501)


@functools.lru_cache(maxsize=None)
def maneuver_run(kind: str, speed: float, h: float = 1e-3):
    """Designed-gain closed-loop run, cached across tests (each takes ~2 s)."""
    from unidyn.simulate import IntegratorConfig

    spec = ManeuverSpec(ManeuverKind(kind), speed)
    gains = design(spec, TABLE_I).gains
    trace, metrics = run_maneuver(spec, TABLE_I, gains, IntegratorConfig(h=h))
    return spec, gains, trace, metrics
