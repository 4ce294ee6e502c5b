import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from contrailscope.ingest import ParticleSnapshot


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def make_snapshot(time, positions, *, ice=None, temperature=None, diameter=None,
                  pressure=None, particle_ids=None, z=None):
    """Snapshot builder for tests; positions is (n, 2) or (n, 3)."""
    pos = np.asarray(positions, dtype=float)
    n = len(pos)
    three_d = (pos.ndim == 2 and pos.shape[1] == 3) or z is not None
    return ParticleSnapshot(
        time=float(time),
        particle_id=np.arange(n, dtype=np.int64) if particle_ids is None else np.asarray(particle_ids),
        x=pos[:, 0] if n else np.array([]),
        y=pos[:, 1] if n else np.array([]),
        z=(pos[:, 2] if n else np.array([])) if three_d else None,
        temperature=np.full(n, 230.0) if temperature is None else np.asarray(temperature, dtype=float),
        diameter=np.full(n, 2e-6) if diameter is None else np.asarray(diameter, dtype=float),
        ice_flag=np.ones(n, dtype=bool) if ice is None else np.asarray(ice, dtype=bool),
        pressure=np.full(n, 23842.0) if pressure is None else np.asarray(pressure, dtype=float),
    )


@pytest.fixture
def snapshot_factory():
    return make_snapshot
