import os

import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def write_redd_house(root, labels, channels):
    """Write labels.dat and channel_<n>.dat files; `channels` maps n -> [(t, watts), ...]."""
    os.makedirs(root, exist_ok=True)
    with open(os.path.join(root, "labels.dat"), "w") as f:
        for number, name in sorted(labels.items()):
            f.write(f"{number} {name}\n")
    for number, rows in channels.items():
        with open(os.path.join(root, f"channel_{number}.dat"), "w") as f:
            for t, w in rows:
                f.write(f"{t} {w}\n")
    return str(root)


@pytest.fixture
def redd_house(tmp_path):
    """Two mains and two appliances every 3 s; mains 2 misses two stamps."""
    t = list(range(1303000000, 1303000600, 3))
    fridge = [(s, 120.0 if (i // 20) % 2 else 6.0) for i, s in enumerate(t)]
    light = [(s, 60.0 if i % 50 < 10 else 0.0) for i, s in enumerate(t)]
    mains1 = [(s, 100.0 + w) for (s, w) in fridge]
    mains2 = [(s, 20.0 + w) for (s, w) in light if s not in (t[5], t[6])]
    labels = {1: "mains", 2: "mains", 3: "refrigerator", 4: "lighting"}
    return write_redd_house(tmp_path / "house_1", labels, {1: mains1, 2: mains2, 3: fridge, 4: light})
