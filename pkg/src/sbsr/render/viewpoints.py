"""Camera viewpoints on the unit sphere.

Models are assumed upright (+Y), so cameras stay in a moderate elevation band
that avoids top-down and bottom-up degeneracies. The two dataset-wide
viewpoints are rejection-sampled until their great-circle separation exceeds
45 degrees; the same pair then serves every model in the dataset.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

ELEVATION_BAND = (15.0, 45.0)
MIN_SEPARATION_DEG = 45.0


@dataclass(frozen=True)
class Viewpoint:
    azimuth: float  # degrees, [0, 360)
    elevation: float  # degrees

    def in_band(self) -> bool:
        lo, hi = ELEVATION_BAND
        return lo <= self.elevation <= hi


@dataclass(frozen=True)
class ViewPairConfig:
    v1: Viewpoint
    v2: Viewpoint
    seed: int


def view_direction(v: Viewpoint) -> np.ndarray:
    """Unit vector from the origin toward the camera (+Y up)."""
    az = np.deg2rad(v.azimuth)
    el = np.deg2rad(v.elevation)
    return np.array([np.cos(el) * np.sin(az), np.sin(el), np.cos(el) * np.cos(az)])


def separation_deg(a: Viewpoint, b: Viewpoint) -> float:
    """Great-circle angle between two viewpoints, in degrees."""
    cos_angle = float(np.dot(view_direction(a), view_direction(b)))
    return float(np.degrees(np.arccos(np.clip(cos_angle, -1.0, 1.0))))


def pick_viewpoints(seed: int, max_tries: int = 10_000) -> ViewPairConfig:
    """Sample the dataset-wide viewpoint pair; deterministic per seed."""
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0x71E3]))
    lo, hi = ELEVATION_BAND
    for _ in range(max_tries):
        az1, az2 = rng.uniform(0.0, 360.0, size=2)
        el1, el2 = rng.uniform(lo, hi, size=2)
        v1 = Viewpoint(azimuth=float(az1), elevation=float(el1))
        v2 = Viewpoint(azimuth=float(az2), elevation=float(el2))
        if separation_deg(v1, v2) > MIN_SEPARATION_DEG:
            return ViewPairConfig(v1=v1, v2=v2, seed=seed)
    raise RuntimeError(f"no viewpoint pair separated by >{MIN_SEPARATION_DEG} deg "
                       f"after {max_tries} tries")
