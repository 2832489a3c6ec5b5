"""Shared fixtures: frozen synthetic oracle scenes.

The oracle scene parameters are frozen; the expected behavior (margin
F1, distance error bounds, grid optimum) was measured once against the
analytic pinhole model and is regression-tested by the suite.
"""

from __future__ import annotations

import math
import time

import numpy as np
import pytest

from safedist.geometry import CameraModel
from safedist.synth import SceneConfig, generate


# Main oracle scene: mid-field pedestrians, everyone fully visible, all
# ground points inside the central 60% of the image.
ORACLE_CAMERA = dict(
    focal_px=1100.0,
    principal_point=(320.0, 240.0),
    height_m=8.0,
    tilt_rad=math.radians(15.0),
    image_size=(640, 480),
)
ORACLE_AREA = (-4.5, 4.5, -4.0, 6.0)
ORACLE_FRAMES = 500
ORACLE_PEOPLE = 8

# Far-field scene for the noise-robustness comparison: people are small
# (torso ~7 px), the regime where short reference segments measure poorly.
FARFIELD_CAMERA = dict(
    focal_px=500.0,
    principal_point=(320.0, 240.0),
    height_m=12.0,
    tilt_rad=math.radians(18.0),
    image_size=(640, 480),
)
FARFIELD_AREA = (-8.0, 8.0, -6.0, 14.0)
FARFIELD_FRAMES = 200


@pytest.fixture(scope="session")
def oracle_camera() -> CameraModel:
    return CameraModel(**ORACLE_CAMERA)


@pytest.fixture(scope="session")
def oracle_bundle(oracle_camera):
    config = SceneConfig(
        camera=oracle_camera, n_people=ORACLE_PEOPLE, area=ORACLE_AREA, seed=0
    )
    start = time.perf_counter()
    bundle = generate(config, ORACLE_FRAMES)
    elapsed = time.perf_counter() - start
    return bundle, elapsed


@pytest.fixture(scope="session")
def small_bundle(oracle_camera):
    config = SceneConfig(
        camera=oracle_camera, n_people=5, area=ORACLE_AREA, seed=3
    )
    return generate(config, 40)


@pytest.fixture(scope="session")
def farfield_bundle():
    camera = CameraModel(**FARFIELD_CAMERA)
    config = SceneConfig(camera=camera, n_people=8, area=FARFIELD_AREA, seed=0)
    return generate(config, FARFIELD_FRAMES)


def random_camera(rng: np.random.Generator) -> CameraModel:
    """Camera sampled from the ranges the ratio relation is tested over."""
    return CameraModel(
        focal_px=float(rng.uniform(400.0, 1500.0)),
        principal_point=(320.0, 240.0),
        height_m=float(rng.uniform(2.5, 8.0)),
        tilt_rad=float(rng.uniform(math.radians(15.0), math.radians(70.0))),
        image_size=(640, 480),
    )
