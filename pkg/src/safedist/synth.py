"""Synthetic surveillance scenes with exact geometric groundtruth.

People are upright stick figures: feet on the ground, joints at fixed
anthropometric heights on the vertical line through the anchor point, with
small fixed lateral offsets so left and right limbs are distinguishable.
Every joint is projected through the full pinhole model, which makes the
generated data an exact oracle for the whole pipeline: groundtruth
pairwise distances are plain Euclidean distances between anchors, the true
homography and the camera-equivalent trapezoid ratios are known, and with
zero noise every body-part measurement matches its metric reference
exactly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .geometry import (
    CameraModel,
    Homography,
    ground_homography,
    ratios_from_camera,
)
from .pose import N_JOINTS, FramePoses, PoseDetection, write_pose_file
from .evaluation import GroundTruthDistances, write_groundtruth


@dataclass(frozen=True)
class PersonModel:
    """Stick-figure proportions as fractions of total height.

    The default fractions are the exact quotients of the standard metric
    references over a 1.70 m body (torso 0.60 m, leg 0.85 m, arm 0.70 m),
    so that at the default height all four references are simultaneously
    exact on noiseless data.
    """

    height_m: float = 1.70
    torso_frac: float = 0.60 / 1.70
    leg_frac: float = 0.85 / 1.70
    arm_frac: float = 0.70 / 1.70
    shoulder_offset_m: float = 0.20
    hip_offset_m: float = 0.12
    foot_offset_m: float = 0.10

    def __post_init__(self) -> None:
        if not self.height_m > 0:
            raise ValueError(f"height_m must be > 0, got {self.height_m}")
        for name in ("torso_frac", "leg_frac", "arm_frac"):
            frac = getattr(self, name)
            if not 0 < frac < 1:
                raise ValueError(f"{name} must be in (0, 1), got {frac}")


@dataclass(frozen=True)
class SceneConfig:
    camera: CameraModel
    n_people: int
    area: tuple[float, float, float, float]  # x_min, x_max, y_min, y_max (meters)
    person: PersonModel = field(default_factory=PersonModel)
    noise_sigma_px: float = 0.0
    dropout_p: float = 0.0
    seed: int = 0
    max_retries: int = 200

    def __post_init__(self) -> None:
        if self.n_people < 0:
            raise ValueError(f"n_people must be >= 0, got {self.n_people}")
        x_min, x_max, y_min, y_max = self.area
        if x_min >= x_max or y_min >= y_max:
            raise ValueError(f"empty placement area {self.area}")
        if self.noise_sigma_px < 0:
            raise ValueError("noise_sigma_px must be >= 0")
        if not 0 <= self.dropout_p <= 1:
            raise ValueError("dropout_p must be in [0, 1]")


def joint_template(person: PersonModel) -> np.ndarray:
    """(25, 2) array of (lateral X offset, height Z) per BODY-25 joint.

    Feet (ankles, toes, heels) all sit at Z = 0, so the mean foot position
    projects exactly to the image of the anchor point.  Limbs hang straight
    down, which keeps every measured polyline equal to its nominal metric
    length.  The nose is placed at the very top so the joint bounding box
    spans the full body height.
    """
    h = person.height_m
    hip_z = h * person.leg_frac
    neck_z = hip_z + h * person.torso_frac
    knee_z = hip_z / 2.0
    arm_half = h * person.arm_frac / 2.0
    elbow_z = neck_z - arm_half
    wrist_z = neck_z - 2.0 * arm_half
    sho = person.shoulder_offset_m
    hip = person.hip_offset_m
    foot = person.foot_offset_m
    t = np.zeros((N_JOINTS, 2))
    t[0] = (0.0, h)  # nose (top of bbox)
    t[1] = (0.0, neck_z)  # neck
    t[2] = (-sho, neck_z)  # shoulder R
    t[3] = (-sho, elbow_z)  # elbow R
    t[4] = (-sho, wrist_z)  # wrist R
    t[5] = (sho, neck_z)  # shoulder L
    t[6] = (sho, elbow_z)  # elbow L
    t[7] = (sho, wrist_z)  # wrist L
    t[8] = (0.0, hip_z)  # mid hip
    t[9] = (-hip, hip_z)  # hip R
    t[10] = (-hip, knee_z)  # knee R
    t[11] = (-hip, 0.0)  # ankle R
    t[12] = (hip, hip_z)  # hip L
    t[13] = (hip, knee_z)  # knee L
    t[14] = (hip, 0.0)  # ankle L
    t[15] = (-0.03, 0.96 * h)  # eye R
    t[16] = (0.03, 0.96 * h)  # eye L
    t[17] = (-0.07, 0.93 * h)  # ear R
    t[18] = (0.07, 0.93 * h)  # ear L
    t[19] = (foot, 0.0)  # big toe L
    t[20] = (foot + 0.04, 0.0)  # small toe L
    t[21] = (foot, 0.0)  # heel L
    t[22] = (-foot, 0.0)  # big toe R
    t[23] = (-foot - 0.04, 0.0)  # small toe R
    t[24] = (-foot, 0.0)  # heel R
    return t


@dataclass(frozen=True)
class SynthBundle:
    config: SceneConfig
    frames: list[FramePoses]
    groundtruth: GroundTruthDistances
    homography: Homography  # ground meters -> image pixels
    rho_h: float
    rho_v: float
    anchors: list[np.ndarray]  # per frame: (n_people, 2) ground positions


def _project_person(cam: CameraModel, template: np.ndarray, x: float, y: float) -> np.ndarray:
    """Project all joints of a person anchored at ground (x, y); (25, 2) pixels."""
    lateral = template[:, 0]
    heights = template[:, 1]
    world = np.column_stack([x + lateral, np.full(N_JOINTS, y), heights])
    cam_xyz = (cam.rotation @ (world - cam.center_world).T).T
    depth = cam_xyz[:, 2]
    if np.any(depth <= 0):
        raise ValueError("person projects behind the camera")
    img = (cam.intrinsics @ cam_xyz.T).T
    return img[:, :2] / depth[:, None]


def _person_visible(pixels: np.ndarray, image_size: tuple[int, int]) -> bool:
    w, h = image_size
    return bool(
        np.all(pixels[:, 0] >= 0)
        and np.all(pixels[:, 0] <= w)
        and np.all(pixels[:, 1] >= 0)
        and np.all(pixels[:, 1] <= h)
    )


def _apply_noise(
    pixels: np.ndarray, sigma: float, dropout: float, rng: np.random.Generator
) -> np.ndarray:
    """(25, 3) joints from clean (25, 2) pixels, with noise and dropout."""
    joints = np.zeros((N_JOINTS, 3))
    joints[:, :2] = pixels
    joints[:, 2] = 1.0
    if sigma > 0:
        joints[:, :2] += rng.normal(0.0, sigma, size=(N_JOINTS, 2))
        np.clip(joints[:, :2], 0.0, None, out=joints[:, :2])
    if dropout > 0:
        dropped = rng.random(N_JOINTS) < dropout
        joints[dropped] = 0.0
    return joints


def generate(config: SceneConfig, n_frames: int) -> SynthBundle:
    """Deterministic scene: same config and frame count, same bundle."""
    if n_frames < 0:
        raise ValueError(f"n_frames must be >= 0, got {n_frames}")
    cam = config.camera
    template = joint_template(config.person)
    rng = np.random.default_rng(config.seed)
    x_min, x_max, y_min, y_max = config.area

    frames: list[FramePoses] = []
    anchors: list[np.ndarray] = []
    gt_frames: dict[int, list[tuple[int, int, float]]] = {}
    for frame_id in range(n_frames):
        positions = np.zeros((config.n_people, 2))
        people = []
        for person_index in range(config.n_people):
            for attempt in range(config.max_retries):
                x = rng.uniform(x_min, x_max)
                y = rng.uniform(y_min, y_max)
                try:
                    pixels = _project_person(cam, template, x, y)
                except ValueError:
                    continue
                if _person_visible(pixels, cam.image_size):
                    break
            else:
                raise ValueError(
                    f"could not place person {person_index} inside the frustum "
                    f"after {config.max_retries} tries; shrink the area"
                )
            positions[person_index] = (x, y)
            joints = _apply_noise(pixels, config.noise_sigma_px, config.dropout_p, rng)
            people.append(
                PoseDetection(frame_id=frame_id, person_index=person_index, joints=joints)
            )
        frames.append(FramePoses(frame_id=frame_id, people=tuple(people)))
        anchors.append(positions)
        pairs = []
        for i in range(config.n_people):
            for j in range(i + 1, config.n_people):
                dist = float(np.linalg.norm(positions[i] - positions[j]))
                pairs.append((i, j, dist))
        gt_frames[frame_id] = pairs

    rho_h, rho_v = ratios_from_camera(cam)
    return SynthBundle(
        config=config,
        frames=frames,
        groundtruth=GroundTruthDistances(gt_frames),
        homography=Homography(ground_homography(cam), direction="ground_to_image"),
        rho_h=rho_h,
        rho_v=rho_v,
        anchors=anchors,
    )


def perturb(
    frames: list[FramePoses], sigma_px: float, dropout_p: float, seed: int
) -> list[FramePoses]:
    """Noisy copy of a pose sequence; deterministic in the seed.

    Gaussian pixel noise is added to detected joints (clipped at zero to
    keep coordinates valid) and dropped joints are zeroed out the way pose
    exporters do.
    """
    if sigma_px < 0:
        raise ValueError("sigma_px must be >= 0")
    if not 0 <= dropout_p <= 1:
        raise ValueError("dropout_p must be in [0, 1]")
    rng = np.random.default_rng(seed)
    out = []
    for frame in frames:
        people = []
        for det in frame.people:
            joints = np.array(det.joints)
            detected = joints[:, 2] > 0
            if sigma_px > 0:
                noise = rng.normal(0.0, sigma_px, size=(N_JOINTS, 2))
                joints[detected, :2] += noise[detected]
                np.clip(joints[:, :2], 0.0, None, out=joints[:, :2])
            if dropout_p > 0:
                dropped = rng.random(N_JOINTS) < dropout_p
                joints[dropped] = 0.0
            people.append(
                PoseDetection(
                    frame_id=det.frame_id, person_index=det.person_index, joints=joints
                )
            )
        out.append(FramePoses(frame_id=frame.frame_id, people=tuple(people)))
    return out


def camera_sidecar(bundle: SynthBundle) -> dict:
    cam = bundle.config.camera
    return {
        "focal_px": cam.focal_px,
        "principal_point": list(cam.principal_point),
        "height_m": cam.height_m,
        "tilt_rad": cam.tilt_rad,
        "image_size": list(cam.image_size),
        "homography": bundle.homography.as_flat(),
        "rho_h": bundle.rho_h,
        "rho_v": bundle.rho_v,
    }


def write_bundle(bundle: SynthBundle, out_dir) -> dict[str, Path]:
    """Write poses.json, groundtruth.csv and camera.json into out_dir."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "poses": out / "poses.json",
        "groundtruth": out / "groundtruth.csv",
        "camera": out / "camera.json",
    }
    write_pose_file(bundle.frames, paths["poses"])
    write_groundtruth(bundle.groundtruth, paths["groundtruth"])
    with open(paths["camera"], "w") as fh:
        json.dump(camera_sidecar(bundle), fh, indent=2)
        fh.write("\n")
    return paths


def load_camera_sidecar(path) -> CameraModel:
    with open(path) as fh:
        data = json.load(fh)
    return CameraModel(
        focal_px=data["focal_px"],
        principal_point=tuple(data["principal_point"]),
        height_m=data["height_m"],
        tilt_rad=data["tilt_rad"],
        image_size=tuple(data["image_size"]),
    )
