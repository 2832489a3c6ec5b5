"""BODY-25 pose ingestion, validity rules and body-part measurement.

A detection is 25 joints in the BODY-25 layout, each an (u, v, confidence)
triple.  A joint counts as detected when its confidence exceeds a small
threshold; pose exporters emit exact zeros for joints they never saw.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .geometry import Point2

N_JOINTS = 25

# BODY-25 indices
NOSE = 0
NECK = 1
MID_HIP = 8

# Ankles, big/small toes and heels: any of these anchors a person to the
# ground.
FOOT_JOINTS = (11, 14, 19, 20, 21, 22, 23, 24)

# Joints that sit on the vertical midline of an upright body; eyes and
# ears are deliberately excluded because they swing sideways when the head
# turns.
MIDLINE_JOINTS = (NOSE, NECK, MID_HIP)

# Limb chains measured as polylines.  The ankle-to-toe segment is left out
# of the legs: it lies flat on the ground and would not contribute to the
# vertical-plane length the metric reference relies on.
ARM_CHAINS = ((2, 3, 4), (5, 6, 7))
LEG_CHAINS = ((9, 10, 11), (12, 13, 14))
TORSO_CHAIN = (NECK, MID_HIP)

MIN_VALID_JOINTS = 13
DEFAULT_CONFIDENCE_MIN = 0.05

MEASURABLE_PARTS = ("torso", "leg", "arm")
PARTS = MEASURABLE_PARTS + ("bbox",)


class PoseFileError(ValueError):
    """A pose export does not match the expected schema."""


@dataclass(frozen=True)
class BoundingBox:
    u_min: float
    v_min: float
    u_max: float
    v_max: float

    def __post_init__(self) -> None:
        if self.u_min > self.u_max or self.v_min > self.v_max:
            raise ValueError(f"inverted bounding box {self}")

    @property
    def center_u(self) -> float:
        return (self.u_min + self.u_max) / 2.0

    @property
    def height(self) -> float:
        return self.v_max - self.v_min


@dataclass(frozen=True)
class PoseDetection:
    """One person's 25 keypoints for one frame."""

    frame_id: int
    person_index: int
    joints: np.ndarray  # (25, 3) float array of (u, v, confidence)

    def __post_init__(self) -> None:
        joints = np.asarray(self.joints, dtype=float)
        if joints.shape != (N_JOINTS, 3):
            raise PoseFileError(
                f"frame {self.frame_id} person {self.person_index}: "
                f"expected {N_JOINTS} joints, got shape {joints.shape}"
            )
        conf = joints[:, 2]
        if np.any(conf < 0) or np.any(conf > 1) or not np.all(np.isfinite(conf)):
            raise PoseFileError(
                f"frame {self.frame_id} person {self.person_index}: "
                "confidences must lie in [0, 1]"
            )
        detected = conf > 0
        coords = joints[detected, :2]
        if coords.size and (not np.all(np.isfinite(coords)) or np.any(coords < 0)):
            raise PoseFileError(
                f"frame {self.frame_id} person {self.person_index}: "
                "detected joints must have finite, non-negative coordinates"
            )
        joints.setflags(write=False)
        object.__setattr__(self, "joints", joints)

    @classmethod
    def from_flat(cls, frame_id: int, person_index: int, flat) -> "PoseDetection":
        values = list(flat)
        if len(values) != N_JOINTS * 3:
            raise PoseFileError(
                f"frame {frame_id} person {person_index}: keypoint array must "
                f"have {N_JOINTS * 3} values, got {len(values)}"
            )
        joints = np.array(values, dtype=float).reshape(N_JOINTS, 3)
        return cls(frame_id=frame_id, person_index=person_index, joints=joints)

    def flat(self) -> list[float]:
        return [float(x) for x in self.joints.ravel()]

    def detected(self, c_min: float = DEFAULT_CONFIDENCE_MIN) -> np.ndarray:
        """Boolean mask of joints whose confidence exceeds c_min."""
        return self.joints[:, 2] > c_min


@dataclass(frozen=True)
class LocalizedPerson:
    """A valid detection reduced to its ground contact point."""

    ground_point: Point2
    detection: PoseDetection
    bbox: BoundingBox
    part_lengths: dict = field(default_factory=dict)

    @property
    def person_index(self) -> int:
        return self.detection.person_index


@dataclass(frozen=True)
class FramePoses:
    frame_id: int
    people: tuple[PoseDetection, ...]


def is_valid(det: PoseDetection, c_min: float = DEFAULT_CONFIDENCE_MIN) -> bool:
    """A detection is usable when it has enough joints and touches ground."""
    mask = det.detected(c_min)
    if int(mask.sum()) < MIN_VALID_JOINTS:
        return False
    return bool(mask[list(FOOT_JOINTS)].any())


def joint_bbox(det: PoseDetection, c_min: float = DEFAULT_CONFIDENCE_MIN) -> BoundingBox:
    mask = det.detected(c_min)
    if not mask.any():
        raise PoseFileError(
            f"frame {det.frame_id} person {det.person_index}: no detected joints"
        )
    pts = det.joints[mask, :2]
    return BoundingBox(
        u_min=float(pts[:, 0].min()),
        v_min=float(pts[:, 1].min()),
        u_max=float(pts[:, 0].max()),
        v_max=float(pts[:, 1].max()),
    )


def localize(det: PoseDetection, c_min: float = DEFAULT_CONFIDENCE_MIN) -> LocalizedPerson:
    """Ground-contact pixel for a valid detection.

    The vertical coordinate is the mean over detected foot joints; the
    horizontal coordinate is the mean over detected midline joints, falling
    back to the bounding-box center when none of those are visible.
    """
    if not is_valid(det, c_min):
        raise ValueError(
            f"frame {det.frame_id} person {det.person_index}: "
            "cannot localize an invalid detection"
        )
    mask = det.detected(c_min)
    foot_idx = [j for j in FOOT_JOINTS if mask[j]]
    v = float(det.joints[foot_idx, 1].mean())
    bbox = joint_bbox(det, c_min)
    mid_idx = [j for j in MIDLINE_JOINTS if mask[j]]
    u = float(det.joints[mid_idx, 0].mean()) if mid_idx else bbox.center_u
    lengths = {}
    for part in MEASURABLE_PARTS:
        length = measure_part(det, part, c_min)
        if length is not None:
            lengths[part] = length
    lengths["bbox"] = bbox.height
    return LocalizedPerson(
        ground_point=Point2(u, v), detection=det, bbox=bbox, part_lengths=lengths
    )


def _polyline_length(det: PoseDetection, chain, mask) -> float | None:
    if not all(mask[j] for j in chain):
        return None
    pts = det.joints[list(chain), :2]
    return float(np.linalg.norm(np.diff(pts, axis=0), axis=1).sum())


def measure_part(
    det: PoseDetection, part: str, c_min: float = DEFAULT_CONFIDENCE_MIN
) -> float | None:
    """Pixel length of a body part, or None when it cannot be measured.

    Limbs are measured per side and averaged when both sides are fully
    detected; a single complete side is used as-is.
    """
    mask = det.detected(c_min)
    if part == "torso":
        return _polyline_length(det, TORSO_CHAIN, mask)
    if part == "arm":
        chains = ARM_CHAINS
    elif part == "leg":
        chains = LEG_CHAINS
    else:
        raise ValueError(f"unknown body part {part!r}")
    lengths = [l for c in chains if (l := _polyline_length(det, c, mask)) is not None]
    if not lengths:
        return None
    return float(np.mean(lengths))


def bbox_height(det: PoseDetection, c_min: float = DEFAULT_CONFIDENCE_MIN) -> float:
    """Vertical extent of the joint bounding box (pixels)."""
    if not is_valid(det, c_min):
        raise ValueError(
            f"frame {det.frame_id} person {det.person_index}: "
            "bbox height requires a valid detection"
        )
    return joint_bbox(det, c_min).height


def reference_pixel_length(
    det: PoseDetection, part: str, c_min: float = DEFAULT_CONFIDENCE_MIN
) -> float | None:
    """Pixel length used for metric inference, for any supported part."""
    if part == "bbox":
        try:
            height = bbox_height(det, c_min)
        except ValueError:
            return None
        return height if height > 0 else None
    length = measure_part(det, part, c_min)
    if length is not None and length <= 0:
        return None
    return length


# ---------------------------------------------------------------------------
# Pose file I/O.  One JSON document per sequence:
#   {"frames": [{"frame_id": 0, "people": [{"keypoints": [u, v, c] * 25}]}]}


def parse_pose_data(data, source: str = "<memory>") -> list[FramePoses]:
    if not isinstance(data, dict) or "frames" not in data:
        raise PoseFileError(f"{source}: top-level object must contain 'frames'")
    frames = []
    for i, frame in enumerate(data["frames"]):
        if not isinstance(frame, dict) or "frame_id" not in frame:
            raise PoseFileError(f"{source}: frame record {i} is missing 'frame_id'")
        frame_id = frame["frame_id"]
        if not isinstance(frame_id, int):
            raise PoseFileError(f"{source}: frame record {i} has non-integer frame_id")
        people = []
        for person_index, person in enumerate(frame.get("people", [])):
            if not isinstance(person, dict) or "keypoints" not in person:
                raise PoseFileError(
                    f"{source}: frame {frame_id} person {person_index} "
                    "is missing 'keypoints'"
                )
            try:
                det = PoseDetection.from_flat(frame_id, person_index, person["keypoints"])
            except (PoseFileError, TypeError, ValueError) as exc:
                raise PoseFileError(f"{source}: {exc}") from exc
            people.append(det)
        frames.append(FramePoses(frame_id=frame_id, people=tuple(people)))
    return frames


def parse_pose_file(path) -> list[FramePoses]:
    path = Path(path)
    try:
        with open(path) as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise PoseFileError(f"{path}: invalid JSON ({exc})") from exc
    return parse_pose_data(data, source=str(path))


def serialize_pose_frames(frames) -> dict:
    return {
        "frames": [
            {
                "frame_id": frame.frame_id,
                "people": [{"keypoints": det.flat()} for det in frame.people],
            }
            for frame in frames
        ]
    }


def write_pose_file(frames, path) -> None:
    with open(path, "w") as fh:
        json.dump(serialize_pose_frames(frames), fh)
        fh.write("\n")
