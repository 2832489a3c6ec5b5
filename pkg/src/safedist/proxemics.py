"""Per-person safe discs, pairwise violations and display ellipses.

Each person gets a circular safe space in the BEV domain.  The disc radius
is calibrated per person: a body part of known average metric length gives
pixels-per-meter at that person's image location, and a horizontal image
offset of that many pixels is pushed through the rectifying homography
(horizontal ground lines stay horizontal in the image, so the offset stays
on the ground plane).  Two people violate the distancing rule when their
discs overlap, which with a half-threshold radius is the same as their
estimated distance falling below the threshold.

The Y-scale of the BEV domain is assumed equal to the measured X-scale;
that anisotropy is the dominant approximation error of the construction
and is bounded by the synthetic-scene tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import Homography, Point2, PointAtInfinityError
from .pose import (
    DEFAULT_CONFIDENCE_MIN,
    FramePoses,
    LocalizedPerson,
    PoseDetection,
    is_valid,
    localize,
)

DEFAULT_RADIUS_M = 1.0  # half the 2 m rule: discs overlap <=> distance < 2 m
DEFAULT_BEV_BOUND_FACTOR = 10.0
DEFAULT_ELLIPSE_POINTS = 64

# Average metric lengths (meters) for each supported reference part.
DEFAULT_PART_LENGTHS_M = {
    "torso": 0.60,
    "leg": 0.85,
    "arm": 0.70,
    "bbox": 1.70,
}


@dataclass(frozen=True)
class MetricReference:
    """A body part paired with its assumed average metric length."""

    part: str
    length_m: float

    def __post_init__(self) -> None:
        if self.part not in DEFAULT_PART_LENGTHS_M:
            raise ValueError(f"unknown reference part {self.part!r}")
        if not self.length_m > 0:
            raise ValueError(f"length_m must be > 0, got {self.length_m}")

    @classmethod
    def default(cls, part: str) -> "MetricReference":
        return cls(part=part, length_m=DEFAULT_PART_LENGTHS_M[part])


@dataclass(frozen=True)
class SafeDisc:
    """A person's ground-plane safe space in the BEV domain."""

    person_index: int
    ground_point: Point2
    bev_center: Point2
    bev_radius: float
    px_per_m_image: float
    px_per_m_bev: float
    reliable: bool


@dataclass(frozen=True)
class ViolationRecord:
    """Outcome for one unordered pair of people in one frame.

    ``bev_gap`` is the BEV center distance minus the radii sum, so a
    negative gap means the discs overlap.  Ground points of both people are
    carried along for display and heatmap accumulation.
    """

    frame_id: int
    person_a: int
    person_b: int
    bev_gap: float
    est_distance_m: float
    violation: bool
    ground_point_a: Point2
    ground_point_b: Point2


def build_safe_disc(
    person: LocalizedPerson,
    homography: Homography,
    ref: MetricReference,
    radius_m: float = DEFAULT_RADIUS_M,
    bev_bound_factor: float = DEFAULT_BEV_BOUND_FACTOR,
    image_size: tuple[int, int] | None = None,
) -> SafeDisc | None:
    """Safe disc for one localized person, or None when unmeasurable.

    Returns None when the reference part could not be measured.  A disc is
    flagged unreliable when its BEV center lands outside ``bev_bound_factor``
    times the image extent (people at or beyond the horizon, where the
    rectification blows up), or when the radius calibration fails.
    """
    if radius_m <= 0:
        raise ValueError(f"radius_m must be > 0, got {radius_m}")
    length_px = person.part_lengths.get(ref.part)
    if length_px is None or length_px <= 0:
        return None
    px_per_m_image = length_px / ref.length_m

    inv = homography.inverse()
    gp = person.ground_point
    try:
        center = inv.apply(gp)
        offset = inv.apply((gp.u + radius_m * px_per_m_image, gp.v))
    except PointAtInfinityError:
        return SafeDisc(
            person_index=person.person_index,
            ground_point=gp,
            bev_center=Point2(math.inf, math.inf),
            bev_radius=math.inf,
            px_per_m_image=px_per_m_image,
            px_per_m_bev=math.inf,
            reliable=False,
        )
    radius = math.hypot(offset.u - center.u, offset.v - center.v)

    reliable = math.isfinite(radius) and radius > 0
    if image_size is not None:
        w, h = image_size
        reliable = reliable and (
            abs(center.u) <= bev_bound_factor * w and abs(center.v) <= bev_bound_factor * h
        )
    return SafeDisc(
        person_index=person.person_index,
        ground_point=gp,
        bev_center=center,
        bev_radius=radius,
        px_per_m_image=px_per_m_image,
        px_per_m_bev=radius / radius_m,
        reliable=reliable,
    )


def detect_violations(discs, frame_id: int) -> list[ViolationRecord]:
    """Pairwise records for every unordered pair of reliable discs.

    Records are emitted for all pairs, violating or not; callers filter on
    the flag.  The estimated distance converts the BEV center distance back
    to meters with the mean of the two per-person BEV scales.
    """
    usable = [d for d in discs if d.reliable]
    records = []
    for i in range(len(usable)):
        for j in range(i + 1, len(usable)):
            a, b = usable[i], usable[j]
            dist = math.hypot(
                a.bev_center.u - b.bev_center.u, a.bev_center.v - b.bev_center.v
            )
            gap = dist - (a.bev_radius + b.bev_radius)
            scale = (a.px_per_m_bev + b.px_per_m_bev) / 2.0
            records.append(
                ViolationRecord(
                    frame_id=frame_id,
                    person_a=a.person_index,
                    person_b=b.person_index,
                    bev_gap=gap,
                    est_distance_m=dist / scale,
                    violation=gap < 0,
                    ground_point_a=a.ground_point,
                    ground_point_b=b.ground_point,
                )
            )
    return records


def pairwise_distances(discs) -> np.ndarray:
    """Symmetric matrix of estimated metric distances between discs."""
    n = len(discs)
    out = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            a, b = discs[i], discs[j]
            dist = math.hypot(
                a.bev_center.u - b.bev_center.u, a.bev_center.v - b.bev_center.v
            )
            scale = (a.px_per_m_bev + b.px_per_m_bev) / 2.0
            out[i, j] = out[j, i] = dist / scale
    return out


def ellipse_polyline(
    disc: SafeDisc, homography: Homography, n_points: int = DEFAULT_ELLIPSE_POINTS
) -> list[Point2]:
    """Image-plane outline of a disc: the BEV circle pushed through H.

    Returns ``n_points`` vertices of a closed polyline (the last vertex
    connects back to the first).
    """
    if n_points < 8:
        raise ValueError(f"n_points must be >= 8, got {n_points}")
    angles = np.linspace(0.0, 2.0 * math.pi, n_points, endpoint=False)
    circle = np.column_stack(
        [
            disc.bev_center.u + disc.bev_radius * np.cos(angles),
            disc.bev_center.v + disc.bev_radius * np.sin(angles),
        ]
    )
    mapped = homography.apply_many(circle)
    if not np.all(np.isfinite(mapped)):
        raise PointAtInfinityError(
            f"disc of person {disc.person_index} crosses the horizon"
        )
    return [Point2(float(u), float(v)) for u, v in mapped]


@dataclass(frozen=True)
class PersonResult:
    person_index: int
    valid: bool
    detection: "PoseDetection"
    localized: LocalizedPerson | None
    disc: SafeDisc | None
    violating: bool


@dataclass(frozen=True)
class FrameAnalysis:
    frame_id: int
    people: tuple[PersonResult, ...]
    records: tuple[ViolationRecord, ...]


def analyze_frame(
    frame: FramePoses,
    homography: Homography,
    ref: MetricReference,
    radius_m: float = DEFAULT_RADIUS_M,
    c_min: float = DEFAULT_CONFIDENCE_MIN,
    image_size: tuple[int, int] | None = None,
) -> FrameAnalysis:
    """Run localization, disc construction and violation detection."""
    localized: dict[int, LocalizedPerson] = {}
    discs: dict[int, SafeDisc] = {}
    for det in frame.people:
        if not is_valid(det, c_min):
            continue
        person = localize(det, c_min)
        localized[det.person_index] = person
        disc = build_safe_disc(
            person, homography, ref, radius_m=radius_m, image_size=image_size
        )
        if disc is not None:
            discs[det.person_index] = disc
    records = detect_violations(list(discs.values()), frame.frame_id)
    violating = set()
    for rec in records:
        if rec.violation:
            violating.update((rec.person_a, rec.person_b))
    people = tuple(
        PersonResult(
            person_index=det.person_index,
            valid=det.person_index in localized,
            detection=det,
            localized=localized.get(det.person_index),
            disc=discs.get(det.person_index),
            violating=det.person_index in violating,
        )
        for det in frame.people
    )
    return FrameAnalysis(frame_id=frame.frame_id, people=people, records=tuple(records))


def overlay_payload(
    analysis: FrameAnalysis,
    homography: Homography,
    n_ellipse_points: int = DEFAULT_ELLIPSE_POINTS,
    include_keypoints: bool = True,
) -> dict:
    """Overlay geometry for display clients.

    Schema: {"frame_id", "people": [{"ground_point", "ellipse", "violating",
    ...}], "pairs": [{"a", "b", "est_distance_m", "violation"}]}.  Keypoints
    are included so clients can draw skeletons without the source image.
    """
    people = []
    for person in analysis.people:
        entry: dict = {
            "person_index": person.person_index,
            "valid": person.valid,
            "violating": person.violating,
            "ground_point": None,
            "ellipse": None,
        }
        if person.localized is not None:
            gp = person.localized.ground_point
            entry["ground_point"] = [gp.u, gp.v]
        if person.disc is not None and person.disc.reliable:
            try:
                ring = ellipse_polyline(person.disc, homography, n_ellipse_points)
                entry["ellipse"] = [[p.u, p.v] for p in ring]
            except PointAtInfinityError:
                entry["ellipse"] = None
        if include_keypoints:
            entry["keypoints"] = [
                [float(u), float(v), float(c)] for u, v, c in person.detection.joints
            ]
        people.append(entry)
    pairs = [
        {
            "a": rec.person_a,
            "b": rec.person_b,
            "est_distance_m": rec.est_distance_m,
            "violation": rec.violation,
        }
        for rec in analysis.records
    ]
    return {"frame_id": analysis.frame_id, "people": people, "pairs": pairs}
