"""Groundtruth ingestion, confusion counting, grid search and heatmaps.

Violation detection is scored as a binary classification problem over
person pairs.  Only pairs present in both the prediction records and the
groundtruth are counted, which disentangles the distance estimation from
pose-detector misses.  Metrics are micro-averaged: counts are pooled over
all frames of a sequence before precision/recall/F1 are computed.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .geometry import HomographySpec, Homography, homography_from_spec
from .pose import (
    DEFAULT_CONFIDENCE_MIN,
    FramePoses,
    is_valid,
    localize,
)
from .proxemics import (
    DEFAULT_BEV_BOUND_FACTOR,
    DEFAULT_PART_LENGTHS_M,
    DEFAULT_RADIUS_M,
    MetricReference,
    ViolationRecord,
)

DEFAULT_THRESHOLD_M = 2.0
GRID_STEP = 0.1


class GroundTruthError(ValueError):
    """A groundtruth file does not match the expected schema."""


class GroundTruthDistances:
    """Per-frame unordered pairwise distances in meters.

    Pairs are stored with person_a < person_b; person indices refer to the
    per-frame ordering of the pose file.
    """

    def __init__(self, frames: dict[int, list[tuple[int, int, float]]] | None = None):
        self.frames: dict[int, list[tuple[int, int, float]]] = {}
        if frames:
            for frame_id, pairs in frames.items():
                for a, b, dist in pairs:
                    self.add(frame_id, a, b, dist)

    def add(self, frame_id: int, person_a: int, person_b: int, distance_m: float) -> None:
        if person_a == person_b:
            raise GroundTruthError(
                f"frame {frame_id}: pair ({person_a}, {person_b}) is not a pair"
            )
        if distance_m < 0 or not math.isfinite(distance_m):
            raise GroundTruthError(
                f"frame {frame_id}: invalid distance {distance_m} for "
                f"pair ({person_a}, {person_b})"
            )
        a, b = sorted((person_a, person_b))
        pairs = self.frames.setdefault(frame_id, [])
        if any(pa == a and pb == b for pa, pb, _ in pairs):
            raise GroundTruthError(f"frame {frame_id}: duplicate pair ({a}, {b})")
        pairs.append((a, b, float(distance_m)))

    def pairs(self, frame_id: int) -> list[tuple[int, int, float]]:
        return self.frames.get(frame_id, [])

    def n_pairs(self) -> int:
        return sum(len(p) for p in self.frames.values())

    def filtered(self, keep) -> "GroundTruthDistances":
        """New groundtruth keeping only pairs where keep(distance) is true."""
        return GroundTruthDistances(
            {
                fid: [(a, b, d) for a, b, d in pairs if keep(d)]
                for fid, pairs in self.frames.items()
            }
        )


def load_groundtruth(path) -> GroundTruthDistances:
    """CSV with header frame_id,person_a,person_b,distance_m."""
    path = Path(path)
    gt = GroundTruthDistances()
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise GroundTruthError(f"{path}: empty file") from None
        expected = ["frame_id", "person_a", "person_b", "distance_m"]
        if [h.strip() for h in header] != expected:
            raise GroundTruthError(
                f"{path}: expected header {','.join(expected)}, got {','.join(header)}"
            )
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 4:
                raise GroundTruthError(f"{path}:{line_no}: expected 4 columns")
            try:
                frame_id, a, b = int(row[0]), int(row[1]), int(row[2])
                dist = float(row[3])
            except ValueError as exc:
                raise GroundTruthError(f"{path}:{line_no}: {exc}") from None
            try:
                gt.add(frame_id, a, b, dist)
            except GroundTruthError as exc:
                raise GroundTruthError(f"{path}:{line_no}: {exc}") from None
    return gt


def write_groundtruth(gt: GroundTruthDistances, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["frame_id", "person_a", "person_b", "distance_m"])
        for frame_id in sorted(gt.frames):
            for a, b, dist in gt.frames[frame_id]:
                writer.writerow([frame_id, a, b, repr(dist)])


@dataclass(frozen=True)
class FrameEvaluation:
    frame_id: int
    tp: int = 0
    fp: int = 0
    fn: int = 0


@dataclass(frozen=True)
class Metrics:
    precision: float
    recall: float
    f1: float


def metrics_from_counts(tp: int, fp: int, fn: int) -> Metrics:
    """Micro-averaged metrics with the all-negative edge convention.

    With no predictions precision is 1, with no positives recall is 1:
    a detector that correctly stays silent on an all-negative sequence is
    not penalized.
    """
    precision = tp / (tp + fp) if tp + fp > 0 else 1.0
    recall = tp / (tp + fn) if tp + fn > 0 else 1.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    return Metrics(precision=precision, recall=recall, f1=f1)


def evaluate_frame(
    predicted: list[ViolationRecord],
    gt_pairs: list[tuple[int, int, float]],
    threshold_m: float = DEFAULT_THRESHOLD_M,
    margin_m: float = 0.0,
    unmatched: str = "skip",
) -> FrameEvaluation:
    """Confusion counts for one frame.

    A pair counts only if it appears in both the prediction records and
    the groundtruth.  Groundtruth-positive means distance strictly below
    the threshold.  ``margin_m`` > 0 additionally excludes pairs whose
    groundtruth distance lies within the margin of the threshold, for
    tolerance-aware benchmarking.  Predicted pairs missing from the
    groundtruth are skipped by default; pass unmatched="error" to fail.
    """
    if unmatched not in ("skip", "error"):
        raise ValueError(f"unmatched must be 'skip' or 'error', got {unmatched!r}")
    gt_map = {(a, b): d for a, b, d in gt_pairs}
    frame_id = predicted[0].frame_id if predicted else -1
    tp = fp = fn = 0
    for rec in predicted:
        key = tuple(sorted((rec.person_a, rec.person_b)))
        if key not in gt_map:
            if unmatched == "error":
                raise GroundTruthError(
                    f"frame {rec.frame_id}: predicted pair {key} has no groundtruth"
                )
            continue
        dist = gt_map[key]
        if margin_m > 0 and abs(dist - threshold_m) <= margin_m:
            continue
        positive = dist < threshold_m
        if rec.violation and positive:
            tp += 1
        elif rec.violation and not positive:
            fp += 1
        elif not rec.violation and positive:
            fn += 1
    return FrameEvaluation(frame_id=frame_id, tp=tp, fp=fp, fn=fn)


def aggregate(evals) -> Metrics:
    """Pool counts over frames, then compute precision/recall/F1."""
    tp = sum(e.tp for e in evals)
    fp = sum(e.fp for e in evals)
    fn = sum(e.fn for e in evals)
    return metrics_from_counts(tp, fp, fn)


# ---------------------------------------------------------------------------
# Vectorized sequence evaluation.  All ratio-independent work (validity,
# localization, part measurement, groundtruth matching) is done once; each
# candidate homography then costs a couple of matrix products.


@dataclass
class PreparedSequence:
    image_size: tuple[int, int]
    ground_points: np.ndarray  # (n_persons, 2) image ground points
    part_lengths: dict[str, np.ndarray]  # part -> (n_persons,) pixels, NaN if absent
    pair_a: np.ndarray  # (n_pairs,) flat person row indices
    pair_b: np.ndarray
    pair_gt: np.ndarray  # (n_pairs,) groundtruth meters
    pair_frame: np.ndarray  # (n_pairs,) frame ids
    n_frames: int = 0
    n_detections: int = 0

    @property
    def n_pairs(self) -> int:
        return int(self.pair_gt.shape[0])


def prepare_sequence(
    frames: list[FramePoses],
    groundtruth: GroundTruthDistances,
    image_size: tuple[int, int],
    c_min: float = DEFAULT_CONFIDENCE_MIN,
) -> PreparedSequence:
    points = []
    lengths: dict[str, list[float]] = {p: [] for p in DEFAULT_PART_LENGTHS_M}
    pair_a, pair_b, pair_gt, pair_frame = [], [], [], []
    n_detections = 0
    for frame in frames:
        slot: dict[int, int] = {}
        n_detections += len(frame.people)
        for det in frame.people:
            if not is_valid(det, c_min):
                continue
            person = localize(det, c_min)
            slot[det.person_index] = len(points)
            points.append(person.ground_point)
            for part in lengths:
                value = person.part_lengths.get(part)
                lengths[part].append(np.nan if value is None or value <= 0 else value)
        for a, b, dist in groundtruth.pairs(frame.frame_id):
            if a in slot and b in slot:
                pair_a.append(slot[a])
                pair_b.append(slot[b])
                pair_gt.append(dist)
                pair_frame.append(frame.frame_id)
    return PreparedSequence(
        image_size=image_size,
        ground_points=np.array(points, dtype=float).reshape(-1, 2),
        part_lengths={p: np.array(v, dtype=float) for p, v in lengths.items()},
        pair_a=np.array(pair_a, dtype=int),
        pair_b=np.array(pair_b, dtype=int),
        pair_gt=np.array(pair_gt, dtype=float),
        pair_frame=np.array(pair_frame, dtype=int),
        n_frames=len(frames),
        n_detections=n_detections,
    )


@dataclass(frozen=True)
class SequenceEvaluation:
    metrics: Metrics
    tp: int
    fp: int
    fn: int
    n_pairs_evaluated: int
    # per evaluated pair, in prepared order:
    pair_gt: np.ndarray
    pair_est: np.ndarray
    pair_frame: np.ndarray
    pair_points_a: np.ndarray  # image ground points, (n, 2)
    pair_points_b: np.ndarray


def evaluate_sequence(
    prepared: PreparedSequence,
    spec_or_h: HomographySpec | Homography,
    ref: MetricReference,
    radius_m: float = DEFAULT_RADIUS_M,
    threshold_m: float = DEFAULT_THRESHOLD_M,
    margin_m: float = 0.0,
    bev_bound_factor: float = DEFAULT_BEV_BOUND_FACTOR,
) -> SequenceEvaluation:
    """Score every groundtruth-matched pair under one homography.

    The evaluation domain is pairs of valid pose detections that also
    appear in the groundtruth: pose-detector misses are excluded, but a
    pair the geometry cannot handle (unreliable or unmeasurable discs)
    simply predicts no violation, so a real violation there counts as
    missed rather than as missing data.  Estimated distances are infinite
    for such pairs.
    """
    h = (
        spec_or_h
        if isinstance(spec_or_h, Homography)
        else homography_from_spec(spec_or_h)
    )
    inv = h.inverse()
    w_img, h_img = prepared.image_size

    gp = prepared.ground_points
    ppm = prepared.part_lengths[ref.part] / ref.length_m
    with np.errstate(invalid="ignore"):
        centers = inv.apply_many(gp)
        offsets = inv.apply_many(
            gp + np.column_stack([radius_m * ppm, np.zeros(len(gp))])
        )
        radii = np.linalg.norm(offsets - centers, axis=1)
        person_ok = (
            np.isfinite(centers).all(axis=1)
            & np.isfinite(radii)
            & (radii > 0)
            & (np.abs(centers[:, 0]) <= bev_bound_factor * w_img)
            & (np.abs(centers[:, 1]) <= bev_bound_factor * h_img)
        )

    ia, ib = prepared.pair_a, prepared.pair_b
    usable = np.ones(ia.shape, dtype=bool)
    if margin_m > 0:
        usable &= np.abs(prepared.pair_gt - threshold_m) > margin_m
    ia, ib = ia[usable], ib[usable]
    gt = prepared.pair_gt[usable]

    pair_ok = person_ok[ia] & person_ok[ib]
    dist = np.zeros(len(gt))
    est = np.full(len(gt), np.inf)
    predicted = np.zeros(len(gt), dtype=bool)
    if pair_ok.any():
        ca, cb = centers[ia[pair_ok]], centers[ib[pair_ok]]
        d = np.linalg.norm(ca - cb, axis=1)
        rsum = radii[ia[pair_ok]] + radii[ib[pair_ok]]
        scale = rsum / (2.0 * radius_m)
        dist[pair_ok] = d
        predicted[pair_ok] = d < rsum
        est[pair_ok] = np.divide(
            d, scale, out=np.full_like(d, np.inf), where=scale > 0
        )

    positive = gt < threshold_m
    tp = int(np.sum(predicted & positive))
    fp = int(np.sum(predicted & ~positive))
    fn = int(np.sum(~predicted & positive))
    return SequenceEvaluation(
        metrics=metrics_from_counts(tp, fp, fn),
        tp=tp,
        fp=fp,
        fn=fn,
        n_pairs_evaluated=int(usable.sum()),
        pair_gt=gt,
        pair_est=est,
        pair_frame=prepared.pair_frame[usable],
        pair_points_a=gp[ia],
        pair_points_b=gp[ib],
    )


def grid_values(step: float = GRID_STEP) -> list[float]:
    """The ratio grid {step, 2*step, ..., 1.0}; zero is degenerate."""
    n = round(1.0 / step)
    return [round((i + 1) * step, 10) for i in range(n)]


@dataclass(frozen=True)
class GridSearchResult:
    rho_h: float
    rho_v: float
    metrics: Metrics
    grid: dict[tuple[float, float], Metrics]
    values: list[float]

    def f1_table(self) -> list[list[float]]:
        """Rows indexed by rho_h, columns by rho_v, in grid order."""
        return [
            [self.grid[(rh, rv)].f1 for rv in self.values] for rh in self.values
        ]


def grid_search(
    prepared: PreparedSequence,
    ref: MetricReference,
    radius_m: float = DEFAULT_RADIUS_M,
    threshold_m: float = DEFAULT_THRESHOLD_M,
    margin_m: float = 0.0,
    step: float = GRID_STEP,
) -> GridSearchResult:
    """Exhaustive F1 search over the ratio grid.

    Ties are broken toward larger rho_h, then larger rho_v (the weaker
    perspective prior), which makes the result deterministic.
    """
    values = grid_values(step)
    grid: dict[tuple[float, float], Metrics] = {}
    best: tuple[float, float, float] | None = None
    for rho_h in values:
        for rho_v in values:
            spec = HomographySpec(rho_h=rho_h, rho_v=rho_v, image_size=prepared.image_size)
            result = evaluate_sequence(
                prepared, spec, ref, radius_m=radius_m,
                threshold_m=threshold_m, margin_m=margin_m,
            )
            grid[(rho_h, rho_v)] = result.metrics
            key = (result.metrics.f1, rho_h, rho_v)
            if best is None or key > best:
                best = key
    assert best is not None
    _, rho_h, rho_v = best
    return GridSearchResult(
        rho_h=rho_h, rho_v=rho_v, metrics=grid[(rho_h, rho_v)], grid=grid, values=values
    )


def ablation_report(
    prepared: PreparedSequence,
    parts: list[MetricReference],
    spec: HomographySpec,
    radius_m: float = DEFAULT_RADIUS_M,
    threshold_m: float = DEFAULT_THRESHOLD_M,
    margin_m: float = 0.0,
) -> dict[str, Metrics]:
    """Metrics per metric-reference choice, with the ratios held fixed."""
    h = homography_from_spec(spec)
    return {
        ref.part: evaluate_sequence(
            prepared, h, ref, radius_m=radius_m,
            threshold_m=threshold_m, margin_m=margin_m,
        ).metrics
        for ref in parts
    }


# ---------------------------------------------------------------------------
# Violation heatmaps.


@dataclass(frozen=True)
class HeatmapResult:
    raw: np.ndarray  # event counts per cell, pre-blur
    smoothed: np.ndarray  # mass-conserving Gaussian blur of raw
    cell_px: int
    image_size: tuple[int, int]

    @property
    def n_events(self) -> int:
        return int(round(float(self.raw.sum())))


def heatmap_accumulate(
    records,
    image_size: tuple[int, int],
    cell_px: int = 8,
    sigma_cells: float = 2.0,
) -> HeatmapResult:
    """Accumulate violating pairs into a smoothed spatial histogram.

    Each violating pair deposits one unit of mass at the grid cell under
    the midpoint of the two image ground points.  Smoothing uses a
    truncated Gaussian kernel renormalized against the grid boundary, so
    total mass is conserved exactly.
    """
    if cell_px < 1:
        raise ValueError(f"cell_px must be >= 1, got {cell_px}")
    if sigma_cells < 0:
        raise ValueError(f"sigma_cells must be >= 0, got {sigma_cells}")
    w_img, h_img = image_size
    n_cols = max(1, math.ceil(w_img / cell_px))
    n_rows = max(1, math.ceil(h_img / cell_px))
    raw = np.zeros((n_rows, n_cols))
    for rec in records:
        if not rec.violation:
            continue
        mid_u = (rec.ground_point_a.u + rec.ground_point_b.u) / 2.0
        mid_v = (rec.ground_point_a.v + rec.ground_point_b.v) / 2.0
        col = min(n_cols - 1, max(0, int(mid_u // cell_px)))
        row = min(n_rows - 1, max(0, int(mid_v // cell_px)))
        raw[row, col] += 1.0

    if sigma_cells == 0:
        smoothed = raw.copy()
    else:
        half = max(1, int(math.ceil(4.0 * sigma_cells)))
        ax = np.arange(-half, half + 1)
        kernel = np.exp(-(ax[:, None] ** 2 + ax[None, :] ** 2) / (2.0 * sigma_cells**2))
        smoothed = np.zeros_like(raw)
        for row, col in zip(*np.nonzero(raw)):
            r0, r1 = max(0, row - half), min(n_rows, row + half + 1)
            c0, c1 = max(0, col - half), min(n_cols, col + half + 1)
            window = kernel[
                r0 - row + half : r1 - row + half, c0 - col + half : c1 - col + half
            ]
            smoothed[r0:r1, c0:c1] += raw[row, col] * window / window.sum()
    return HeatmapResult(
        raw=raw, smoothed=smoothed, cell_px=cell_px, image_size=image_size
    )


def render_heatmap(result: HeatmapResult, background=None):
    """8-bit image of the normalized smoothed grid, at full image size.

    Without a background this is a grayscale intensity map.  With a
    background (a PIL image) the heat is composited on top in red.
    """
    from PIL import Image

    grid = result.smoothed
    peak = grid.max()
    norm = grid / peak if peak > 0 else grid
    levels = (norm * 255.0).round().astype(np.uint8)
    img = Image.fromarray(levels, mode="L").resize(result.image_size, Image.BILINEAR)
    if background is None:
        return img
    base = background.convert("RGB").resize(result.image_size)
    heat = np.zeros((result.image_size[1], result.image_size[0], 3), dtype=np.uint8)
    heat[:, :, 0] = np.asarray(img)
    alpha = (np.asarray(img, dtype=float) / 255.0 * 0.7)[:, :, None]
    blended = (np.asarray(base, dtype=float) * (1 - alpha) + heat * alpha).astype(np.uint8)
    return Image.fromarray(blended, mode="RGB")


def write_heatmap_grid(result: HeatmapResult, path) -> None:
    """Raw (pre-blur) grid as CSV, one row per grid row."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        for row in result.raw:
            writer.writerow([repr(float(x)) for x in row])
