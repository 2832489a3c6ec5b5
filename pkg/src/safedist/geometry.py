"""Projective geometry: pinhole camera, trapezoid ratios, homographies.

Conventions used throughout the package:

* Image frame: origin at the top-left corner, ``u`` grows rightward,
  ``v`` grows downward, units are pixels.
* Bird's-eye-view (BEV) frame: a rectified top-down domain using the same
  pixel convention; the BEV canvas has the same pixel dimensions as the
  image it rectifies (bottom of the canvas = near field).
* World frame (pinhole model only): origin on the ground where the camera
  principal axis meets it, X to the right, Y away from the camera along
  the viewing direction, Z up, units are meters.

The camera is assumed to have zero roll and pan, square pixels and zero
skew: its pose is fully described by a height above the ground and a tilt
angle below the horizontal.  Under these assumptions ground lines parallel
to X stay horizontal in the image, and a ground rectangle images as an
isosceles trapezoid, which is what makes the two-ratio parameterization
work.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

W_TOLERANCE = 1e-12  # homogeneous scale below this counts as infinity
_DET_TOLERANCE = 1e-12
_H33_TOLERANCE = 1e-9


class GeometryError(ValueError):
    """Base class for geometric failures."""


class DegenerateGeometryError(GeometryError):
    """Configuration does not define a valid projective map."""


class PointAtInfinityError(GeometryError):
    """A mapped point has a vanishing homogeneous scale."""


class FieldOfViewError(GeometryError):
    """A required ground region does not project inside the image."""


class Point2(NamedTuple):
    u: float
    v: float


@dataclass(frozen=True)
class CameraModel:
    """Pinhole camera with zero roll/pan, described by tilt and height.

    ``tilt_rad`` is measured downward from the horizontal and must lie in
    (0, pi/2).  Intrinsics are ``diag(f, f, 1)`` with the principal point.
    """

    focal_px: float
    principal_point: tuple[float, float]
    height_m: float
    tilt_rad: float
    image_size: tuple[int, int]

    def __post_init__(self) -> None:
        if not self.focal_px > 0:
            raise DegenerateGeometryError(f"focal_px must be > 0, got {self.focal_px}")
        if not self.height_m > 0:
            raise DegenerateGeometryError(f"height_m must be > 0, got {self.height_m}")
        if not 0 < self.tilt_rad < math.pi / 2:
            raise DegenerateGeometryError(
                f"tilt_rad must be in (0, pi/2), got {self.tilt_rad}"
            )
        w, h = self.image_size
        if w <= 0 or h <= 0:
            raise DegenerateGeometryError(f"invalid image_size {self.image_size}")

    @property
    def intrinsics(self) -> np.ndarray:
        f = self.focal_px
        u0, v0 = self.principal_point
        return np.array([[f, 0.0, u0], [0.0, f, v0], [0.0, 0.0, 1.0]])

    @property
    def rotation(self) -> np.ndarray:
        """World-to-camera rotation (camera x right, y down, z forward)."""
        s, c = math.sin(self.tilt_rad), math.cos(self.tilt_rad)
        return np.array([[1.0, 0.0, 0.0], [0.0, -s, -c], [0.0, c, -s]])

    @property
    def center_world(self) -> np.ndarray:
        """Camera center in world coordinates (meters)."""
        return np.array([0.0, -self.height_m / math.tan(self.tilt_rad), self.height_m])


def ground_homography(cam: CameraModel) -> np.ndarray:
    """Raw 3x3 map from ground-plane meters to image pixels.

    Built as K [r1 r2 t] with t = -R C.  The matrix is intentionally not
    rescaled so the third homogeneous coordinate equals the camera-frame
    depth of the point.
    """
    R = cam.rotation
    t = -R @ cam.center_world
    return cam.intrinsics @ np.column_stack([R[:, 0], R[:, 1], t])


def project_point(cam: CameraModel, point_xyz: Sequence[float]) -> Point2:
    """Project a 3D world point (meters) to pixel coordinates."""
    p = np.asarray(point_xyz, dtype=float)
    cam_xyz = cam.rotation @ (p - cam.center_world)
    depth = cam_xyz[2]
    if depth <= W_TOLERANCE:
        raise PointAtInfinityError(
            f"point {tuple(point_xyz)} is behind the camera or at the horizon"
        )
    img = cam.intrinsics @ cam_xyz
    return Point2(img[0] / depth, img[1] / depth)


def project_ground_point(cam: CameraModel, point_xy: Sequence[float]) -> Point2:
    """Project a ground-plane point (X, Y) in meters to pixels."""
    x, y = point_xy
    return project_point(cam, (x, y, 0.0))


def ground_point_from_pixel(cam: CameraModel, pixel: Sequence[float]) -> tuple[float, float]:
    """Back-project a pixel to the ground plane (meters).

    Raises if the pixel lies on or above the horizon.
    """
    hg = ground_homography(cam)
    g = np.linalg.inv(hg) @ np.array([pixel[0], pixel[1], 1.0])
    if abs(g[2]) < W_TOLERANCE:
        raise PointAtInfinityError(f"pixel {tuple(pixel)} is at the horizon")
    x, y = g[0] / g[2], g[1] / g[2]
    # reject pixels whose ground point falls behind the camera
    if (hg @ np.array([x, y, 1.0]))[2] <= 0:
        raise PointAtInfinityError(f"pixel {tuple(pixel)} maps behind the camera")
    return x, y


@dataclass(frozen=True)
class HomographySpec:
    """The two trapezoid ratios plus the image size they apply to.

    ``rho_h`` is the ratio of the trapezoid's short (far) base to its long
    (near) base; ``rho_v`` is the trapezoid height as a fraction of the
    image height.  Both must lie in (0, 1]; zero would collapse the
    trapezoid into a triangle or a line.
    """

    rho_h: float
    rho_v: float
    image_size: tuple[int, int]

    def __post_init__(self) -> None:
        if not 0.0 < self.rho_h <= 1.0:
            raise DegenerateGeometryError(f"rho_h must be in (0, 1], got {self.rho_h}")
        if not 0.0 < self.rho_v <= 1.0:
            raise DegenerateGeometryError(f"rho_v must be in (0, 1], got {self.rho_v}")
        w, h = self.image_size
        if w <= 0 or h <= 0:
            raise DegenerateGeometryError(f"invalid image_size {self.image_size}")


def trapezoid_corners(spec: HomographySpec) -> tuple[tuple[Point2, ...], tuple[Point2, ...]]:
    """Corner correspondences (image, bev), ordered BL, BR, TL, TR.

    The BEV rectangle is the full image rectangle; its top edge maps onto
    the trapezoid's short base, centered horizontally.
    """
    w, h = spec.image_size
    top_v = h - spec.rho_v * h
    half = spec.rho_h * w / 2.0
    image = (
        Point2(0.0, float(h)),
        Point2(float(w), float(h)),
        Point2(w / 2.0 - half, top_v),
        Point2(w / 2.0 + half, top_v),
    )
    bev = (
        Point2(0.0, float(h)),
        Point2(float(w), float(h)),
        Point2(0.0, 0.0),
        Point2(float(w), 0.0),
    )
    return image, bev


def _normalize_matrix(m: np.ndarray) -> np.ndarray:
    if abs(m[2, 2]) > _H33_TOLERANCE:
        return m / m[2, 2]
    return m / np.linalg.norm(m)


class Homography:
    """A 3x3 projective map defined up to scale.

    The stored matrix is normalized (bottom-right entry 1 when nonzero,
    unit Frobenius norm otherwise) and frozen.  ``direction`` records which
    way the map goes, e.g. ``"bev_to_image"``.
    """

    __slots__ = ("matrix", "direction", "_inverse")

    def __init__(self, matrix, direction: str = "bev_to_image") -> None:
        m = np.array(matrix, dtype=float).reshape(3, 3)
        if not np.all(np.isfinite(m)):
            raise DegenerateGeometryError("homography matrix contains non-finite entries")
        m = _normalize_matrix(m)
        if abs(np.linalg.det(m)) <= _DET_TOLERANCE:
            raise DegenerateGeometryError("homography matrix is singular")
        m.setflags(write=False)
        self.matrix = m
        self.direction = direction
        self._inverse: Homography | None = None

    def __repr__(self) -> str:
        return f"Homography(direction={self.direction!r}, matrix={self.matrix.tolist()!r})"

    def apply(self, point: Sequence[float]) -> Point2:
        q = self.matrix @ np.array([point[0], point[1], 1.0])
        if abs(q[2]) < W_TOLERANCE:
            raise PointAtInfinityError(f"point {tuple(point)} maps to infinity")
        return Point2(q[0] / q[2], q[1] / q[2])

    def apply_many(self, points: np.ndarray) -> np.ndarray:
        """Map an (n, 2) array of points; rows mapping to infinity become NaN."""
        pts = np.asarray(points, dtype=float)
        ones = np.ones((pts.shape[0], 1))
        q = np.hstack([pts, ones]) @ self.matrix.T
        w = q[:, 2]
        out = np.full((pts.shape[0], 2), np.nan)
        ok = np.abs(w) >= W_TOLERANCE
        out[ok] = q[ok, :2] / w[ok, None]
        return out

    def inverse(self) -> "Homography":
        if self._inverse is None:
            flipped = {"bev_to_image": "image_to_bev", "image_to_bev": "bev_to_image"}
            inv = Homography(
                np.linalg.inv(self.matrix),
                direction=flipped.get(self.direction, f"inverse_of_{self.direction}"),
            )
            inv._inverse = self
            self._inverse = inv
        return self._inverse

    def as_flat(self) -> list[float]:
        """Row-major 9-number serialization."""
        return [float(x) for x in self.matrix.ravel()]


def apply(h: Homography, point: Sequence[float]) -> Point2:
    return h.apply(point)


def invert(h: Homography) -> Homography:
    return h.inverse()


def _hartley_transform(pts: np.ndarray) -> np.ndarray:
    centroid = pts.mean(axis=0)
    rms = math.sqrt(float(((pts - centroid) ** 2).sum(axis=1).mean()))
    if rms < 1e-12:
        raise DegenerateGeometryError("coincident points in homography estimation")
    s = math.sqrt(2.0) / rms
    return np.array(
        [[s, 0.0, -s * centroid[0]], [0.0, s, -s * centroid[1]], [0.0, 0.0, 1.0]]
    )


def dlt_homography(src: Sequence[Sequence[float]], dst: Sequence[Sequence[float]]) -> np.ndarray:
    """Estimate the homography mapping src -> dst by the normalized DLT.

    Both point sets are translated/scaled to centroid zero and RMS radius
    sqrt(2) before building the linear system; the solution is the
    null-space vector of the 2n x 9 design matrix.
    """
    src_a = np.asarray(src, dtype=float)
    dst_a = np.asarray(dst, dtype=float)
    if src_a.shape != dst_a.shape or src_a.ndim != 2 or src_a.shape[0] < 4:
        raise DegenerateGeometryError("need at least 4 matching point pairs")
    t_src = _hartley_transform(src_a)
    t_dst = _hartley_transform(dst_a)
    ones = np.ones((src_a.shape[0], 1))
    sn = np.hstack([src_a, ones]) @ t_src.T
    dn = np.hstack([dst_a, ones]) @ t_dst.T
    rows = []
    for (x, y, _), (u, v, _) in zip(sn, dn):
        rows.append([-x, -y, -1.0, 0.0, 0.0, 0.0, u * x, u * y, u])
        rows.append([0.0, 0.0, 0.0, -x, -y, -1.0, v * x, v * y, v])
    a = np.array(rows)
    _, singular, vt = np.linalg.svd(a)
    # a second vanishing singular value means the solution is not unique
    # (three or more collinear corners)
    if singular[-2] < 1e-10 * singular[0]:
        raise DegenerateGeometryError("degenerate correspondences (collinear points)")
    hn = vt[-1].reshape(3, 3)
    return np.linalg.inv(t_dst) @ hn @ t_src


def homography_from_spec(spec: HomographySpec) -> Homography:
    """BEV-to-image homography mapping the BEV rectangle onto the trapezoid."""
    image, bev = trapezoid_corners(spec)
    return Homography(dlt_homography(bev, image), direction="bev_to_image")


def ratios_from_camera(cam: CameraModel, coverage: float | None = None) -> tuple[float, float]:
    """Trapezoid ratios equivalent to a known camera.

    The ratios are anchored at the image bottom edge: the BEV rectangle is
    made to correspond to the ground rectangle whose near edge is imaged as
    the bottom row of pixels and whose far edge is imaged ``coverage`` of
    the image height above it.  With that anchoring the two-ratio
    homography agrees with the true camera map everywhere (up to the
    ground-to-BEV affine change of units).

    ``coverage`` defaults to the value that makes the BEV scale isotropic
    (the same pixels-per-meter along X and Y), which also makes BEV
    distances proportional to true ground distances.  For typical
    surveillance geometries the resulting calibration square spans well
    over a quarter of the image height.

    The exactness guarantee assumes a horizontally centered principal
    point, matching the isosceles trapezoid model.
    """
    w_img, h_img = cam.image_size
    u0, v0 = cam.principal_point
    s, c = math.sin(cam.tilt_rad), math.cos(cam.tilt_rad)
    if coverage is None:
        coverage = (cam.focal_px * s + (h_img - v0) * c) / (cam.focal_px + h_img * c)
    if not 0.0 < coverage < 1.0:
        raise DegenerateGeometryError(f"coverage must be in (0, 1), got {coverage}")

    hg = ground_homography(cam)
    _, y_near = ground_point_from_pixel(cam, (u0, float(h_img)))
    v_far = (1.0 - coverage) * h_img
    _, y_far = ground_point_from_pixel(cam, (u0, v_far))
    if y_far <= y_near:
        raise DegenerateGeometryError("calibration window collapsed; check tilt/coverage")

    side = y_far - y_near
    for gx in (-side / 2.0, side / 2.0):
        for gy in (y_near, y_far):
            px = project_ground_point(cam, (gx, gy))
            if not (-1e-6 <= px.u <= w_img + 1e-6 and -1e-6 <= px.v <= h_img + 1e-6):
                raise FieldOfViewError(
                    f"calibration square corner ({gx:.2f}, {gy:.2f}) projects "
                    f"outside the image at ({px.u:.1f}, {px.v:.1f})"
                )

    w_near = (hg @ np.array([0.0, y_near, 1.0]))[2]
    w_far = (hg @ np.array([0.0, y_far, 1.0]))[2]
    return float(w_near / w_far), float(coverage)


def ratios_from_square_at_origin(cam: CameraModel, side_m: float) -> tuple[float, float]:
    """Trapezoid ratios read off a ground square touching the world origin.

    The square spans [0, side] x [0, side] meters with its near edge
    passing through the principal-axis ground point.  The returned ratios
    depend only on the tilt angle, camera height and square side, never on
    the focal length: rho_h = far-edge width / near-edge width and
    rho_v = height / near-edge width of the projected trapezoid.
    """
    if side_m <= 0:
        raise DegenerateGeometryError(f"side_m must be > 0, got {side_m}")
    w_img, h_img = cam.image_size
    corners = {
        "o": (0.0, 0.0),
        "x": (side_m, 0.0),
        "y": (0.0, side_m),
        "xy": (side_m, side_m),
    }
    px = {}
    for name, ground in corners.items():
        p = project_ground_point(cam, ground)
        if not (-1e-6 <= p.u <= w_img + 1e-6 and -1e-6 <= p.v <= h_img + 1e-6):
            raise FieldOfViewError(
                f"square corner {ground} projects outside the image at ({p.u:.1f}, {p.v:.1f})"
            )
        px[name] = np.array(p)
    near = np.linalg.norm(px["x"] - px["o"])
    far = np.linalg.norm(px["xy"] - px["y"])
    height = np.linalg.norm(px["y"] - px["o"])
    if near < W_TOLERANCE:
        raise DegenerateGeometryError("projected square has zero near edge")
    return float(far / near), float(height / near)
