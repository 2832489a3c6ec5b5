"""HTTP service for interactive ratio tuning.

Wraps a loaded sequence (poses, optional groundtruth, optional frame
images) behind a small JSON API.  All GET endpoints are pure functions of
the session state and the query; the only mutation is POST /params, which
commits the current ratio choice and appends it to the tuning log.  The
log is the artifact from which per-subject tuning statistics are computed
offline.
"""

from __future__ import annotations

import threading
import time
from dataclasses import dataclass, field
from pathlib import Path

from fastapi import FastAPI, HTTPException
from fastapi.responses import FileResponse
from pydantic import BaseModel, Field

from .config import Settings
from .evaluation import (
    GroundTruthDistances,
    PreparedSequence,
    evaluate_sequence,
    prepare_sequence,
)
from .geometry import DegenerateGeometryError, HomographySpec, homography_from_spec
from .pose import FramePoses, parse_pose_file
from .proxemics import analyze_frame, overlay_payload
from . import __version__

_FRAME_SUFFIXES = (".png", ".jpg", ".jpeg")


class ParamsRequest(BaseModel):
    rho_h: float = Field(gt=0.0, le=1.0)
    rho_v: float = Field(gt=0.0, le=1.0)
    part: str | None = None


class LogEntry(BaseModel):
    timestamp: float
    rho_h: float
    rho_v: float
    part: str


class LogResponse(BaseModel):
    entries: list[LogEntry]


class SessionState(BaseModel):
    version: str
    n_frames: int
    frame_ids: list[int]
    image_size: tuple[int, int]
    rho_h: float
    rho_v: float
    part: str
    radius_m: float
    threshold_m: float
    has_groundtruth: bool
    has_frames: bool
    homography: list[float]
    log_length: int


class OverlayPerson(BaseModel):
    person_index: int
    valid: bool
    violating: bool
    ground_point: list[float] | None
    ellipse: list[list[float]] | None
    keypoints: list[list[float]]


class OverlayPair(BaseModel):
    a: int
    b: int
    est_distance_m: float
    violation: bool


class OverlayResponse(BaseModel):
    frame_id: int
    people: list[OverlayPerson]
    pairs: list[OverlayPair]


class MetricsResponse(BaseModel):
    rho_h: float
    rho_v: float
    part: str
    precision: float
    recall: float
    f1: float
    tp: int
    fp: int
    fn: int


@dataclass
class Session:
    """Mutable tuning session; POST /params is the only writer."""

    frames: list[FramePoses]
    image_size: tuple[int, int]
    groundtruth: GroundTruthDistances | None = None
    frames_dir: Path | None = None
    settings: Settings = field(default_factory=Settings)
    rho_h: float = 1.0
    rho_v: float = 1.0
    part: str = "torso"
    log: list[LogEntry] = field(default_factory=list)

    def __post_init__(self) -> None:
        self._lock = threading.Lock()
        self._frame_index = {f.frame_id: f for f in self.frames}
        self._prepared: PreparedSequence | None = None

    @property
    def prepared(self) -> PreparedSequence:
        if self._prepared is None:
            assert self.groundtruth is not None
            self._prepared = prepare_sequence(
                self.frames, self.groundtruth, self.image_size, self.settings.c_min
            )
        return self._prepared

    def frame(self, frame_id: int) -> FramePoses:
        try:
            return self._frame_index[frame_id]
        except KeyError:
            raise HTTPException(status_code=404, detail=f"no frame {frame_id}") from None

    def commit_params(self, req: ParamsRequest) -> LogEntry:
        with self._lock:
            self.rho_h = req.rho_h
            self.rho_v = req.rho_v
            if req.part is not None:
                self.part = req.part
            entry = LogEntry(
                timestamp=time.time(), rho_h=self.rho_h, rho_v=self.rho_v, part=self.part
            )
            self.log.append(entry)
            return entry

    def frame_image_path(self, frame_id: int) -> Path | None:
        if self.frames_dir is None:
            return None
        for pattern in (str(frame_id), f"{frame_id:06d}"):
            for suffix in _FRAME_SUFFIXES:
                candidate = self.frames_dir / f"{pattern}{suffix}"
                if candidate.exists():
                    return candidate
        return None


def load_session(
    poses_path,
    image_size: tuple[int, int],
    groundtruth_path=None,
    frames_dir=None,
    settings: Settings | None = None,
) -> Session:
    from .evaluation import load_groundtruth

    frames = parse_pose_file(poses_path)
    groundtruth = load_groundtruth(groundtruth_path) if groundtruth_path else None
    return Session(
        frames=frames,
        image_size=image_size,
        groundtruth=groundtruth,
        frames_dir=Path(frames_dir) if frames_dir else None,
        settings=settings or Settings(),
    )


def _spec_or_400(session: Session, rho_h: float | None, rho_v: float | None) -> HomographySpec:
    rh = session.rho_h if rho_h is None else rho_h
    rv = session.rho_v if rho_v is None else rho_v
    try:
        return HomographySpec(rho_h=rh, rho_v=rv, image_size=session.image_size)
    except DegenerateGeometryError as exc:
        raise HTTPException(status_code=400, detail=str(exc)) from None


def _part_or_400(session: Session, part: str | None) -> str:
    name = session.part if part is None else part
    try:
        session.settings.reference(name)
    except ValueError as exc:
        raise HTTPException(status_code=400, detail=str(exc)) from None
    return name


def create_app(session: Session, ui_dir=None) -> FastAPI:
    app = FastAPI(title="safedist tuner", version=__version__)

    @app.get("/session", response_model=SessionState)
    def get_session() -> SessionState:
        spec = HomographySpec(
            rho_h=session.rho_h, rho_v=session.rho_v, image_size=session.image_size
        )
        return SessionState(
            version=__version__,
            n_frames=len(session.frames),
            frame_ids=[f.frame_id for f in session.frames],
            image_size=session.image_size,
            rho_h=session.rho_h,
            rho_v=session.rho_v,
            part=session.part,
            radius_m=session.settings.radius_m,
            threshold_m=session.settings.threshold_m,
            has_groundtruth=session.groundtruth is not None,
            has_frames=session.frames_dir is not None,
            homography=homography_from_spec(spec).as_flat(),
            log_length=len(session.log),
        )

    @app.get("/frames/{frame_id}")
    def get_frame(frame_id: int):
        session.frame(frame_id)  # 404 on unknown frame ids
        path = session.frame_image_path(frame_id)
        if path is None:
            raise HTTPException(status_code=404, detail="no frame images in this session")
        return FileResponse(path)

    @app.get("/overlay", response_model=OverlayResponse)
    def get_overlay(
        frame: int,
        rho_h: float | None = None,
        rho_v: float | None = None,
        part: str | None = None,
    ) -> OverlayResponse:
        frame_poses = session.frame(frame)
        spec = _spec_or_400(session, rho_h, rho_v)
        part_name = _part_or_400(session, part)
        homography = homography_from_spec(spec)
        analysis = analyze_frame(
            frame_poses,
            homography,
            session.settings.reference(part_name),
            radius_m=session.settings.radius_m,
            c_min=session.settings.c_min,
            image_size=session.image_size,
        )
        return OverlayResponse(**overlay_payload(analysis, homography))

    @app.get("/metrics", response_model=MetricsResponse)
    def get_metrics(
        rho_h: float | None = None,
        rho_v: float | None = None,
        part: str | None = None,
    ) -> MetricsResponse:
        if session.groundtruth is None:
            raise HTTPException(status_code=400, detail="session has no groundtruth")
        spec = _spec_or_400(session, rho_h, rho_v)
        part_name = _part_or_400(session, part)
        result = evaluate_sequence(
            session.prepared,
            spec,
            session.settings.reference(part_name),
            radius_m=session.settings.radius_m,
            threshold_m=session.settings.threshold_m,
        )
        return MetricsResponse(
            rho_h=spec.rho_h,
            rho_v=spec.rho_v,
            part=part_name,
            precision=result.metrics.precision,
            recall=result.metrics.recall,
            f1=result.metrics.f1,
            tp=result.tp,
            fp=result.fp,
            fn=result.fn,
        )

    @app.post("/params", response_model=SessionState)
    def post_params(req: ParamsRequest) -> SessionState:
        _part_or_400(session, req.part)
        _spec_or_400(session, req.rho_h, req.rho_v)
        session.commit_params(req)
        return get_session()

    @app.get("/log", response_model=LogResponse)
    def get_log() -> LogResponse:
        return LogResponse(entries=list(session.log))

    if ui_dir is not None and Path(ui_dir).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/ui", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app
