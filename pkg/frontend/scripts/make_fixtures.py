"""Regenerate the frontend test fixtures from the backend.

Builds a small deterministic synthetic session, captures one /overlay and
one /metrics response, and runs the CLI evaluation at the same parameters
so the frontend tests can assert display consistency against real backend
output.  Run from the repository root:

    python frontend/scripts/make_fixtures.py
"""

import json
from pathlib import Path

from fastapi.testclient import TestClient

from safedist.cli import main as cli_main
from safedist.config import Settings
from safedist.geometry import CameraModel
from safedist.service import Session, create_app
from safedist.synth import SceneConfig, generate, write_bundle

FIXTURES = Path(__file__).resolve().parent.parent / "tests" / "fixtures"
RHO_H, RHO_V = 0.7, 0.4


def build() -> None:
    camera = CameraModel(
        focal_px=1100.0,
        principal_point=(320.0, 240.0),
        height_m=8.0,
        tilt_rad=0.2617993877991494,
        image_size=(640, 480),
    )
    bundle = generate(
        SceneConfig(camera=camera, n_people=5, area=(-4.5, 4.5, -4.0, 6.0), seed=11),
        20,
    )
    session = Session(
        frames=bundle.frames,
        image_size=camera.image_size,
        groundtruth=bundle.groundtruth,
        settings=Settings(),
    )
    client = TestClient(create_app(session))
    FIXTURES.mkdir(parents=True, exist_ok=True)

    overlay = client.get(
        "/overlay", params={"frame": 0, "rho_h": RHO_H, "rho_v": RHO_V}
    ).json()
    metrics = client.get("/metrics", params={"rho_h": RHO_H, "rho_v": RHO_V}).json()
    state = client.get("/session").json()

    work = FIXTURES / "_work"
    paths = write_bundle(bundle, work / "bundle")
    code = cli_main(
        [
            "evaluate",
            "--poses", str(paths["poses"]),
            "--gt", str(paths["groundtruth"]),
            "--camera", str(paths["camera"]),
            "--rho-h", str(RHO_H),
            "--rho-v", str(RHO_V),
            "--out-dir", str(work / "report"),
        ]
    )
    assert code == 0
    report = json.loads((work / "report" / "report.json").read_text())

    (FIXTURES / "overlay_response.json").write_text(json.dumps(overlay, indent=1))
    (FIXTURES / "metrics_response.json").write_text(json.dumps(metrics, indent=1))
    (FIXTURES / "session_state.json").write_text(json.dumps(state, indent=1))
    (FIXTURES / "cli_report.json").write_text(json.dumps(report, indent=1))
    import shutil

    shutil.rmtree(work)
    print(f"fixtures written to {FIXTURES}")
    print(f"  metrics f1 = {metrics['f1']!r}, cli f1 = {report['metrics']['f1']!r}")


if __name__ == "__main__":
    build()
