import json
import math

import numpy as np
import pytest

from safedist.geometry import (
    CameraModel,
    HomographySpec,
    homography_from_spec,
    project_point,
)
from safedist.pose import (
    bbox_height,
    is_valid,
    localize,
    measure_part,
    parse_pose_file,
    serialize_pose_frames,
)
from safedist.evaluation import load_groundtruth
from safedist.synth import (
    PersonModel,
    SceneConfig,
    generate,
    joint_template,
    load_camera_sidecar,
    perturb,
    write_bundle,
)

from conftest import ORACLE_AREA, ORACLE_CAMERA


def small_config(camera=None, **overrides):
    camera = camera or CameraModel(**ORACLE_CAMERA)
    base = dict(camera=camera, n_people=4, area=ORACLE_AREA, seed=1)
    base.update(overrides)
    return SceneConfig(**base)


class TestTemplate:
    def test_reference_lengths_are_exact_fractions(self):
        person = PersonModel()
        t = joint_template(person)
        torso = abs(t[1, 1] - t[8, 1])
        leg = abs(t[9, 1] - t[10, 1]) + abs(t[10, 1] - t[11, 1])
        arm = abs(t[2, 1] - t[3, 1]) + abs(t[3, 1] - t[4, 1])
        assert torso == pytest.approx(0.60)
        assert leg == pytest.approx(0.85)
        assert arm == pytest.approx(0.70)
        assert t[0, 1] == pytest.approx(1.70)  # bbox top
        assert all(t[j, 1] == 0.0 for j in (11, 14, 19, 20, 21, 22, 23, 24))

    def test_foot_joints_balance_around_anchor(self):
        t = joint_template(PersonModel())
        feet = t[[11, 14, 19, 20, 21, 22, 23, 24], 0]
        assert feet.sum() == pytest.approx(0.0)


class TestGenerate:
    def test_single_person_has_no_groundtruth_pairs(self):
        bundle = generate(small_config(n_people=1), 5)
        assert bundle.groundtruth.n_pairs() == 0

    def test_groundtruth_is_exact_anchor_distance(self):
        bundle = generate(small_config(), 10)
        for frame_id, anchors in enumerate(bundle.anchors):
            for a, b, dist in bundle.groundtruth.pairs(frame_id):
                expected = float(np.linalg.norm(anchors[a] - anchors[b]))
                assert dist == expected

    def test_determinism_is_bitwise(self, tmp_path):
        config = small_config()
        first = generate(config, 8)
        second = generate(config, 8)
        dir_a, dir_b = tmp_path / "a", tmp_path / "b"
        write_bundle(first, dir_a)
        write_bundle(second, dir_b)
        for name in ("poses.json", "groundtruth.csv", "camera.json"):
            assert (dir_a / name).read_bytes() == (dir_b / name).read_bytes()

    def test_different_seeds_differ(self):
        a = generate(small_config(seed=1), 3)
        b = generate(small_config(seed=2), 3)
        assert not np.array_equal(a.anchors[0], b.anchors[0])

    def test_people_fully_visible(self):
        bundle = generate(small_config(), 20)
        w, h = bundle.config.camera.image_size
        for frame in bundle.frames:
            for det in frame.people:
                coords = det.joints[:, :2]
                assert coords[:, 0].min() >= 0 and coords[:, 0].max() <= w
                assert coords[:, 1].min() >= 0 and coords[:, 1].max() <= h

    def test_unplaceable_scene_raises(self):
        # an area wholly outside the frustum cannot be populated
        config = small_config(area=(200.0, 210.0, 200.0, 210.0), max_retries=20)
        with pytest.raises(ValueError, match="frustum"):
            generate(config, 1)

    def test_noiseless_localization_recovers_anchor_projection(self):
        from safedist.pose import FOOT_JOINTS

        bundle = generate(small_config(), 10)
        cam = bundle.config.camera
        for frame_id, frame in enumerate(bundle.frames):
            for det in frame.people:
                anchor = bundle.anchors[frame_id][det.person_index]
                expected = project_point(cam, (anchor[0], anchor[1], 0.0))
                person = localize(det)
                # feet are on the ground with balanced lateral offsets, so
                # their midpoint recovers the anchor projection exactly
                feet = det.joints[list(FOOT_JOINTS), :2].mean(axis=0)
                assert abs(feet[0] - expected.u) < 1e-6
                assert abs(feet[1] - expected.v) < 1e-6
                assert abs(person.ground_point.v - expected.v) < 1e-6
                # the horizontal estimate comes from elevated midline joints
                # and picks up a small perspective shift off-center
                assert abs(person.ground_point.u - expected.u) < 2.0

    def test_noiseless_part_lengths_match_projection(self):
        # oracle: project the joint heights directly and measure in pixels
        bundle = generate(small_config(), 5)
        cam = bundle.config.camera
        t = joint_template(bundle.config.person)
        for frame_id, frame in enumerate(bundle.frames):
            for det in frame.people:
                x, y = bundle.anchors[frame_id][det.person_index]

                def px(joint):
                    return project_point(cam, (x + t[joint, 0], y, t[joint, 1]))

                neck, hip = px(1), px(8)
                expected_torso = math.hypot(neck.u - hip.u, neck.v - hip.v)
                assert measure_part(det, "torso") == pytest.approx(
                    expected_torso, abs=1e-6
                )
                nose = px(0)
                heel = px(21)
                expected_bbox = heel.v - nose.v
                assert bbox_height(det) == pytest.approx(expected_bbox, abs=1e-6)

    def test_ratio_consistency_along_x(self):
        # ground X distance ratios survive the BEV mapping built from the
        # camera-equivalent ratios
        bundle = generate(small_config(), 1)
        cam = bundle.config.camera
        spec = HomographySpec(
            rho_h=bundle.rho_h, rho_v=bundle.rho_v, image_size=cam.image_size
        )
        inv = homography_from_spec(spec).inverse()
        y = 1.0
        xs = (-2.0, -0.5, 1.0, 3.0)
        bev = [
            inv.apply(project_point(cam, (x, y, 0.0))) for x in xs
        ]
        ground_gaps = np.diff(xs)
        bev_gaps = [math.hypot(b.u - a.u, b.v - a.v) for a, b in zip(bev, bev[1:])]
        for i in range(len(bev_gaps) - 1):
            expected = ground_gaps[i] / ground_gaps[i + 1]
            actual = bev_gaps[i] / bev_gaps[i + 1]
            assert abs(actual - expected) < 0.01 * expected


class TestPerturb:
    def test_zero_noise_is_identity(self):
        bundle = generate(small_config(), 4)
        out = perturb(bundle.frames, 0.0, 0.0, seed=9)
        for a, b in zip(bundle.frames, out):
            for da, db in zip(a.people, b.people):
                assert np.array_equal(da.joints, db.joints)

    def test_full_dropout_invalidates_everyone(self):
        bundle = generate(small_config(), 4)
        out = perturb(bundle.frames, 0.0, 1.0, seed=9)
        for frame in out:
            for det in frame.people:
                assert not det.detected().any()
                assert not is_valid(det)

    def test_fixed_seed_is_deterministic(self):
        bundle = generate(small_config(), 4)
        a = perturb(bundle.frames, 3.0, 0.1, seed=42)
        b = perturb(bundle.frames, 3.0, 0.1, seed=42)
        assert json.dumps(serialize_pose_frames(a)) == json.dumps(serialize_pose_frames(b))

    def test_noise_moves_joints(self):
        bundle = generate(small_config(), 2)
        out = perturb(bundle.frames, 3.0, 0.0, seed=1)
        moved = any(
            not np.array_equal(da.joints[:, :2], db.joints[:, :2])
            for a, b in zip(bundle.frames, out)
            for da, db in zip(a.people, b.people)
        )
        assert moved

    def test_parameters_validated(self):
        bundle = generate(small_config(), 1)
        with pytest.raises(ValueError):
            perturb(bundle.frames, -1.0, 0.0, seed=0)
        with pytest.raises(ValueError):
            perturb(bundle.frames, 0.0, 1.5, seed=0)


class TestBundleIO:
    def test_round_trip_through_files(self, tmp_path):
        bundle = generate(small_config(), 6)
        paths = write_bundle(bundle, tmp_path / "bundle")
        frames = parse_pose_file(paths["poses"])
        assert len(frames) == 6
        for original, loaded in zip(bundle.frames, frames):
            for da, db in zip(original.people, loaded.people):
                assert np.array_equal(da.joints, db.joints)
        gt = load_groundtruth(paths["groundtruth"])
        assert gt.frames == bundle.groundtruth.frames
        cam = load_camera_sidecar(paths["camera"])
        assert cam == bundle.config.camera
        sidecar = json.loads(paths["camera"].read_text())
        assert len(sidecar["homography"]) == 9
        assert sidecar["rho_h"] == bundle.rho_h

    def test_invalid_configs_rejected(self):
        with pytest.raises(ValueError):
            small_config(n_people=-1)
        with pytest.raises(ValueError):
            small_config(area=(3.0, 3.0, 0.0, 1.0))
        with pytest.raises(ValueError):
            small_config(dropout_p=1.5)
        with pytest.raises(ValueError):
            PersonModel(torso_frac=1.2)
