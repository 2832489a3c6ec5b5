import json

import numpy as np
import pytest

from safedist.pose import (
    FOOT_JOINTS,
    MIDLINE_JOINTS,
    N_JOINTS,
    FramePoses,
    PoseDetection,
    PoseFileError,
    bbox_height,
    is_valid,
    joint_bbox,
    localize,
    measure_part,
    parse_pose_data,
    parse_pose_file,
    serialize_pose_frames,
    write_pose_file,
)


def make_detection(joints, frame_id=0, person_index=0):
    """Detection from a {joint_index: (u, v)} dict; listed joints confident."""
    array = np.zeros((N_JOINTS, 3))
    for idx, (u, v) in joints.items():
        array[idx] = (u, v, 1.0)
    return PoseDetection(frame_id=frame_id, person_index=person_index, joints=array)


def full_detection(origin=(100.0, 100.0)):
    """All 25 joints confident, laid out on a grid."""
    u0, v0 = origin
    array = np.zeros((N_JOINTS, 3))
    for i in range(N_JOINTS):
        array[i] = (u0 + 3.0 * i, v0 + 10.0 * i, 0.9)
    return PoseDetection(frame_id=0, person_index=0, joints=array)


class TestValidity:
    def test_fully_detected_person_is_valid(self):
        assert is_valid(full_detection())

    def test_thirteen_joints_without_feet_is_invalid(self):
        non_foot = [j for j in range(N_JOINTS) if j not in FOOT_JOINTS][:13]
        det = make_detection({j: (50.0 + j, 60.0 + j) for j in non_foot})
        assert not is_valid(det)

    def test_twelve_joints_with_ankle_is_invalid(self):
        chosen = [11] + [j for j in range(8)] + [15, 16, 17]  # 12 joints, one ankle
        assert len(chosen) == 12
        det = make_detection({j: (50.0, 60.0) for j in chosen})
        assert not is_valid(det)

    def test_thirteen_joints_with_foot_is_valid(self):
        chosen = [11] + [j for j in range(10)] + [15, 16]
        assert len(chosen) == 13
        det = make_detection({j: (50.0, 60.0) for j in chosen})
        assert is_valid(det)

    def test_confidence_threshold_controls_detectedness(self):
        array = np.zeros((N_JOINTS, 3))
        array[:, :2] = 10.0
        array[:, 2] = 0.04  # below the default threshold
        det = PoseDetection(frame_id=0, person_index=0, joints=array)
        assert not is_valid(det)
        assert is_valid(det, c_min=0.01)

    def test_validity_is_monotone_in_detected_joints(self):
        rng = np.random.default_rng(2)
        for _ in range(100):
            mask = rng.random(N_JOINTS) < 0.5
            base = make_detection(
                {j: (10.0 + j, 20.0 + j) for j in range(N_JOINTS) if mask[j]}
            )
            extra = list(np.flatnonzero(~mask))
            if not extra:
                continue
            add = rng.choice(extra)
            grown = make_detection(
                {j: (10.0 + j, 20.0 + j) for j in range(N_JOINTS) if mask[j] or j == add}
            )
            if is_valid(base):
                assert is_valid(grown)


class TestLocalize:
    def test_feet_mean_and_midline_mean(self):
        det = make_detection(
            {
                1: (300.0, 200.0),  # neck
                11: (295.0, 400.0),  # ankle
                14: (305.0, 402.0),  # ankle
                **{j: (300.0, 250.0) for j in (2, 3, 4, 5, 6, 7, 8, 9, 10, 12, 13)},
            }
        )
        person = localize(det)
        assert person.ground_point.v == pytest.approx(401.0)
        # midline mean over neck (300) and mid-hip (300)
        assert person.ground_point.u == pytest.approx(300.0)

    def test_bbox_center_fallback_when_no_midline(self):
        joints = {j: (100.0 + j, 300.0) for j in (2, 3, 4, 5, 6, 7, 9, 10, 12, 13, 15, 16)}
        joints[11] = (140.0, 400.0)
        det = make_detection(joints)
        assert not any(det.detected()[list(MIDLINE_JOINTS)])
        person = localize(det)
        bbox = joint_bbox(det)
        assert person.ground_point.u == pytest.approx((bbox.u_min + bbox.u_max) / 2.0)

    def test_localize_rejects_invalid_detection(self):
        det = make_detection({1: (10.0, 10.0)})
        with pytest.raises(ValueError):
            localize(det)

    def test_translation_equivariance(self):
        rng = np.random.default_rng(9)
        det = full_detection()
        person = localize(det)
        for _ in range(10):
            du, dv = rng.uniform(1, 50, size=2)
            shifted_joints = np.array(det.joints)
            shifted_joints[:, 0] += du
            shifted_joints[:, 1] += dv
            shifted = PoseDetection(frame_id=0, person_index=0, joints=shifted_joints)
            moved = localize(shifted)
            assert moved.ground_point.u == pytest.approx(person.ground_point.u + du)
            assert moved.ground_point.v == pytest.approx(person.ground_point.v + dv)

    def test_ground_point_not_above_bbox_top(self):
        det = full_detection()
        person = localize(det)
        assert person.ground_point.v >= person.bbox.v_min


class TestMeasurePart:
    def test_torso_is_neck_to_midhip_distance(self):
        det = make_detection({1: (100.0, 100.0), 8: (100.0, 160.0)})
        assert measure_part(det, "torso") == pytest.approx(60.0)

    def test_torso_absent_without_both_joints(self):
        assert measure_part(make_detection({1: (1.0, 1.0)}), "torso") is None
        assert measure_part(make_detection({8: (1.0, 1.0)}), "torso") is None

    def test_single_complete_leg_used_alone(self):
        det = make_detection({12: (10.0, 0.0), 13: (10.0, 40.0), 14: (10.0, 90.0)})
        assert measure_part(det, "leg") == pytest.approx(90.0)

    def test_both_legs_averaged(self):
        det = make_detection(
            {
                9: (0.0, 0.0), 10: (0.0, 50.0), 11: (0.0, 100.0),
                12: (5.0, 0.0), 13: (5.0, 40.0), 14: (5.0, 90.0),
            }
        )
        assert measure_part(det, "leg") == pytest.approx((100.0 + 90.0) / 2.0)

    def test_arm_polyline(self):
        det = make_detection({2: (0.0, 0.0), 3: (30.0, 40.0), 4: (30.0, 90.0)})
        assert measure_part(det, "arm") == pytest.approx(50.0 + 50.0)

    def test_incomplete_chain_is_absent(self):
        det = make_detection({2: (0.0, 0.0), 3: (30.0, 40.0)})
        assert measure_part(det, "arm") is None

    def test_rigid_motion_invariance(self):
        rng = np.random.default_rng(4)
        det = full_detection()
        base = measure_part(det, "leg")
        for _ in range(10):
            angle = rng.uniform(0, 2 * np.pi)
            rot = np.array(
                [[np.cos(angle), -np.sin(angle)], [np.sin(angle), np.cos(angle)]]
            )
            moved_joints = np.array(det.joints)
            moved_joints[:, :2] = moved_joints[:, :2] @ rot.T
            moved_joints[:, :2] -= moved_joints[:, :2].min(axis=0)  # keep coords >= 0
            moved = PoseDetection(frame_id=0, person_index=0, joints=moved_joints)
            assert measure_part(moved, "leg") == pytest.approx(base)

    def test_unknown_part_rejected(self):
        with pytest.raises(ValueError):
            measure_part(full_detection(), "hand")


class TestBboxHeight:
    def test_vertical_span(self):
        joints = {j: (100.0, 50.0) for j in range(13)}
        joints[11] = (100.0, 390.0)
        det = make_detection(joints)
        assert bbox_height(det) == pytest.approx(340.0)

    def test_single_row_degenerates_to_zero(self):
        joints = {j: (100.0 + j, 200.0) for j in range(13)}
        joints[11] = (150.0, 200.0)
        det = make_detection(joints)
        assert bbox_height(det) == 0.0

    def test_requires_valid_detection(self):
        with pytest.raises(ValueError):
            bbox_height(make_detection({1: (1.0, 1.0)}))


class TestPoseFile:
    def test_single_person_parses(self, tmp_path):
        det = full_detection()
        path = tmp_path / "poses.json"
        write_pose_file([FramePoses(frame_id=0, people=(det,))], path)
        frames = parse_pose_file(path)
        assert len(frames) == 1
        assert frames[0].frame_id == 0
        assert len(frames[0].people) == 1
        assert int(frames[0].people[0].detected().sum()) == N_JOINTS

    def test_wrong_keypoint_count_rejected(self):
        data = {"frames": [{"frame_id": 0, "people": [{"keypoints": [0.0] * 72}]}]}
        with pytest.raises(PoseFileError, match="person 0"):
            parse_pose_data(data)

    def test_error_names_frame_and_person(self):
        bad = {"frames": [{"frame_id": 7, "people": [{"keypoints": [0.0] * 74}]}]}
        with pytest.raises(PoseFileError, match="frame 7 person 0"):
            parse_pose_data(bad)

    def test_missing_frame_id_rejected(self):
        with pytest.raises(PoseFileError):
            parse_pose_data({"frames": [{"people": []}]})

    def test_confidence_out_of_range_rejected(self):
        flat = [1.0, 1.0, 2.0] * N_JOINTS
        with pytest.raises(PoseFileError, match="confidences"):
            parse_pose_data({"frames": [{"frame_id": 0, "people": [{"keypoints": flat}]}]})

    def test_negative_detected_coordinate_rejected(self):
        flat = [0.0] * (N_JOINTS * 3)
        flat[0], flat[1], flat[2] = -5.0, 10.0, 0.9
        with pytest.raises(PoseFileError, match="non-negative"):
            parse_pose_data({"frames": [{"frame_id": 0, "people": [{"keypoints": flat}]}]})

    def test_round_trip_preserves_every_value_exactly(self, tmp_path):
        rng = np.random.default_rng(17)
        frames = []
        for frame_id in range(3):
            people = []
            for person_index in range(4):
                joints = np.column_stack(
                    [
                        rng.uniform(0, 640, N_JOINTS),
                        rng.uniform(0, 480, N_JOINTS),
                        rng.uniform(0, 1, N_JOINTS),
                    ]
                )
                people.append(
                    PoseDetection(
                        frame_id=frame_id, person_index=person_index, joints=joints
                    )
                )
            frames.append(FramePoses(frame_id=frame_id, people=tuple(people)))
        path = tmp_path / "poses.json"
        write_pose_file(frames, path)
        parsed = parse_pose_file(path)
        for original, loaded in zip(frames, parsed):
            assert original.frame_id == loaded.frame_id
            for det_a, det_b in zip(original.people, loaded.people):
                assert np.array_equal(det_a.joints, det_b.joints)
        # serializing again is byte-identical
        first = json.dumps(serialize_pose_frames(frames))
        second = json.dumps(serialize_pose_frames(parsed))
        assert first == second

    def test_invalid_json_reports_path(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{not json")
        with pytest.raises(PoseFileError, match="broken.json"):
            parse_pose_file(path)
