import numpy as np
import pytest

from litterbot.defaults import default_model
from litterbot.geometry import Pose, rotvec_from_matrix
from litterbot.kinematics import (
    ChainModel,
    Joint,
    PRISMATIC,
    REVOLUTE,
    UnknownFrame,
    forward_kinematics,
    jacobian,
)

MODEL = default_model()


def finite_difference_jacobian(model, q, frame="end_effector", h=1e-6):
    """Central-difference oracle for the analytic Jacobian."""
    J = np.zeros((6, model.n))
    for i in range(model.n):
        qp, qm = np.array(q, dtype=float), np.array(q, dtype=float)
        qp[i] += h
        qm[i] -= h
        fp = forward_kinematics(model, qp, frame)
        fm = forward_kinematics(model, qm, frame)
        J[:3, i] = (fp.translation - fm.translation) / (2 * h)
        J[3:, i] = rotvec_from_matrix(fp.rotation @ fm.rotation.T) / (2 * h)
    return J


def random_feasible(model, rng):
    return model.lower + rng.random(model.n) * (model.upper - model.lower)


class TestForwardKinematics:
    def test_zero_configuration_matches_fixed_transforms(self):
        # product of the fixed origins with all joint motions at zero:
        # x = 0.15 + 0.30 + 0.25 + 0.07 + 0.05 + 0.08, z = 0.05 + 0.06
        p = forward_kinematics(MODEL, np.zeros(8))
        assert np.abs(p.translation - np.array([0.90, 0.0, 0.11])).max() < 1e-12
        assert np.abs(p.rotation - np.eye(3)).max() < 1e-12

    def test_height_joint_is_pure_z(self):
        rng = np.random.default_rng(0)
        q = random_feasible(MODEL, rng)
        q2 = q.copy()
        q2[0] += 0.05
        p1 = forward_kinematics(MODEL, q)
        p2 = forward_kinematics(MODEL, q2)
        assert np.abs(p2.translation - p1.translation - np.array([0, 0, 0.05])).max() < 1e-12
        assert np.abs(p2.rotation - p1.rotation).max() < 1e-15

    def test_pitch_rotates_zero_config_about_base_y(self):
        q = np.zeros(8)
        q[1] = np.pi / 2
        p = forward_kinematics(MODEL, q)
        c, s = np.cos(np.pi / 2), np.sin(np.pi / 2)
        Ry = np.array([[c, 0, s], [0, 1, 0], [-s, 0, c]])
        assert np.abs(p.translation - Ry @ np.array([0.90, 0.0, 0.11])).max() < 1e-12
        assert np.abs(p.rotation - Ry).max() < 1e-12

    def test_unknown_frame(self):
        with pytest.raises(UnknownFrame):
            forward_kinematics(MODEL, np.zeros(8), "elbow_pad")
        with pytest.raises(UnknownFrame):
            jacobian(MODEL, np.zeros(8), 99)

    def test_camera_frame_moves_with_base_only(self):
        rng = np.random.default_rng(1)
        q = random_feasible(MODEL, rng)
        q2 = q.copy()
        q2[2:] = random_feasible(MODEL, rng)[2:]
        c1 = forward_kinematics(MODEL, q, "camera")
        c2 = forward_kinematics(MODEL, q2, "camera")
        assert np.abs(c1.translation - c2.translation).max() < 1e-12


class TestJacobian:
    def test_height_column_constant(self):
        rng = np.random.default_rng(2)
        for _ in range(10):
            J = jacobian(MODEL, random_feasible(MODEL, rng))
            assert np.abs(J[:, 0] - np.array([0, 0, 1, 0, 0, 0])).max() < 1e-12

    def test_matches_finite_differences(self):
        rng = np.random.default_rng(3)
        for _ in range(25):
            q = random_feasible(MODEL, rng)
            J = jacobian(MODEL, q)
            Jfd = finite_difference_jacobian(MODEL, q)
            rel = np.abs(J - Jfd) / np.maximum(1.0, np.abs(J))
            assert rel.max() < 1e-5

    def test_camera_jacobian_matches_finite_differences(self):
        rng = np.random.default_rng(4)
        q = random_feasible(MODEL, rng)
        J = jacobian(MODEL, q, "camera")
        Jfd = finite_difference_jacobian(MODEL, q, "camera")
        assert np.abs(J - Jfd).max() < 1e-5
        assert np.abs(J[:, 2:]).max() == 0.0

    def test_pitch_column_vanishes_when_ee_on_pitch_axis(self):
        # chain whose end-effector sits on the pitch axis at q = 0: the
        # offset is parallel to the axis, so the lever arm is zero
        model = ChainModel(
            joints=(
                Joint("lift", PRISMATIC, (0, 0, 1), Pose.identity(), 0.0, 1.0, 1.0),
                Joint("pitch", REVOLUTE, (0, 1, 0), Pose.identity(), -1.0, 1.0, 1.0),
            ),
            ee_offset=Pose(np.eye(3), np.array([0.0, 0.2, 0.0])),
            camera_parent=0,
        )
        J = jacobian(model, np.array([0.5, 0.0]))
        assert np.abs(J[:3, 1]).max() < 1e-15
        assert np.abs(J[3:, 1] - np.array([0, 1, 0])).max() < 1e-15


class TestModelContract:
    def test_default_model_shape(self):
        assert MODEL.n == 8
        assert MODEL.joints[0].kind == PRISMATIC
        assert all(j.kind == REVOLUTE for j in MODEL.joints[1:])
        assert np.all(MODEL.lower < MODEL.upper)
        for j in MODEL.joints:
            assert abs(np.linalg.norm(j.axis) - 1.0) < 1e-9

    def test_limit_validation(self):
        with pytest.raises(ValueError):
            Joint("bad", REVOLUTE, (0, 0, 1), Pose.identity(), 1.0, -1.0, 1.0)
        with pytest.raises(ValueError):
            Joint("bad", REVOLUTE, (0, 0, 2), Pose.identity(), -1.0, 1.0, 1.0)

    def test_json_round_trip(self, tmp_path):
        path = tmp_path / "model.json"
        MODEL.save(path)
        loaded = ChainModel.load(path)
        rng = np.random.default_rng(5)
        q = random_feasible(MODEL, rng)
        a = forward_kinematics(MODEL, q)
        b = forward_kinematics(loaded, q)
        assert np.abs(a.translation - b.translation).max() < 1e-12
        assert np.abs(a.rotation - b.rotation).max() < 1e-9
        assert loaded.joints[0].name == "base_height"

    def test_position_continuity_bound(self):
        # displacement is bounded by (sum of link lengths + 1) * |dq|_1:
        # each joint moves downstream points along an arc of radius at most
        # the remaining chain length
        lengths = sum(np.linalg.norm(j.origin.translation) for j in MODEL.joints)
        L = lengths + np.linalg.norm(MODEL.ee_offset.translation) + 1.0
        rng = np.random.default_rng(6)
        for _ in range(100):
            qa = random_feasible(MODEL, rng)
            qb = random_feasible(MODEL, rng)
            da = forward_kinematics(MODEL, qa).translation
            db = forward_kinematics(MODEL, qb).translation
            assert np.linalg.norm(da - db) <= L * np.abs(qa - qb).sum() + 1e-12
