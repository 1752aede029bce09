import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from litterbot.geometry import (
    BehindCamera,
    Intrinsics,
    InvalidDepth,
    OutOfImage,
    Pose,
    back_project,
    compose,
    inverse,
    matrix_from_quat,
    matrix_from_rotvec,
    project,
    quat_from_matrix,
    rotvec_from_matrix,
    transform_point,
)

K = Intrinsics(fx=100.0, fy=100.0, cx=50.0, cy=50.0, width=200, height=100)


def random_pose(rng):
    q = rng.standard_normal(4)
    return Pose.from_quat(q / np.linalg.norm(q), rng.standard_normal(3))


class TestBackProject:
    def test_principal_point_is_optical_axis(self):
        p = back_project(50.0, 50.0, 1.0, K)
        assert np.allclose(p, [0.0, 0.0, 1.0])

    def test_hand_computed_point(self):
        # X = (150 - 50) * 2 / 100 = 2, Y = 0, Z = 2
        p = back_project(150.0, 50.0, 2.0, K)
        assert np.allclose(p, [2.0, 0.0, 2.0])

    def test_zero_depth_rejected(self):
        with pytest.raises(InvalidDepth):
            back_project(50.0, 50.0, 0.0, K)

    def test_out_of_image_rejected(self):
        with pytest.raises(OutOfImage):
            back_project(250.0, 50.0, 1.0, K)
        with pytest.raises(OutOfImage):
            back_project(50.0, -1.0, 1.0, K)


class TestProject:
    def test_optical_axis_hits_principal_point(self):
        u, v, z = project([0.0, 0.0, 1.0], K)
        assert (u, v, z) == (50.0, 50.0, 1.0)

    def test_inverse_of_back_project_example(self):
        u, v, z = project([2.0, 0.0, 2.0], K)
        assert np.allclose([u, v, z], [150.0, 50.0, 2.0])

    def test_behind_camera_rejected(self):
        with pytest.raises(BehindCamera):
            project([0.0, 0.0, -1.0], K)
        with pytest.raises(BehindCamera):
            project([1.0, 1.0, 0.0], K)

    def test_round_trip_1000_points(self):
        rng = np.random.default_rng(7)
        for _ in range(1000):
            u = rng.uniform(0, K.width)
            v = rng.uniform(0, K.height)
            z = rng.uniform(0.1, 10.0)
            p = back_project(u, v, z, K)
            u2, v2, z2 = project(p, K)
            assert abs(u2 - u) < 1e-9 and abs(v2 - v) < 1e-9 and abs(z2 - z) < 1e-9
            assert np.abs(back_project(u2, v2, z2, K) - p).max() < 1e-9


class TestPose:
    def test_identity_transform(self):
        assert np.allclose(transform_point(Pose.identity(), [1, 2, 3]), [1, 2, 3])

    def test_90_degree_yaw(self):
        p = Pose.from_axis_angle([0, 0, 1], np.pi / 2)
        assert np.abs(transform_point(p, [1, 0, 0]) - np.array([0, 1, 0])).max() < 1e-12

    def test_inverse_round_trip_100_random(self):
        rng = np.random.default_rng(3)
        for _ in range(100):
            p = random_pose(rng)
            x = rng.standard_normal(3)
            assert np.abs(transform_point(inverse(p), transform_point(p, x)) - x).max() < 1e-9
            ident = compose(p, inverse(p))
            assert np.abs(ident.rotation - np.eye(3)).max() < 1e-9
            assert np.abs(ident.translation).max() < 1e-9

    def test_rotation_determinant_is_one(self):
        rng = np.random.default_rng(11)
        for _ in range(200):
            p = random_pose(rng)
            assert abs(np.linalg.det(p.rotation) - 1.0) < 1e-9

    def test_compose_associative(self):
        rng = np.random.default_rng(5)
        for _ in range(100):
            a, b, c = (random_pose(rng) for _ in range(3))
            left = compose(compose(a, b), c)
            right = compose(a, compose(b, c))
            assert np.abs(left.rotation - right.rotation).max() < 1e-9
            assert np.abs(left.translation - right.translation).max() < 1e-9

    @given(
        st.tuples(*[st.floats(-1, 1) for _ in range(4)]).filter(
            lambda q: sum(x * x for x in q) > 1e-4
        )
    )
    def test_quat_matrix_round_trip(self, quat):
        R = matrix_from_quat(quat)
        q2 = quat_from_matrix(R)
        assert np.abs(matrix_from_quat(q2) - R).max() < 1e-9

    def test_pose_dict_round_trip(self):
        rng = np.random.default_rng(9)
        p = random_pose(rng)
        p2 = Pose.from_dict(p.to_dict())
        assert np.abs(p.rotation - p2.rotation).max() < 1e-9
        assert np.abs(p.translation - p2.translation).max() < 1e-12


class TestRotvec:
    def test_round_trip(self):
        rng = np.random.default_rng(13)
        for _ in range(200):
            w = rng.standard_normal(3)
            w = w / np.linalg.norm(w) * rng.uniform(0, np.pi - 1e-6)
            assert np.abs(rotvec_from_matrix(matrix_from_rotvec(w)) - w).max() < 1e-7

    def test_small_angle(self):
        w = np.array([1e-12, -2e-12, 3e-13])
        assert np.abs(rotvec_from_matrix(matrix_from_rotvec(w)) - w).max() < 1e-15

    def test_near_pi(self):
        w = np.array([0.0, 0.0, np.pi - 1e-8])
        back = rotvec_from_matrix(matrix_from_rotvec(w))
        assert np.abs(np.abs(back) - np.abs(w)).max() < 1e-6


class TestIntrinsics:
    def test_validation(self):
        with pytest.raises(ValueError):
            Intrinsics(fx=-1, fy=1, cx=0, cy=0, width=10, height=10)
        with pytest.raises(ValueError):
            Intrinsics(fx=1, fy=1, cx=20, cy=0, width=10, height=10)

    def test_json_round_trip(self, tmp_path):
        path = tmp_path / "k.json"
        K.save(path)
        assert Intrinsics.load(path) == K
