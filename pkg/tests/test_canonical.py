import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from motionloom.canonical import (
    CanonicalFrame,
    DegenerateTangentError,
    canonicalize,
    canonicalize_pose,
    frame_from_pose,
    frame_from_waypoint,
    uncanonicalize,
    uncanonicalize_pose,
)
from motionloom.gait import generate_gait_clip
from motionloom.motion import devectorize_frame, vectorize_frame
from motionloom.rotations import rot_y
from motionloom.skeleton import Skeleton, forward_kinematics, heading


def random_clip(seed, n=8):
    rng = np.random.default_rng(seed)
    speed = float(rng.uniform(0.5, 1.8))
    turn = float(rng.uniform(-0.8, 0.8))
    clip = generate_gait_clip(speed=speed, turn_rate=turn, duration=2.0, seed=seed)
    return clip.to_matrix()[: n * 4 : 4]


def random_frame(seed):
    rng = np.random.default_rng(seed + 991)
    return CanonicalFrame.from_angle(float(rng.uniform(-np.pi, np.pi)), rng.normal(size=2) * 3)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000))
def test_roundtrip(seed):
    mat = random_clip(seed)
    frame = random_frame(seed)
    back = uncanonicalize(canonicalize(mat, frame), frame)
    assert np.max(np.abs(back - mat)) < 1e-12


def test_closure_last_frame_at_origin():
    """Canonicalizing to the last pose's own frame lands it at the origin
    facing the canonical axis."""
    for seed in range(10):
        mat = random_clip(seed)
        last = devectorize_frame(mat[-1])
        canon = canonicalize(mat, frame_from_pose(last))
        canon_last = devectorize_frame(canon[-1])
        assert np.linalg.norm(canon_last.translation[[0, 2]]) < 1e-9
        assert np.allclose(heading(canon_last), [1.0, 0.0], atol=1e-6)


def test_fk_isometry(skeleton):
    mat = random_clip(4)
    frame = random_frame(4)
    canon = canonicalize(mat, frame)
    for row, crow in zip(mat, canon):
        a = forward_kinematics(skeleton, devectorize_frame(row), validate=False)
        b = forward_kinematics(skeleton, devectorize_frame(crow), validate=False)
        da = np.linalg.norm(a[:, None] - a[None, :], axis=-1)
        db = np.linalg.norm(b[:, None] - b[None, :], axis=-1)
        assert np.max(np.abs(da - db)) < 1e-9


def test_identity_frame_is_noop():
    mat = random_clip(7)
    assert np.allclose(canonicalize(mat, CanonicalFrame.identity()), mat, atol=1e-12)


def test_frame_from_waypoint():
    frame = frame_from_waypoint(np.array([2.0, 0.0, 3.0]), np.array([0.0, 0.0, -1.0]))
    # a pose standing at the waypoint facing the tangent canonicalizes to origin/+X
    pose = Skeleton.default().rest_pose()
    pose.translation = np.array([2.0, 0.95, 3.0])
    pose.rotations[0] = rot_y(np.pi / 2)  # +X -> -Z
    canon = canonicalize_pose(pose, frame)
    assert np.linalg.norm(canon.translation[[0, 2]]) < 1e-9
    assert np.allclose(heading(canon), [1.0, 0.0], atol=1e-9)


def test_degenerate_tangent():
    with pytest.raises(DegenerateTangentError):
        frame_from_waypoint(np.zeros(3), np.array([0.0, 1.0, 0.0]))


def test_pose_helpers_invert(skeleton):
    pose = skeleton.rest_pose()
    pose.translation = np.array([1.0, 0.95, -2.0])
    frame = random_frame(11)
    back = uncanonicalize_pose(canonicalize_pose(pose, frame), frame)
    assert np.allclose(vectorize_frame(back), vectorize_frame(pose), atol=1e-12)


def test_vertical_component_preserved():
    mat = random_clip(9)
    frame = random_frame(9)
    canon = canonicalize(mat, frame)
    assert np.allclose(canon[:, 1], mat[:, 1], atol=1e-12)
