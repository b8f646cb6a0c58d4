import numpy as np
import pytest

from motionloom.gait import GaitParameterError, blend_to_pose, generate_gait_clip
from motionloom.metrics import foot_skate, toe_track
from motionloom.skeleton import heading


def test_straight_walk_displacement():
    clip = generate_gait_clip(speed=1.0, turn_rate=0.0, duration=4.0, seed=0)
    disp = clip.frames[-1].translation - clip.frames[0].translation
    assert abs(np.linalg.norm(disp[[0, 2]]) - 4.0) < 1e-6
    # along the initial heading (+X)
    assert abs(disp[0] - 4.0) < 1e-6


def test_turn_integrates_heading():
    clip = generate_gait_clip(speed=1.0, turn_rate=np.pi / 8, duration=8.0, seed=0)
    h0 = heading(clip.frames[0])
    h1 = heading(clip.frames[-1])
    angle = np.arctan2(h0[0] * h1[1] - h0[1] * h1[0], h0 @ h1)
    assert abs(abs(angle) - np.pi) < 1e-6


def test_stance_toes_pinned(skeleton):
    """Frames where the right toe is on the floor must show no planar slide."""
    clip = generate_gait_clip(speed=1.2, turn_rate=0.0, duration=4.0, seed=1)
    toes = toe_track(clip, skeleton, "right_toe")
    planar_speed = np.linalg.norm(np.diff(toes[:, [0, 2]], axis=0), axis=1)
    grounded = (toes[1:, 1] < 1e-6) & (toes[:-1, 1] < 1e-6)
    assert grounded.sum() > 10
    assert planar_speed[grounded].max() < 0.002  # < 0.2 cm/frame


def test_foot_skate_low(skeleton):
    for speed in (0.6, 1.2, 1.8):
        clip = generate_gait_clip(speed=speed, turn_rate=0.0, duration=4.0, seed=2)
        assert foot_skate(clip, skeleton) < 1.5


def test_no_nans_and_bounded_velocity():
    clip = generate_gait_clip(speed=1.5, turn_rate=0.8, duration=3.0, seed=3)
    mat = clip.to_matrix()
    assert np.all(np.isfinite(mat))
    # bounded joint angular velocity: rotation delta per frame < 10 rad/s / 30 fps
    rots = mat[:, 3:].reshape(len(clip), 24, 3, 3)
    for t in range(1, len(clip)):
        rel = np.einsum("jab,jcb->jac", rots[t], rots[t - 1])
        angles = np.arccos(np.clip((np.trace(rel, axis1=1, axis2=2) - 1) / 2, -1, 1))
        assert angles.max() < 10.0 / 30.0


def test_determinism():
    a = generate_gait_clip(speed=1.0, turn_rate=0.3, duration=2.0, seed=9)
    b = generate_gait_clip(speed=1.0, turn_rate=0.3, duration=2.0, seed=9)
    assert np.array_equal(a.to_matrix(), b.to_matrix())


@pytest.mark.parametrize(
    "kwargs",
    [
        {"speed": 0.1},
        {"speed": 2.5},
        {"turn_rate": 1.5},
        {"duration": 1.0},
    ],
)
def test_parameter_errors(kwargs):
    full = {"speed": 1.0, "turn_rate": 0.0, "duration": 4.0, "seed": 0}
    full.update(kwargs)
    with pytest.raises(GaitParameterError):
        generate_gait_clip(**full)


def test_blend_to_pose_reaches_target(skeleton):
    clip = generate_gait_clip(speed=1.0, turn_rate=0.0, duration=2.0, seed=0)
    target = skeleton.rest_pose()
    target.translation = clip.frames[-1].translation + np.array([0.5, 0.0, 0.0])
    blended = blend_to_pose(clip, target, 20)
    assert len(blended) == len(clip) + 20
    assert np.allclose(blended.frames[-1].translation, target.translation, atol=1e-9)
    assert np.allclose(blended.frames[-1].rotations, target.rotations, atol=1e-9)
    # original frames untouched
    assert np.array_equal(blended.to_matrix()[: len(clip)], clip.to_matrix())
