"""Action keypoints -> anchor pose via differentiable-FK pose optimization,
plus keypoint generation from labeled scenes and structured instructions."""

import json
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from . import autodiff as ad
from .motion import MotionClip, devectorize_frame, vectorize_frame
from .rotations import rot_axis_angle, rot_y
from .skeleton import NUM_JOINTS, Pose, forward_kinematics

SEAT_OFFSET = 0.10
HIP_WIDTH = 0.30
FOOT_STANDOFF = 0.45
HAND_STANDOFF = 0.05
LEAN_ROOT_STANDOFF = 0.15
STANDING_HIP_HEIGHT = 0.95
REACH_THRESHOLD_CM = 5.0
LAMBDA_PRIOR = 0.02
LAMBDA_LIMIT = 1.0

# generic per-joint magnitude limits (radians from neutral), keyed by substring
JOINT_LIMITS = {
    "spine": 0.5,
    "neck": 0.9,
    "head": 0.9,
    "clavicle": 0.4,
    "shoulder": 2.6,
    "elbow": 2.6,
    "wrist": 1.2,
    "hand": 0.6,
    "hip": 2.2,
    "knee": 2.6,
    "ankle": 1.2,
    "toe": 0.6,
    "pelvis": np.inf,
}


class KeypointFormatError(ValueError):
    pass


class UnreachableKeypointsError(ValueError):
    def __init__(self, best, residuals):
        super().__init__(
            f"keypoints unreachable: best residuals (cm) {[round(r, 2) for r in residuals]} "
            f"exceed {REACH_THRESHOLD_CM} cm"
        )
        self.best = best
        self.residuals = residuals


class LabelNotFoundError(KeyError):
    def __init__(self, label, available):
        super().__init__(f"no object labeled {label!r}; available: {sorted(set(available))}")


class UnsupportedVerbError(ValueError):
    pass


@dataclass
class ActionKeypoints:
    targets: list  # [(role, np.ndarray(3,))]
    tag: str = "custom"

    def __post_init__(self):
        if not 3 <= len(self.targets) <= 4:
            raise KeypointFormatError(f"need 3 or 4 keypoints, got {len(self.targets)}")
        roles = [r for r, _ in self.targets]
        if len(set(roles)) != len(roles):
            raise KeypointFormatError(f"duplicate keypoint roles: {roles}")
        self.targets = [(r, np.asarray(p, dtype=float)) for r, p in self.targets]
        for r, p in self.targets:
            if not np.all(np.isfinite(p)):
                raise KeypointFormatError(f"non-finite target for {r!r}")

    def to_dict(self):
        return {
            "tag": self.tag,
            "targets": [{"role": r, "position": list(map(float, p))} for r, p in self.targets],
        }

    @staticmethod
    def from_dict(doc):
        return ActionKeypoints(
            targets=[(t["role"], np.array(t["position"], dtype=float)) for t in doc["targets"]],
            tag=doc.get("tag", "custom"),
        )


def load_keypoint_file(path):
    with open(path) as f:
        doc = json.load(f)
    return [ActionKeypoints.from_dict(a) for a in doc["actions"]]


def save_keypoint_file(actions, path):
    with open(path, "w") as f:
        json.dump({"actions": [a.to_dict() for a in actions]}, f, indent=2)


@dataclass
class AnchorPose:
    pose: Pose
    residuals: list  # per-keypoint distance in cm, keypoint order
    prior_energy: float

    def to_dict(self):
        return {
            "frame": vectorize_frame(self.pose).tolist(),
            "residuals_cm": list(map(float, self.residuals)),
            "prior_energy": float(self.prior_energy),
        }

    @staticmethod
    def from_dict(doc):
        return AnchorPose(
            pose=devectorize_frame(np.array(doc["frame"], dtype=float)),
            residuals=list(doc["residuals_cm"]),
            prior_energy=float(doc["prior_energy"]),
        )


# -- templates -------------------------------------------------------------

_TEMPLATE_CACHE = {}


def load_templates():
    """Tagged single-frame template poses shipped with the package."""
    if _TEMPLATE_CACHE:
        return dict(_TEMPLATE_CACHE)
    root = resources.files("motionloom.data").joinpath("templates")
    for entry in sorted(root.iterdir()):
        if entry.name.endswith(".json"):
            doc = json.loads(entry.read_text())
            pose = devectorize_frame(np.array(doc["frames"][0], dtype=float))
            _TEMPLATE_CACHE[entry.name[: -len(".json")]] = pose
    return dict(_TEMPLATE_CACHE)


def templates_for_tag(tag, templates):
    """Up to 3 template initializations for an action tag, best-guess first."""
    order = {
        "sit": ["sit", "neutral", "reach_mid"],
        "grab": ["reach_mid", "reach_high", "neutral"],
        "lean": ["neutral", "sit", "reach_mid"],
    }.get(tag, ["neutral", "sit", "reach_mid"])
    return [(name, templates[name]) for name in order if name in templates]


# -- differentiable FK ------------------------------------------------------


def _rot_y_tensor(yaw):
    """3x3 rotation about +Y from a shape-(1,) yaw tensor."""
    c, s = ad.tcos(yaw), ad.tsin(yaw)
    zero, one = ad.Tensor(np.zeros(1)), ad.Tensor(np.ones(1))
    flat = ad.concat_rows([c, zero, s, zero, one, zero, ad.neg(s), zero, c])
    return ad.reshape(flat, (3, 3))


def _fk_graph(skeleton, base_rots, trans_param, yaw_param, inc_param):
    """Differentiable joint positions and local rotations.

    Joint 0 rotation = rot_y(yaw) @ base; joints 1..23 = base @ rodrigues(inc)
    with `inc_param` a single (23, 3) axis-angle increment tensor.
    """
    locals_ = ad.matmul(ad.Tensor(base_rots[1:]), ad.rodrigues(inc_param))
    world_rot = [None] * NUM_JOINTS
    positions = [None] * NUM_JOINTS
    world_rot[0] = ad.matmul(_rot_y_tensor(yaw_param), ad.Tensor(base_rots[0]))
    positions[0] = ad.reshape(trans_param, (3, 1))
    for c in range(1, NUM_JOINTS):
        p = skeleton.parents[c]
        offset = ad.Tensor(skeleton.offsets[c].reshape(3, 1))
        positions[c] = ad.add(positions[p], ad.matmul(world_rot[p], offset))
        local = ad.reshape(ad.take_rows(locals_, c - 1, 1), (3, 3))
        world_rot[c] = ad.matmul(world_rot[p], local)
    return positions, world_rot, locals_


def _limit_for(name):
    for key, lim in JOINT_LIMITS.items():
        if key in name:
            return lim
    return 1.5


def _objective_numeric(skeleton, pose, keypoints, template, limits_fro):
    """Numpy evaluation of the solve objective (used by the line search)."""
    positions = forward_kinematics(skeleton, pose, validate=False)
    total = 0.0
    for role, target in keypoints.targets:
        d = positions[skeleton.landmark_index(role)] - target
        total += float(d @ d)
    for j in range(1, NUM_JOINTS):
        diff = pose.rotations[j] - template.rotations[j]
        total += LAMBDA_PRIOR * float((diff * diff).sum())
        dev = pose.rotations[j] - np.eye(3)
        excess = float((dev * dev).sum()) - limits_fro[j]
        if excess > 0:
            total += LAMBDA_LIMIT * excess * excess
    return total


def _residuals_cm(skeleton, pose, keypoints):
    positions = forward_kinematics(skeleton, pose, validate=False)
    return [
        float(np.linalg.norm(positions[skeleton.landmark_index(r)] - t)) * 100.0
        for r, t in keypoints.targets
    ]


def _init_from_template(skeleton, template, keypoints):
    """Plant the template at the keypoints: planar Procrustes on the matching
    landmarks gives the initial yaw and translation."""
    roles = [r for r, _ in keypoints.targets]
    t_positions = forward_kinematics(skeleton, template, validate=False)
    src = np.array([t_positions[skeleton.landmark_index(r)] for r in roles])
    dst = np.array([t for _, t in keypoints.targets])
    src_c = src[:, [0, 2]] - src[:, [0, 2]].mean(axis=0)
    dst_c = dst[:, [0, 2]] - dst[:, [0, 2]].mean(axis=0)
    # planar orthogonal Procrustes: angle maximizing trace(R S) in 2D
    num = float((src_c[:, 0] * dst_c[:, 1] - src_c[:, 1] * dst_c[:, 0]).sum())
    den = float((src_c * dst_c).sum())
    # rot_y(a) acts on (x, z) as [[cos, sin], [-sin, cos]] in our convention
    angle = np.arctan2(-num, den) if (abs(num) > 1e-12 or abs(den) > 1e-12) else 0.0
    r = rot_y(angle)
    pose = template.copy()
    pose.rotations[0] = r @ pose.rotations[0]
    anchor_src = r @ np.array([src[:, 0].mean(), src[:, 1].mean(), src[:, 2].mean()])
    anchor_dst = dst.mean(axis=0)
    pose.translation = r @ template.translation + (anchor_dst - anchor_src)
    return pose


def solve_anchor(keypoints, skeleton, templates=None, max_iters=500, grad_tol=1e-6, verbose=False):
    """Minimize keypoint residuals + template prior + joint-limit hinges by
    gradient descent with a step-halving line search, from up to 3 template
    initializations. Raises UnreachableKeypointsError when the best attempt
    leaves any per-keypoint residual above the reach threshold."""
    templates = templates or load_templates()
    limits_fro = [8.0 * np.sin(min(_limit_for(n), np.pi) / 2.0) ** 2 for n in skeleton.names]

    best = None
    for name, template in templates_for_tag(keypoints.tag, templates):
        pose = _solve_from(keypoints, skeleton, _init_from_template(skeleton, template, keypoints),
                           template, limits_fro, max_iters, grad_tol)
        energy = _objective_numeric(skeleton, pose, keypoints, template, limits_fro)
        residuals = _residuals_cm(skeleton, pose, keypoints)
        if best is None or max(residuals) < max(best[1]):
            prior = energy - sum((r / 100.0) ** 2 for r in residuals)
            best = (pose, residuals, prior, name)
        if max(residuals) < 0.1:  # early out: already essentially exact
            break
    pose, residuals, prior, _ = best
    anchor = AnchorPose(pose=pose, residuals=residuals, prior_energy=prior)
    if max(residuals) > REACH_THRESHOLD_CM:
        raise UnreachableKeypointsError(anchor, residuals)
    return anchor


def _solve_from(keypoints, skeleton, pose, template, limits_fro, max_iters, grad_tol):
    pose = pose.copy()
    step = 0.05
    loss = _objective_numeric(skeleton, pose, keypoints, template, limits_fro)
    lm_indices = [(skeleton.landmark_index(r), np.asarray(t, dtype=float)) for r, t in keypoints.targets]
    eye = np.eye(3)

    ones9 = np.ones((9, 1))
    limit_vec = np.array(limits_fro[1:]).reshape(-1, 1)
    template_rest = template.rotations[1:]

    for _ in range(max_iters):
        trans_p = ad.parameter(pose.translation)
        yaw_p = ad.parameter(np.zeros(1))
        inc_p = ad.parameter(np.zeros((NUM_JOINTS - 1, 3)))
        positions, _, locals_ = _fk_graph(skeleton, pose.rotations, trans_p, yaw_p, inc_p)

        total = None
        for idx, target in lm_indices:
            d = ad.add(positions[idx], ad.Tensor(-target.reshape(3, 1)))
            term = ad.tsum(ad.square(d))
            total = term if total is None else ad.add(total, term)
        prior = ad.tsum(ad.square(ad.add(locals_, ad.Tensor(-template_rest))))
        total = ad.add(total, ad.mul(LAMBDA_PRIOR, prior))
        dev2 = ad.reshape(ad.square(ad.add(locals_, ad.Tensor(-np.broadcast_to(eye, locals_.shape)))),
                          (NUM_JOINTS - 1, 9))
        per_joint = ad.matmul(dev2, ad.Tensor(ones9))  # (23, 1) Frobenius^2 from neutral
        excess = ad.relu(ad.add(per_joint, ad.Tensor(-limit_vec)))
        total = ad.add(total, ad.mul(LAMBDA_LIMIT, ad.tsum(ad.square(excess))))
        total.backward()

        g_trans, g_yaw, g_inc = trans_p.grad, yaw_p.grad, inc_p.grad
        gnorm = np.sqrt(float(g_trans @ g_trans) + float(g_yaw @ g_yaw) + float((g_inc**2).sum()))
        if gnorm < grad_tol:
            break

        accepted = False
        for _ in range(12):
            cand = pose.copy()
            cand.translation = pose.translation - step * g_trans
            cand.rotations[0] = rot_y(-step * float(g_yaw[0])) @ pose.rotations[0]
            for j in range(1, NUM_JOINTS):
                v = -step * g_inc[j - 1]
                angle = np.linalg.norm(v)
                if angle > 1e-12:
                    cand.rotations[j] = pose.rotations[j] @ rot_axis_angle(v / angle, angle)
            new_loss = _objective_numeric(skeleton, cand, keypoints, template, limits_fro)
            if new_loss < loss:
                pose, loss = cand, new_loss
                step = min(step * 1.5, 1.0)
                accepted = True
                break
            step *= 0.5
        if not accepted:
            break
    return pose


# -- instruction heuristics -------------------------------------------------


@dataclass
class Instruction:
    verb: str
    label: str
    height: float = None

    @staticmethod
    def from_dict(doc):
        return Instruction(verb=doc["verb"], label=doc["label"], height=doc.get("height"))


def load_instruction_file(path):
    with open(path) as f:
        doc = json.load(f)
    return [Instruction.from_dict(c) for c in doc["commands"]]


def free_space_direction(scene, grid, centroid, n_rays=16, max_len=5.0):
    """Planar unit direction of the longest obstacle-free ray from `centroid`."""
    best_dir, best_len = np.array([1.0, 0.0]), -1.0
    start = np.array([centroid[0], centroid[2]])
    for k in range(n_rays):
        a = 2.0 * np.pi * k / n_rays
        d = np.array([np.cos(a), -np.sin(a)])
        length = 0.0
        step = grid.cell_size
        while length < max_len:
            p = start + (length + step) * d
            if not grid.is_free(grid.world_to_cell(p)):
                break
            length += step
        if length > best_len + 1e-9:
            best_len, best_dir = length, d
    return np.array([best_dir[0], 0.0, best_dir[1]])


def keypoints_from_instruction(scene, grid, instruction):
    """Heuristic keypoint placement for sit / grab / lean on a labeled box."""
    boxes = scene.find(instruction.label)
    if not boxes:
        raise LabelNotFoundError(instruction.label, [b.label for b in scene.obstacles])
    box = boxes[0]
    free3 = free_space_direction(scene, grid, box.centroid)
    free2 = np.array([free3[0], free3[2]])
    perp = np.array([-free2[1], free2[0]])
    floor = scene.floor_height
    center = np.array([box.centroid[0], box.centroid[2]])
    # planar point on the box face toward free space
    half = (box.max[[0, 2]] - box.min[[0, 2]]) / 2.0
    scale = np.inf
    for axis in range(2):
        if abs(free2[axis]) > 1e-9:
            scale = min(scale, half[axis] / abs(free2[axis]))
    edge = center + (0.0 if not np.isfinite(scale) else scale) * free2

    verb = instruction.verb
    if verb == "sit":
        root = np.array([box.centroid[0], box.top + SEAT_OFFSET, box.centroid[2]])
        foot_base = edge + 0.15 * free2
        left = np.array([0.0, floor, 0.0])
        left[[0, 2]] = foot_base + (HIP_WIDTH / 2.0) * perp
        right = np.array([0.0, floor, 0.0])
        right[[0, 2]] = foot_base - (HIP_WIDTH / 2.0) * perp
        return ActionKeypoints(
            targets=[("root", root), ("left_toe", left), ("right_toe", right)], tag="sit"
        )
    if verb == "grab":
        height = instruction.height if instruction.height is not None else float(box.centroid[1])
        hand = np.array([0.0, height, 0.0])
        hand[[0, 2]] = edge + HAND_STANDOFF * free2
        foot_base = edge + FOOT_STANDOFF * free2
        left = np.array([0.0, floor, 0.0])
        left[[0, 2]] = foot_base + (HIP_WIDTH / 2.0) * perp
        right = np.array([0.0, floor, 0.0])
        right[[0, 2]] = foot_base - (HIP_WIDTH / 2.0) * perp
        return ActionKeypoints(
            targets=[("right_hand", hand), ("left_toe", left), ("right_toe", right)], tag="grab"
        )
    if verb == "lean":
        root = np.array([0.0, floor + STANDING_HIP_HEIGHT, 0.0])
        root[[0, 2]] = edge + LEAN_ROOT_STANDOFF * free2
        foot_base = edge + FOOT_STANDOFF * free2
        left = np.array([0.0, floor, 0.0])
        left[[0, 2]] = foot_base + (HIP_WIDTH / 2.0) * perp
        right = np.array([0.0, floor, 0.0])
        right[[0, 2]] = foot_base - (HIP_WIDTH / 2.0) * perp
        return ActionKeypoints(
            targets=[("root", root), ("left_toe", left), ("right_toe", right)], tag="lean"
        )
    raise UnsupportedVerbError(f"unsupported verb {verb!r}; supported: sit, grab, lean")
