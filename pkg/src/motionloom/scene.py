"""Scene representation, occupancy grid, A* planning, and waypoint extraction."""

import heapq
import json
from dataclasses import dataclass, field

import numpy as np

SQRT2 = np.sqrt(2.0)


class SceneFormatError(ValueError):
    pass


class EmptyFreeSpaceError(ValueError):
    pass


class UnreachableError(ValueError):
    pass


@dataclass(frozen=True)
class Box:
    label: str
    min: np.ndarray  # (3,)
    max: np.ndarray  # (3,)

    @property
    def top(self):
        return float(self.max[1])

    @property
    def centroid(self):
        return (self.min + self.max) / 2.0


@dataclass
class Scene:
    floor_height: float
    bounds_min: np.ndarray  # (2,) planar x, z
    bounds_max: np.ndarray
    obstacles: list = field(default_factory=list)

    def __post_init__(self):
        if (self.bounds_max <= self.bounds_min).any():
            raise SceneFormatError("scene bounds max must exceed min on both axes")
        for b in self.obstacles:
            if (b.min[[0, 2]] < self.bounds_min - 1e-9).any() or (
                b.max[[0, 2]] > self.bounds_max + 1e-9
            ).any():
                raise SceneFormatError(f"obstacle {b.label!r} extends outside scene bounds")

    def find(self, label):
        return [b for b in self.obstacles if b.label == label]

    @staticmethod
    def from_dict(doc):
        return Scene(
            floor_height=float(doc["floor_height"]),
            bounds_min=np.array(doc["bounds"]["min"], dtype=float),
            bounds_max=np.array(doc["bounds"]["max"], dtype=float),
            obstacles=[
                Box(o["label"], np.array(o["min"], dtype=float), np.array(o["max"], dtype=float))
                for o in doc.get("obstacles", [])
            ],
        )

    @staticmethod
    def load(path):
        with open(path) as f:
            return Scene.from_dict(json.load(f))

    def to_dict(self):
        return {
            "floor_height": self.floor_height,
            "bounds": {"min": list(map(float, self.bounds_min)), "max": list(map(float, self.bounds_max))},
            "obstacles": [
                {"label": b.label, "min": list(map(float, b.min)), "max": list(map(float, b.max))}
                for b in self.obstacles
            ],
        }


@dataclass
class OccupancyGrid:
    origin: np.ndarray  # (2,) world x, z of cell (0, 0) corner
    cell_size: float
    blocked: np.ndarray  # bool (nx, nz), True = blocked (inflated)
    floor_height: float = 0.0

    @property
    def shape(self):
        return self.blocked.shape

    def world_to_cell(self, xz):
        c = np.floor((np.asarray(xz, dtype=float) - self.origin) / self.cell_size).astype(int)
        return int(c[0]), int(c[1])

    def cell_center(self, cell):
        return self.origin + (np.array(cell, dtype=float) + 0.5) * self.cell_size

    def in_bounds(self, cell):
        return 0 <= cell[0] < self.blocked.shape[0] and 0 <= cell[1] < self.blocked.shape[1]

    def is_free(self, cell):
        return self.in_bounds(cell) and not self.blocked[cell]

    def is_free_world(self, xz):
        return self.is_free(self.world_to_cell(xz))


def build_grid(scene, cell_size=0.1, agent_radius=0.3, height_band=1.8):
    """Rasterize obstacle footprints and dilate by the agent radius.

    A cell is blocked iff its footprint intersects an obstacle box that
    overlaps the vertical band [floor, floor + height_band].
    """
    size = scene.bounds_max - scene.bounds_min
    nx = max(1, int(np.ceil(size[0] / cell_size - 1e-9)))
    nz = max(1, int(np.ceil(size[1] / cell_size - 1e-9)))
    raw = np.zeros((nx, nz), dtype=bool)
    for box in scene.obstacles:
        if box.max[1] <= scene.floor_height + 1e-9 or box.min[1] >= scene.floor_height + height_band:
            continue
        lo = np.floor((box.min[[0, 2]] - scene.bounds_min) / cell_size + 1e-9).astype(int)
        hi = np.ceil((box.max[[0, 2]] - scene.bounds_min) / cell_size - 1e-9).astype(int)
        lo = np.clip(lo, 0, [nx, nz])
        hi = np.clip(hi, 0, [nx, nz])
        raw[lo[0] : hi[0], lo[1] : hi[1]] = True
    r = int(np.ceil(agent_radius / cell_size - 1e-9))
    if r > 0 and raw.any():
        from scipy.ndimage import binary_dilation

        blocked = binary_dilation(raw, structure=np.ones((2 * r + 1, 2 * r + 1), dtype=bool))
    else:
        blocked = raw
    if blocked.all():
        raise EmptyFreeSpaceError("inflated grid has no free cells")
    return OccupancyGrid(
        origin=scene.bounds_min.copy(), cell_size=cell_size, blocked=blocked, floor_height=scene.floor_height
    )


def uninflated_grid(scene, cell_size=0.1):
    return build_grid(scene, cell_size=cell_size, agent_radius=0.0)


def octile(a, b):
    dx, dz = abs(a[0] - b[0]), abs(a[1] - b[1])
    return (dx + dz) + (SQRT2 - 2.0) * min(dx, dz)


def _neighbors(grid, cell):
    i, j = cell
    for di in (-1, 0, 1):
        for dj in (-1, 0, 1):
            if di == 0 and dj == 0:
                continue
            n = (i + di, j + dj)
            if not grid.is_free(n):
                continue
            if di != 0 and dj != 0:
                # forbid cutting a corner when both orthogonal cells are blocked
                if not grid.is_free((i + di, j)) and not grid.is_free((i, j + dj)):
                    continue
            yield n, SQRT2 if di != 0 and dj != 0 else 1.0


def snap_to_free(grid, xz, max_dist=0.5):
    cell = grid.world_to_cell(xz)
    if grid.is_free(cell):
        return cell
    r_cells = int(np.ceil(max_dist / grid.cell_size))
    best, best_d = None, np.inf
    for di in range(-r_cells, r_cells + 1):
        for dj in range(-r_cells, r_cells + 1):
            c = (cell[0] + di, cell[1] + dj)
            if grid.is_free(c):
                d = np.linalg.norm(grid.cell_center(c) - np.asarray(xz, dtype=float))
                if d < best_d:
                    best, best_d = c, d
    if best is None or best_d > max_dist:
        raise UnreachableError(f"no free cell within {max_dist} m of {tuple(xz)}")
    return best


def astar(grid, start_xz, goal_xz, snap_dist=0.5):
    """8-connected A* over the inflated grid. Deterministic: ties prefer
    lower g, then row-major cell order. Returns the cell path (inclusive)."""
    start = snap_to_free(grid, start_xz, max_dist=snap_dist)
    goal = snap_to_free(grid, goal_xz, max_dist=snap_dist)
    if start == goal:
        return [start]
    open_heap = [(octile(start, goal), 0.0, start)]
    g_score = {start: 0.0}
    came_from = {}
    closed = set()
    while open_heap:
        _, g, current = heapq.heappop(open_heap)
        if current in closed:
            continue
        closed.add(current)
        if current == goal:
            path = [current]
            while current in came_from:
                current = came_from[current]
                path.append(current)
            return path[::-1]
        for n, step in _neighbors(grid, current):
            ng = g + step
            if ng < g_score.get(n, np.inf) - 1e-12:
                g_score[n] = ng
                came_from[n] = current
                heapq.heappush(open_heap, (ng + octile(n, goal), ng, n))
    raise UnreachableError(f"no path from {start_xz} to {goal_xz}")


def path_cost(cell_path):
    cost = 0.0
    for a, b in zip(cell_path[:-1], cell_path[1:]):
        cost += SQRT2 if a[0] != b[0] and a[1] != b[1] else 1.0
    return cost


def line_of_sight(grid, a_xz, b_xz):
    """Supercover test: every cell the segment passes through must be free."""
    a = (np.asarray(a_xz, dtype=float) - grid.origin) / grid.cell_size
    b = (np.asarray(b_xz, dtype=float) - grid.origin) / grid.cell_size
    n = int(np.ceil(np.linalg.norm(b - a) * 4.0)) + 1
    for s in np.linspace(0.0, 1.0, n):
        p = a + s * (b - a)
        if not grid.is_free((int(np.floor(p[0])), int(np.floor(p[1])))):
            return False
    return True


def string_pull(grid, points):
    """Greedy line-of-sight shortcutting of a polyline (world planar points)."""
    if len(points) <= 2:
        return list(points)
    out = [points[0]]
    i = 0
    while i < len(points) - 1:
        j = len(points) - 1
        while j > i + 1 and not line_of_sight(grid, points[i], points[j]):
            j -= 1
        out.append(points[j])
        i = j
    return out


@dataclass
class PlannedPath:
    waypoints: np.ndarray  # (P, 3), y = floor height
    tangents: np.ndarray  # (P, 3), unit planar

    def __len__(self):
        return len(self.waypoints)

    @property
    def length(self):
        return float(
            np.sum(np.linalg.norm(np.diff(self.waypoints[:, [0, 2]], axis=0), axis=1))
        )

    def point_at_arc_length(self, s):
        """Planar point and unit tangent at arc length s along the waypoint polyline."""
        pts = self.waypoints[:, [0, 2]]
        if len(pts) == 1:
            return self.waypoints[0].copy(), self.tangents[0].copy()
        segs = np.linalg.norm(np.diff(pts, axis=0), axis=1)
        s = np.clip(s, 0.0, segs.sum())
        acc = 0.0
        for k, seg in enumerate(segs):
            if acc + seg >= s - 1e-12 and seg > 0:
                f = (s - acc) / seg
                p = pts[k] + f * (pts[k + 1] - pts[k])
                d = (pts[k + 1] - pts[k]) / seg
                return (
                    np.array([p[0], self.waypoints[0][1], p[1]]),
                    np.array([d[0], 0.0, d[1]]),
                )
            acc += seg
        return self.waypoints[-1].copy(), self.tangents[-1].copy()

    def to_dict(self):
        return {"waypoints": self.waypoints.tolist(), "tangents": self.tangents.tolist()}

    @staticmethod
    def from_dict(doc):
        return PlannedPath(
            waypoints=np.array(doc["waypoints"], dtype=float),
            tangents=np.array(doc["tangents"], dtype=float),
        )


def extract_waypoints(grid, cell_path, spacing=1.0, smoothing_window=3, fallback_tangent=None):
    """Cells -> meters, string-pull, arc-length resample, tangents by central
    difference with moving-average smoothing."""
    floor = grid.floor_height
    if len(cell_path) == 1:
        if fallback_tangent is None:
            fallback_tangent = np.array([1.0, 0.0, 0.0])
        c = grid.cell_center(cell_path[0])
        return PlannedPath(
            waypoints=np.array([[c[0], floor, c[1]]]),
            tangents=np.array([fallback_tangent / np.linalg.norm(fallback_tangent)]),
        )
    points = [grid.cell_center(c) for c in cell_path]
    points = string_pull(grid, points)
    pts = np.array(points)
    segs = np.linalg.norm(np.diff(pts, axis=0), axis=1)
    total = segs.sum()
    n_seg = max(1, int(round(total / spacing)))
    targets = np.linspace(0.0, total, n_seg + 1)
    cum = np.concatenate([[0.0], np.cumsum(segs)])
    resampled = np.empty((len(targets), 2))
    for i, s in enumerate(targets):
        k = int(np.searchsorted(cum, s, side="right")) - 1
        k = min(k, len(segs) - 1)
        f = 0.0 if segs[k] == 0 else (s - cum[k]) / segs[k]
        resampled[i] = pts[k] + f * (pts[k + 1] - pts[k])

    n = len(resampled)
    tangents = np.empty((n, 2))
    for i in range(n):
        lo = max(0, i - 1)
        hi = min(n - 1, i + 1)
        d = resampled[hi] - resampled[lo]
        norm = np.linalg.norm(d)
        tangents[i] = d / norm if norm > 1e-12 else np.array([1.0, 0.0])
    if smoothing_window > 1:
        half = smoothing_window // 2
        smoothed = np.empty_like(tangents)
        for i in range(n):
            lo, hi = max(0, i - half), min(n, i + half + 1)
            smoothed[i] = tangents[lo:hi].mean(axis=0)
        norms = np.linalg.norm(smoothed, axis=1, keepdims=True)
        tangents = smoothed / np.maximum(norms, 1e-12)
    waypoints = np.column_stack([resampled[:, 0], np.full(n, floor), resampled[:, 1]])
    tangents3 = np.column_stack([tangents[:, 0], np.zeros(n), tangents[:, 1]])
    return PlannedPath(waypoints=waypoints, tangents=tangents3)


def plan_path(grid, start_xz, goal_xz, spacing=1.0, smoothing_window=3, fallback_tangent=None,
              snap_dist=0.5):
    cells = astar(grid, start_xz, goal_xz, snap_dist=snap_dist)
    return extract_waypoints(
        grid, cells, spacing=spacing, smoothing_window=smoothing_window, fallback_tangent=fallback_tangent
    )
