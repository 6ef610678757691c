"""Resolving the material under a world-space tap.

A rolling buffer holds the last few segmentation masks, each stamped with
the camera pose and intrinsics at capture time (the camera moves between
frames). A collision point is projected into every mask, the 3x3 pixel
neighborhood around each projection is reduced to its most frequent color,
colors map to materials, and a plurality vote across masks picks the
winner.

Camera convention: +z forward, pixel (u, v) = (fx x/z + cx, fy y/z + cy)
in the camera frame, camera_to_world maps camera to world coordinates.
"""

from __future__ import annotations

import sys
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import BehindCameraError, NoVoteError, StaleTimestampError
from .materials import MaterialTable

__all__ = [
    "CameraIntrinsics",
    "CameraPose",
    "SegmentationMask",
    "MaskBuffer",
    "CollisionEvent",
    "project_world_to_pixel",
    "unproject_pixel",
    "sample_neighborhood",
    "resolve_material",
    "push_mask",
    "Scene",
    "load_scene",
    "load_mask",
]


@dataclass(frozen=True)
class CameraIntrinsics:
    """Pinhole intrinsics in pixels."""

    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int

    def __post_init__(self):
        if not (self.fx > 0 and self.fy > 0):
            raise ValueError("focal lengths must be positive")
        if not (0 <= self.cx < self.width and 0 <= self.cy < self.height):
            raise ValueError("principal point must lie inside the image")


@dataclass(frozen=True, eq=False)
class CameraPose:
    """Rigid camera-to-world transform (4x4, rotation orthonormal, det +1)."""

    camera_to_world: np.ndarray

    def __post_init__(self):
        mat = np.asarray(self.camera_to_world, dtype=np.float64)
        if mat.shape != (4, 4):
            raise ValueError("camera_to_world must be 4x4")
        if not np.allclose(mat[3], (0.0, 0.0, 0.0, 1.0), atol=1e-9):
            raise ValueError("last row must be (0, 0, 0, 1)")
        rot = mat[:3, :3]
        if not np.allclose(rot @ rot.T, np.eye(3), atol=1e-6):
            raise ValueError("rotation block is not orthonormal")
        if np.linalg.det(rot) < 0:
            raise ValueError("rotation block must have det +1")
        mat.flags.writeable = False
        object.__setattr__(self, "camera_to_world", mat)

    def world_to_camera(self) -> np.ndarray:
        """Analytic rigid inverse (R^T, -R^T t)."""
        rot = self.camera_to_world[:3, :3]
        t = self.camera_to_world[:3, 3]
        inv = np.eye(4)
        inv[:3, :3] = rot.T
        inv[:3, 3] = -rot.T @ t
        return inv


@dataclass(frozen=True, eq=False)
class SegmentationMask:
    """Color-coded label image plus the camera state at capture time."""

    pixels: np.ndarray  # (height, width, 3) uint8, row-major
    timestamp: float
    intrinsics: CameraIntrinsics
    pose: CameraPose

    def __post_init__(self):
        px = np.asarray(self.pixels, dtype=np.uint8)
        if px.ndim != 3 or px.shape[2] != 3:
            raise ValueError("pixels must be (height, width, 3)")
        if px.shape[0] != self.intrinsics.height or px.shape[1] != self.intrinsics.width:
            raise ValueError(
                f"mask {px.shape[1]}x{px.shape[0]} does not match intrinsics "
                f"{self.intrinsics.width}x{self.intrinsics.height}"
            )
        px.flags.writeable = False
        object.__setattr__(self, "pixels", px)

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]


class MaskBuffer:
    """Rolling mask history, newest last, strictly increasing timestamps.

    One ingest thread may push while readers resolve against snapshots.
    """

    def __init__(self, capacity: int = 5):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = capacity
        self._masks: list[SegmentationMask] = []

    def push(self, mask: SegmentationMask) -> "MaskBuffer":
        if self._masks and mask.timestamp <= self._masks[-1].timestamp:
            raise StaleTimestampError(
                f"mask timestamp {mask.timestamp} not newer than "
                f"{self._masks[-1].timestamp}"
            )
        masks = self._masks + [mask]
        if len(masks) > self.capacity:
            masks = masks[-self.capacity:]
        self._masks = masks  # atomic swap; readers keep their snapshot
        return self

    def snapshot(self) -> tuple[SegmentationMask, ...]:
        return tuple(self._masks)

    def __len__(self) -> int:
        return len(self._masks)


@dataclass(frozen=True)
class CollisionEvent:
    """World-space tap: position (m), force in (0, 1], timestamp (s)."""

    world_point: tuple[float, float, float]
    force: float
    timestamp: float

    def __post_init__(self):
        if not all(np.isfinite(self.world_point)):
            raise ValueError("world point must be finite")
        if not (0.0 < self.force <= 1.0):
            raise ValueError("force must be in (0, 1]")


def push_mask(buffer: MaskBuffer, mask: SegmentationMask) -> MaskBuffer:
    """Append a mask, evicting the oldest once the buffer is full."""
    return buffer.push(mask)


def project_world_to_pixel(point, pose: CameraPose, intr: CameraIntrinsics):
    """World point -> real-valued pixel (u, v); the caller rounds.

    Raises BehindCameraError when the point is at or behind the camera
    plane. Out-of-frame coordinates are returned as-is.
    """
    p = np.asarray(point, dtype=np.float64)
    cam = pose.world_to_camera() @ np.array([p[0], p[1], p[2], 1.0])
    if cam[2] <= 0.0:
        raise BehindCameraError(f"point {tuple(p)} has camera z {cam[2]:.6g}")
    u = intr.fx * cam[0] / cam[2] + intr.cx
    v = intr.fy * cam[1] / cam[2] + intr.cy
    return u, v


def unproject_pixel(u: float, v: float, depth: float, pose: CameraPose,
                    intr: CameraIntrinsics):
    """Pixel plus camera-frame depth (z, meters) -> world point."""
    if depth <= 0:
        raise ValueError("depth must be positive")
    cam = np.array([(u - intr.cx) / intr.fx * depth,
                    (v - intr.cy) / intr.fy * depth,
                    depth, 1.0])
    world = pose.camera_to_world @ cam
    return world[0], world[1], world[2]


def _round_half_up(x: float) -> int:
    return int(np.floor(x + 0.5))


def sample_neighborhood(mask: SegmentationMask, u: int, v: int):
    """Most frequent color among the in-bounds pixels of the 3x3 patch.

    Ties go to the color nearest the center pixel, then to the
    lexicographically smallest RGB. Returns None when the whole patch is
    out of bounds.
    """
    counts: Counter = Counter()
    best_dist: dict[tuple[int, int, int], int] = {}
    for dv in (-1, 0, 1):
        for du in (-1, 0, 1):
            x, y = u + du, v + dv
            if 0 <= x < mask.width and 0 <= y < mask.height:
                color = tuple(int(c) for c in mask.pixels[y, x])
                counts[color] += 1
                d = du * du + dv * dv
                if color not in best_dist or d < best_dist[color]:
                    best_dist[color] = d
    if not counts:
        return None
    return min(counts, key=lambda c: (-counts[c], best_dist[c], c))


def resolve_material(buffer, point, table: MaterialTable):
    """Majority vote across the mask history for the material at a point.

    Masks where the point projects behind the camera or out of frame, the
    neighborhood is empty, or the color is unmapped are skipped. Vote ties
    break toward the material that voted from the most recent mask.

    Accepts a MaskBuffer or a sequence of masks (a snapshot). Returns
    (material name, tally dict); raises NoVoteError when every mask
    was skipped.
    """
    masks = buffer.snapshot() if isinstance(buffer, MaskBuffer) else tuple(buffer)
    if not masks:
        raise NoVoteError("mask buffer is empty")
    votes: list[str] = []
    for mask in masks:
        try:
            u, v = project_world_to_pixel(point, mask.pose, mask.intrinsics)
        except BehindCameraError:
            continue
        ui, vi = _round_half_up(u), _round_half_up(v)
        if not (0 <= ui < mask.width and 0 <= vi < mask.height):
            continue
        color = sample_neighborhood(mask, ui, vi)
        if color is None:
            continue
        try:
            entry = table.lookup_by_color(color)
        except Exception:
            continue  # unmapped segmentation class
        votes.append(entry.name)
    if not votes:
        raise NoVoteError(f"no mask produced a material vote for point {tuple(point)}")
    tally: dict[str, int] = {}
    last_seen: dict[str, int] = {}
    for i, name in enumerate(votes):
        tally[name] = tally.get(name, 0) + 1
        last_seen[name] = i
    winner = max(tally, key=lambda name: (tally[name], last_seen[name]))
    return winner, tally


# ---------------------------------------------------------------------------
# scene directories: masks + sidecar metadata + optional backdrop


@dataclass
class Scene:
    """A mask history loaded from disk, with UI extras."""

    masks: MaskBuffer
    directory: Path
    backdrop: Optional[Path] = None
    tap_depth: float = 2.0
    ground_truth: dict = field(default_factory=dict)  # material -> world point
    mask_files: list = field(default_factory=list)


def _load_meta(path: Path) -> dict:
    with open(path, "rb") as fh:
        return tomllib.load(fh)


def load_mask(png_path, meta_path) -> SegmentationMask:
    """Load one mask image plus its sidecar metadata file."""
    from PIL import Image

    with Image.open(png_path) as im:
        pixels = np.asarray(im.convert("RGB"), dtype=np.uint8)
    meta = _load_meta(Path(meta_path))
    intr = CameraIntrinsics(
        fx=float(meta["fx"]), fy=float(meta["fy"]),
        cx=float(meta["cx"]), cy=float(meta["cy"]),
        width=int(meta["width"]), height=int(meta["height"]),
    )
    mat = np.array(meta["camera_to_world"], dtype=np.float64).reshape(4, 4)
    return SegmentationMask(
        pixels=pixels,
        timestamp=float(meta["timestamp"]),
        intrinsics=intr,
        pose=CameraPose(mat),
    )


def load_scene(directory) -> Scene:
    """Load a scene directory: masks/*.png with *.toml sidecars.

    Masks are pushed in timestamp order. scene.toml may carry tap_depth
    and ground-truth tap points; backdrop.png is picked up when present.
    """
    directory = Path(directory)
    mask_dir = directory / "masks"
    if not mask_dir.is_dir():
        raise FileNotFoundError(f"{directory} has no masks/ subdirectory")
    pairs = []
    for png in sorted(mask_dir.glob("*.png")):
        meta = png.with_suffix(".toml")
        if not meta.exists():
            raise FileNotFoundError(f"mask {png.name} has no metadata sidecar")
        pairs.append((load_mask(png, meta), png))
    pairs.sort(key=lambda pair: pair[0].timestamp)
    buffer = MaskBuffer()
    for mask, _ in pairs:
        buffer.push(mask)

    scene = Scene(masks=buffer, directory=directory,
                  mask_files=[png for _, png in pairs])
    backdrop = directory / "backdrop.png"
    if backdrop.exists():
        scene.backdrop = backdrop
    meta_file = directory / "scene.toml"
    if meta_file.exists():
        meta = _load_meta(meta_file)
        scene.tap_depth = float(meta.get("tap_depth", scene.tap_depth))
        for name, xyz in meta.get("ground_truth", {}).items():
            scene.ground_truth[name] = tuple(float(c) for c in xyz)
    return scene
