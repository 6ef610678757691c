"""Synthetic scene generation.

Builds a scene directory that stands in for a headset capture: a flat
board at a known depth divided into one rectangular patch per material,
viewed by a camera drifting along a scripted path. Each generated mask is
geometrically consistent with its own pose, so a world point above a patch
projects onto that patch's color in every frame. Tests and the browser
console run against these directories.
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np

from .materials import MaterialTable, format_color
from .scene import CameraIntrinsics, CameraPose

__all__ = ["generate_scene", "BOARD_DEPTH"]

BOARD_DEPTH = 2.0          # world z of the board plane, meters
BOARD_HALF_X = 0.8         # board spans [-0.8, 0.8] x [-0.45, 0.45]
BOARD_HALF_Y = 0.45
GRID = (4, 3)              # patches: 4 columns x 3 rows = 12 materials


def _camera_pose(index: int) -> np.ndarray:
    """Scripted drift: small translations and sub-degree rotations."""
    tx = 0.02 * math.sin(0.9 * index)
    ty = 0.015 * math.sin(0.6 * index + 1.0)
    tz = 0.01 * math.sin(0.35 * index)
    yaw = 0.010 * math.sin(0.8 * index + 0.3)
    pitch = 0.008 * math.cos(0.5 * index)
    cy_, sy_ = math.cos(yaw), math.sin(yaw)
    cp, sp = math.cos(pitch), math.sin(pitch)
    ry = np.array([[cy_, 0, sy_], [0, 1, 0], [-sy_, 0, cy_]])
    rx = np.array([[1, 0, 0], [0, cp, -sp], [0, sp, cp]])
    mat = np.eye(4)
    mat[:3, :3] = ry @ rx
    mat[:3, 3] = (tx, ty, tz)
    return mat


def _patch_centers(table: MaterialTable):
    cols, rows = GRID
    cell_w = 2 * BOARD_HALF_X / cols
    cell_h = 2 * BOARD_HALF_Y / rows
    out = {}
    for i, entry in enumerate(table):
        col, row = i % cols, i // cols
        cx = -BOARD_HALF_X + (col + 0.5) * cell_w
        cy = -BOARD_HALF_Y + (row + 0.5) * cell_h
        out[entry.name] = (cx, cy, BOARD_DEPTH)
    return out


def _render_view(pose_mat: np.ndarray, intr: CameraIntrinsics, table: MaterialTable):
    """Rasterize the board through one camera; background stays black."""
    cols, rows = GRID
    palette = np.array([e.label_color for e in table], dtype=np.uint8)
    u = np.arange(intr.width, dtype=np.float64)
    v = np.arange(intr.height, dtype=np.float64)
    uu, vv = np.meshgrid(u, v)
    dirs = np.stack(
        [(uu - intr.cx) / intr.fx, (vv - intr.cy) / intr.fy, np.ones_like(uu)], axis=-1
    )
    rot = pose_mat[:3, :3]
    origin = pose_mat[:3, 3]
    world_dirs = dirs @ rot.T
    with np.errstate(divide="ignore"):
        t = (BOARD_DEPTH - origin[2]) / world_dirs[..., 2]
    px = origin[0] + t * world_dirs[..., 0]
    py = origin[1] + t * world_dirs[..., 1]
    on_board = (
        (t > 0)
        & (np.abs(px) <= BOARD_HALF_X)
        & (np.abs(py) <= BOARD_HALF_Y)
    )
    col = np.clip(((px + BOARD_HALF_X) / (2 * BOARD_HALF_X) * cols).astype(int), 0, cols - 1)
    row = np.clip(((py + BOARD_HALF_Y) / (2 * BOARD_HALF_Y) * rows).astype(int), 0, rows - 1)
    cell = row * cols + col
    image = np.zeros((intr.height, intr.width, 3), dtype=np.uint8)
    image[on_board] = palette[cell[on_board] % len(palette)]
    return image, on_board


def _toml_floats(values) -> str:
    return "[" + ", ".join(repr(float(x)) for x in values) + "]"


def _write_meta(path: Path, timestamp: float, pose_mat: np.ndarray, intr: CameraIntrinsics):
    lines = [
        f"timestamp = {timestamp!r}",
        f"fx = {intr.fx!r}",
        f"fy = {intr.fy!r}",
        f"cx = {intr.cx!r}",
        f"cy = {intr.cy!r}",
        f"width = {intr.width}",
        f"height = {intr.height}",
        f"camera_to_world = {_toml_floats(pose_mat.reshape(-1))}",
    ]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _write_backdrop(path: Path, image: np.ndarray, on_board: np.ndarray,
                    intr: CameraIntrinsics, pose_mat: np.ndarray, table: MaterialTable):
    """Muted version of the newest view with patch labels, for the UI."""
    from PIL import Image, ImageDraw

    muted = image.astype(np.float64) * 0.55 + 90.0
    muted[~on_board] = 24.0
    im = Image.fromarray(np.clip(muted, 0, 255).astype(np.uint8))
    draw = ImageDraw.Draw(im)
    intr_obj = intr
    pose = CameraPose(pose_mat)
    from .scene import project_world_to_pixel

    for name, world in _patch_centers(table).items():
        u, v = project_world_to_pixel(world, pose, intr_obj)
        text = name
        draw.text((u, v), text, fill=(20, 20, 20), anchor="mm")
    im.save(path)


def generate_scene(
    out_dir,
    table: MaterialTable,
    n_masks: int = 5,
    width: int = 960,
    height: int = 540,
) -> Path:
    """Write a complete scene directory and return its path.

    Layout: masks/mask_XXX.png + .toml sidecars, backdrop.png, scene.toml
    (tap depth plus per-material ground-truth tap points).
    """
    from PIL import Image

    out_dir = Path(out_dir)
    mask_dir = out_dir / "masks"
    mask_dir.mkdir(parents=True, exist_ok=True)
    intr = CameraIntrinsics(
        fx=500.0 * width / 960.0,
        fy=500.0 * width / 960.0,
        cx=width / 2.0,
        cy=height / 2.0,
        width=width,
        height=height,
    )
    last = None
    for i in range(n_masks):
        pose_mat = _camera_pose(i)
        image, on_board = _render_view(pose_mat, intr, table)
        Image.fromarray(image).save(mask_dir / f"mask_{i:03d}.png")
        _write_meta(mask_dir / f"mask_{i:03d}.toml", 0.2 * i, pose_mat, intr)
        last = (image, on_board, pose_mat)

    image, on_board, pose_mat = last
    _write_backdrop(out_dir / "backdrop.png", image, on_board, intr, pose_mat, table)

    centers = _patch_centers(table)
    lines = [
        f"tap_depth = {BOARD_DEPTH!r}",
        "",
        "[ground_truth]",
    ]
    for name, world in centers.items():
        lines.append(f'"{name}" = {_toml_floats(world)}')
    lines += ["", "[palette]"]
    for entry in table:
        lines.append(f'"{entry.name}" = "{format_color(entry.label_color)}"')
    (out_dir / "scene.toml").write_text("\n".join(lines) + "\n", encoding="utf-8")
    return out_dir
