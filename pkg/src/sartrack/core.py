"""Shared domain types and box geometry.

Coordinates are continuous pixel units with a top-left origin and y growing
downward (MOTChallenge convention). Frame indices are 1-based.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class BBox:
    """Axis-aligned box as (top-left x, top-left y, width, height)."""

    x: float
    y: float
    w: float
    h: float

    def __post_init__(self):
        if not (self.w > 0 and self.h > 0):
            raise ValueError(f"box sides must be positive, got w={self.w} h={self.h}")

    @property
    def cx(self) -> float:
        return self.x + self.w / 2.0

    @property
    def cy(self) -> float:
        return self.y + self.h / 2.0

    def center(self) -> tuple[float, float]:
        return (self.cx, self.cy)

    def area(self) -> float:
        return self.w * self.h

    def to_cxcyah(self) -> tuple[float, float, float, float]:
        """(center x, center y, aspect ratio w/h, height)."""
        return (self.cx, self.cy, self.w / self.h, self.h)

    @classmethod
    def from_cxcyah(cls, cx: float, cy: float, a: float, h: float) -> "BBox":
        w = a * h
        return cls(cx - w / 2.0, cy - h / 2.0, w, h)


def iou(a: BBox, b: BBox) -> float:
    """Intersection-over-union of two boxes, in [0, 1]."""
    ix = min(a.x + a.w, b.x + b.w) - max(a.x, b.x)
    iy = min(a.y + a.h, b.y + b.h) - max(a.y, b.y)
    if ix <= 0 or iy <= 0:
        return 0.0
    inter = ix * iy
    return inter / (a.area() + b.area() - inter)


@dataclass(frozen=True)
class Detection:
    """One observed target in one frame.

    ``motion_awareness`` is the normalized per-target displacement magnitude
    emitted by an upstream detector; ``embedding`` is a unit-norm appearance
    vector. Both are optional.
    """

    frame: int
    bbox: BBox
    score: float
    class_id: int = 0
    motion_awareness: float | None = None
    embedding: np.ndarray | None = None

    def __post_init__(self):
        if self.frame < 1:
            raise ValueError(f"frame must be >= 1, got {self.frame}")
        if not 0.0 <= self.score <= 1.0:
            raise ValueError(f"score must be in [0,1], got {self.score}")
        if self.class_id < 0:
            raise ValueError(f"class_id must be >= 0, got {self.class_id}")
        if self.motion_awareness is not None and not 0.0 <= self.motion_awareness <= 1.0:
            raise ValueError(f"motion_awareness must be in [0,1], got {self.motion_awareness}")
        if self.embedding is not None:
            emb = np.asarray(self.embedding, dtype=float)
            n = float(np.linalg.norm(emb))
            if abs(n - 1.0) > 1e-6:
                raise ValueError(f"embedding must be unit norm, got norm {n}")
            object.__setattr__(self, "embedding", emb)


@dataclass(frozen=True)
class TrajectorySet:
    """Finalized per-sequence tracking output.

    ``tracks`` maps each unique track id to its (frame, box) sequence with
    strictly increasing frames.
    """

    tracks: tuple[tuple[int, tuple[tuple[int, BBox], ...]], ...] = ()

    @classmethod
    def build(cls, tracks) -> "TrajectorySet":
        frozen = tuple((int(tid), tuple((int(f), b) for f, b in seq)) for tid, seq in tracks)
        ids = [tid for tid, _ in frozen]
        if len(ids) != len(set(ids)):
            raise ValueError("duplicate track ids")
        for tid, seq in frozen:
            frames = [f for f, _ in seq]
            if any(f2 <= f1 for f1, f2 in zip(frames, frames[1:])):
                raise ValueError(f"track {tid} frames not strictly increasing")
        return cls(frozen)

    def __len__(self) -> int:
        return len(self.tracks)

    def num_boxes(self) -> int:
        return sum(len(seq) for _, seq in self.tracks)

    def frames(self) -> list[int]:
        out = sorted({f for _, seq in self.tracks for f, _ in seq})
        return out

    def boxes_by_frame(self) -> dict[int, list[tuple[int, BBox]]]:
        """frame -> list of (track id, box), in track-id order."""
        out: dict[int, list[tuple[int, BBox]]] = {}
        for tid, seq in self.tracks:
            for f, b in seq:
                out.setdefault(f, []).append((tid, b))
        return {f: out[f] for f in sorted(out)}

    def by_id(self) -> dict[int, dict[int, BBox]]:
        return {tid: {f: b for f, b in seq} for tid, seq in self.tracks}


@dataclass(frozen=True)
class FrameWindow:
    """A window of consecutive frame indices used to scope feature generation."""

    window_size: int
    frames: tuple[int, ...]

    def __post_init__(self):
        if self.window_size < 1:
            raise ValueError("window_size must be >= 1")
        if len(self.frames) != self.window_size:
            raise ValueError("frame count must equal window_size")
        if any(b - a != 1 for a, b in zip(self.frames, self.frames[1:])):
            raise ValueError("frames must be consecutive")
