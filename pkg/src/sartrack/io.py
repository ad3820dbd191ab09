"""File formats: MOTChallenge CSV (with an optional motion-awareness column),
embedding and camera-motion sidecars, flat key=value configs, raw tensor
files, and PGM/PPM images.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .core import BBox, Detection, TrajectorySet
from .motion import Affine2x3

TENSOR_MAGIC = b"VSFM"


class ParseError(ValueError):
    def __init__(self, path, line_no, msg):
        super().__init__(f"{path}:{line_no}: {msg}")
        self.path = str(path)
        self.line_no = line_no


def _fmt(v: float) -> str:
    f = float(v)
    if f == int(f) and abs(f) < 1e15:
        return str(int(f))
    return repr(f)


@dataclass(frozen=True)
class MotRecord:
    frame: int
    track_id: int
    x: float
    y: float
    w: float
    h: float
    conf: float
    class_id: int
    visibility: float
    motion_awareness: float | None = None

    def render(self) -> str:
        parts = [str(self.frame), str(self.track_id),
                 _fmt(self.x), _fmt(self.y), _fmt(self.w), _fmt(self.h),
                 _fmt(self.conf), str(self.class_id), _fmt(self.visibility)]
        if self.motion_awareness is not None:
            parts.append(_fmt(self.motion_awareness))
        return ",".join(parts)

    def bbox(self) -> BBox:
        return BBox(self.x, self.y, self.w, self.h)


def parse_mot_file(path) -> list[MotRecord]:
    """Records sorted by frame (stable); 9 or 10 comma-separated columns."""
    records = []
    with open(path, "r", encoding="ascii") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            fields = line.split(",")
            if len(fields) not in (9, 10):
                raise ParseError(path, line_no, f"expected 9 or 10 columns, got {len(fields)}")
            try:
                vals = [float(f) for f in fields]
            except ValueError:
                raise ParseError(path, line_no, f"non-numeric field in {line!r}") from None
            if not all(np.isfinite(vals)):
                raise ParseError(path, line_no, "non-finite value")
            frame = int(vals[0])
            if frame < 1:
                raise ParseError(path, line_no, f"frame must be >= 1, got {frame}")
            if vals[4] <= 0 or vals[5] <= 0:
                raise ParseError(path, line_no, f"nonpositive box size {vals[4]}x{vals[5]}")
            ma = vals[9] if len(vals) == 10 else None
            records.append(MotRecord(frame, int(vals[1]), vals[2], vals[3], vals[4],
                                     vals[5], vals[6], int(vals[7]), vals[8], ma))
    records.sort(key=lambda r: r.frame)
    return records


def records_to_detections(records: list[MotRecord],
                          embeddings: dict | None = None) -> dict[int, list[Detection]]:
    """Group records into per-frame Detection lists.

    ``embeddings`` maps (frame, index within that frame) to a unit vector.
    """
    embeddings = embeddings or {}
    out: dict[int, list[Detection]] = {}
    for r in records:
        idx = len(out.setdefault(r.frame, []))
        out[r.frame].append(Detection(
            frame=r.frame,
            bbox=r.bbox(),
            score=min(max(r.conf, 0.0), 1.0),
            class_id=max(r.class_id, 0),
            motion_awareness=r.motion_awareness,
            embedding=embeddings.get((r.frame, idx)),
        ))
    return out


def records_to_trajectories(records: list[MotRecord]) -> TrajectorySet:
    tracks: dict[int, list] = {}
    for r in records:
        tracks.setdefault(r.track_id, []).append((r.frame, r.bbox()))
    for seq in tracks.values():
        seq.sort(key=lambda fb: fb[0])
    return TrajectorySet.build(sorted(tracks.items()))


def write_mot_file(tset: TrajectorySet, path) -> None:
    """One line per box, frame-major, conf 1, class and visibility -1."""
    lines = []
    for frame, boxes in tset.boxes_by_frame().items():
        for tid, b in boxes:
            lines.append(MotRecord(frame, tid, b.x, b.y, b.w, b.h, 1, -1, -1).render())
    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n".join(lines))
        if lines:
            fh.write("\n")


def parse_embeddings(path) -> dict[tuple[int, int], np.ndarray]:
    """Lines of `frame det_index v1 ... vd`; vectors are L2-normalized."""
    out: dict[tuple[int, int], np.ndarray] = {}
    dim = None
    with open(path, "r", encoding="ascii") as fh:
        for line_no, line in enumerate(fh, start=1):
            fields = line.split()
            if not fields:
                continue
            try:
                frame = int(fields[0])
                idx = int(fields[1])
                vec = np.array([float(f) for f in fields[2:]])
            except (ValueError, IndexError):
                raise ParseError(path, line_no, "malformed embedding line") from None
            if vec.size == 0 or not np.all(np.isfinite(vec)):
                raise ParseError(path, line_no, "empty or non-finite embedding")
            if dim is None:
                dim = vec.size
            elif vec.size != dim:
                raise ParseError(path, line_no,
                                 f"dimension {vec.size} != first dimension {dim}")
            n = np.linalg.norm(vec)
            if n == 0:
                raise ParseError(path, line_no, "zero embedding cannot be normalized")
            out[(frame, idx)] = vec / n
    return out


def write_embeddings(emb: dict[tuple[int, int], np.ndarray], path) -> None:
    with open(path, "w", encoding="ascii") as fh:
        for (frame, idx) in sorted(emb):
            vec = " ".join(_fmt(v) for v in emb[(frame, idx)])
            fh.write(f"{frame} {idx} {vec}\n")


def parse_cmc_file(path) -> dict[int, Affine2x3]:
    """Lines of `frame r11 r12 tx r21 r22 ty`; missing frames mean identity."""
    out: dict[int, Affine2x3] = {}
    with open(path, "r", encoding="ascii") as fh:
        for line_no, line in enumerate(fh, start=1):
            fields = line.split()
            if not fields:
                continue
            if len(fields) != 7:
                raise ParseError(path, line_no, f"expected 7 fields, got {len(fields)}")
            try:
                frame = int(fields[0])
                v = [float(f) for f in fields[1:]]
            except ValueError:
                raise ParseError(path, line_no, "non-numeric field") from None
            out[frame] = Affine2x3(np.array(v).reshape(2, 3))
    return out


def parse_config(path) -> dict[str, str]:
    """Flat `key = value` lines; blank lines and `#` comments allowed."""
    out: dict[str, str] = {}
    with open(path, "r", encoding="ascii") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ParseError(path, line_no, f"expected `key = value`, got {line!r}")
            key, _, val = line.partition("=")
            out[key.strip()] = val.strip()
    return out


# Raw tensor format: magic, u32 H W C little-endian, then C planes of H*W
# float64 little-endian row-major.

def write_tensor(x: np.ndarray, path) -> None:
    x = np.asarray(x, dtype=float)
    if x.ndim == 2:
        x = x[:, :, None]
    h, w, c = x.shape
    with open(path, "wb") as fh:
        fh.write(TENSOR_MAGIC)
        fh.write(struct.pack("<III", h, w, c))
        fh.write(np.ascontiguousarray(x.transpose(2, 0, 1), dtype="<f8").tobytes())


def read_tensor(path) -> np.ndarray:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != TENSOR_MAGIC:
            raise ValueError(f"{path}: bad tensor magic {magic!r}")
        h, w, c = struct.unpack("<III", fh.read(12))
        data = np.frombuffer(fh.read(8 * h * w * c), dtype="<f8")
    if data.size != h * w * c:
        raise ValueError(f"{path}: truncated tensor payload")
    return data.reshape(c, h, w).transpose(1, 2, 0).copy()


def read_pgm(path) -> np.ndarray:
    """Binary 8-bit PGM (P5) as a (H, W) uint8 array."""
    with open(path, "rb") as fh:
        data = fh.read()
    tokens = []
    i = 0
    while len(tokens) < 4:
        while i < len(data) and data[i:i + 1].isspace():
            i += 1
        if data[i:i + 1] == b"#":
            while i < len(data) and data[i] != 0x0A:
                i += 1
            continue
        start = i
        while i < len(data) and not data[i:i + 1].isspace():
            i += 1
        tokens.append(data[start:i])
    if tokens[0] != b"P5":
        raise ValueError(f"{path}: not a binary PGM")
    w, h, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
    if maxval != 255:
        raise ValueError(f"{path}: only 8-bit PGM supported")
    pixels = np.frombuffer(data[i + 1:i + 1 + w * h], dtype=np.uint8)
    if pixels.size != w * h:
        raise ValueError(f"{path}: truncated pixel data")
    return pixels.reshape(h, w).copy()


def write_pgm(img: np.ndarray, path) -> None:
    img = np.asarray(img, dtype=np.uint8)
    h, w = img.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(img.tobytes())


def write_ppm(img: np.ndarray, path) -> None:
    img = np.asarray(img, dtype=np.uint8)
    h, w, _ = img.shape
    with open(path, "wb") as fh:
        fh.write(f"P6\n{w} {h}\n255\n".encode("ascii"))
        fh.write(img.tobytes())


def to_uint8(x: np.ndarray) -> np.ndarray:
    """Min-max normalize any real array to 8-bit."""
    x = np.asarray(x, dtype=float)
    lo, hi = x.min(), x.max()
    if hi <= lo:
        return np.zeros(x.shape, dtype=np.uint8)
    return np.round((x - lo) / (hi - lo) * 255).astype(np.uint8)


def id_color(track_id: int) -> tuple[int, int, int]:
    """Deterministic, well-spread id -> RGB mapping (splitmix-style hash)."""
    z = (track_id * 0x9E3779B97F4A7C15) & 0xFFFFFFFFFFFFFFFF
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & 0xFFFFFFFFFFFFFFFF
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & 0xFFFFFFFFFFFFFFFF
    z ^= z >> 31
    r = 64 + (z & 0xFF) * 3 // 4
    g = 64 + ((z >> 8) & 0xFF) * 3 // 4
    b = 64 + ((z >> 16) & 0xFF) * 3 // 4
    return (int(r), int(g), int(b))


def render_frame(canvas: np.ndarray, boxes: list[tuple[int, BBox]], path) -> None:
    """Overlay 1-pixel box outlines (color-hashed by id) on a grayscale
    canvas and write a binary PPM."""
    gray = np.asarray(canvas, dtype=np.uint8)
    h, w = gray.shape
    rgb = np.repeat(gray[:, :, None], 3, axis=2).copy()
    for tid, b in boxes:
        color = id_color(tid)
        x0 = max(0, round(b.x))
        y0 = max(0, round(b.y))
        x1 = min(w - 1, round(b.x + b.w) - 1)
        y1 = min(h - 1, round(b.y + b.h) - 1)
        if x1 < x0 or y1 < y0:
            continue
        rgb[y0, x0:x1 + 1] = color
        rgb[y1, x0:x1 + 1] = color
        rgb[y0:y1 + 1, x0] = color
        rgb[y0:y1 + 1, x1] = color
    write_ppm(rgb, path)
