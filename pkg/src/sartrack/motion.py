"""Constant-velocity Kalman filtering on (cx, cy, a, h) boxes plus global
camera-motion compensation of predicted states.

Noise scaling follows the SORT/ByteTrack convention: position stds weighted
by h/20, velocity stds by h/160 (configurable via NoiseProfile).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Affine2x3:
    """2x3 matrix [R|t] mapping a point p to R @ p + t."""

    m: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.m, dtype=float)
        if m.shape != (2, 3):
            raise ValueError(f"expected 2x3 matrix, got {m.shape}")
        if not np.all(np.isfinite(m)):
            raise ValueError("affine matrix contains non-finite values")
        object.__setattr__(self, "m", m)

    @classmethod
    def identity(cls) -> "Affine2x3":
        return cls(np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]))

    @property
    def rot(self) -> np.ndarray:
        return self.m[:, :2]

    @property
    def t(self) -> np.ndarray:
        return self.m[:, 2]

    def apply(self, point) -> np.ndarray:
        return self.rot @ np.asarray(point, dtype=float) + self.t

    def is_identity(self) -> bool:
        return bool(np.array_equal(self.m, [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]))


@dataclass(frozen=True)
class NoiseProfile:
    std_weight_position: float = 1.0 / 20.0
    std_weight_velocity: float = 1.0 / 160.0


DEFAULT_NOISE = NoiseProfile()

# State layout: (cx, cy, a, h, vcx, vcy, va, vh)
_F = np.eye(8)
_F[:4, 4:] = np.eye(4)
_H = np.eye(4, 8)


@dataclass(frozen=True)
class KalmanState:
    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float)
        cov = np.asarray(self.cov, dtype=float)
        if mean.shape != (8,) or cov.shape != (8, 8):
            raise ValueError("state must be an 8-vector with 8x8 covariance")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    def position(self) -> np.ndarray:
        return self.mean[:4]

    def speed(self) -> float:
        return float(np.hypot(self.mean[4], self.mean[5]))


def kf_init(measurement, noise: NoiseProfile = DEFAULT_NOISE) -> KalmanState:
    """Start a track from one (cx, cy, a, h) measurement, zero velocity."""
    z = np.asarray(measurement, dtype=float)
    h = z[3]
    if h <= 0:
        raise ValueError(f"height must be positive, got {h}")
    mean = np.zeros(8)
    mean[:4] = z
    wp, wv = noise.std_weight_position, noise.std_weight_velocity
    std = np.array([2 * wp * h, 2 * wp * h, 1e-2, 2 * wp * h,
                    10 * wv * h, 10 * wv * h, 1e-5, 10 * wv * h])
    return KalmanState(mean, np.diag(std ** 2))


def _process_noise(h: float, noise: NoiseProfile) -> np.ndarray:
    wp, wv = noise.std_weight_position, noise.std_weight_velocity
    std = np.array([wp * h, wp * h, 1e-2, wp * h,
                    wv * h, wv * h, 1e-5, wv * h])
    return np.diag(std ** 2)


def kf_predict(s: KalmanState, noise: NoiseProfile = DEFAULT_NOISE) -> KalmanState:
    """Unit-timestep constant-velocity prediction."""
    h = s.mean[3]
    mean = _F @ s.mean
    cov = _F @ s.cov @ _F.T + _process_noise(h, noise)
    return KalmanState(mean, 0.5 * (cov + cov.T))


def kf_update(s: KalmanState, measurement,
              noise: NoiseProfile = DEFAULT_NOISE) -> KalmanState:
    """Standard Kalman correction with H = [I4 0]."""
    z = np.asarray(measurement, dtype=float)
    h = s.mean[3]
    wp = noise.std_weight_position
    r_std = np.array([wp * h, wp * h, 1e-1, wp * h])
    r = np.diag(r_std ** 2)
    innov_cov = _H @ s.cov @ _H.T + r
    try:
        gain = np.linalg.solve(innov_cov.T, (s.cov @ _H.T).T).T
    except np.linalg.LinAlgError as e:
        raise ValueError("singular innovation covariance") from e
    mean = s.mean + gain @ (z - _H @ s.mean)
    cov = (np.eye(8) - gain @ _H) @ s.cov
    return KalmanState(mean, 0.5 * (cov + cov.T))


def apply_cmc(states: list[KalmanState], m: Affine2x3) -> list[KalmanState]:
    """Carry states into the current frame's geometry.

    Centers get the full affine; center velocities are rotated only; aspect
    and height are untouched. The position covariance block is rotated.
    """
    if m.is_identity():
        return list(states)
    rot, t = m.rot, m.t
    out = []
    for s in states:
        mean = s.mean.copy()
        mean[:2] = rot @ s.mean[:2] + t
        mean[4:6] = rot @ s.mean[4:6]
        cov = s.cov.copy()
        cov[:2, :2] = rot @ s.cov[:2, :2] @ rot.T
        out.append(KalmanState(mean, cov))
    return out
