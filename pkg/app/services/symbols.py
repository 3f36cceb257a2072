"""Smooth compactly supported profiles shared by windows, bells and test bumps."""
import numpy as np


def exp_decay(u: np.ndarray) -> np.ndarray:
    """exp(-1/u) for u > 0, zero otherwise."""
    u = np.asarray(u, dtype=float)
    out = np.zeros_like(u)
    positive = u > 0
    out[positive] = np.exp(-1.0 / u[positive])
    return out


def smooth_step(u: np.ndarray) -> np.ndarray:
    """C-infinity step: 0 for u <= 0, 1 for u >= 1."""
    a = exp_decay(u)
    b = exp_decay(1.0 - np.asarray(u, dtype=float))
    return a / (a + b)


def bump(t: np.ndarray) -> np.ndarray:
    """chi(t) = exp(1 - 1/(1 - t^2)) for |t| < 1, chi(0) = 1."""
    t = np.abs(np.asarray(t, dtype=float))
    out = np.zeros_like(t)
    inside = t < 1
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - t[inside] ** 2))
    return out


def dyadic_profile(t: np.ndarray) -> np.ndarray:
    """rho(t) = 1 for t <= 1/2, 0 for t >= 1."""
    return smooth_step(2.0 - 2.0 * np.asarray(t, dtype=float))


def plateau(t: np.ndarray, r: float) -> np.ndarray:
    """1 on |t| <= r/4, supported in |t| < r/2."""
    return smooth_step((r / 2 - np.abs(np.asarray(t, dtype=float))) / (r / 4))


def bell(t: np.ndarray, flank: float) -> np.ndarray:
    """Supported in (0, 1), equal to 1 on [flank, 1 - flank]."""
    t = np.asarray(t, dtype=float)
    return smooth_step(t / flank) * smooth_step((1.0 - t) / flank)
