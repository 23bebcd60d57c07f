"""Closed-form basins and boundaries for the classifier test fields."""

import numpy as np


def radial_inside(pts: np.ndarray, rho2: float = 0.36) -> np.ndarray:
    return np.sum(pts**2, axis=1) < rho2


def circle(radius: float, n: int = 4096) -> np.ndarray:
    a = np.linspace(0, 2 * np.pi, n, endpoint=False)
    return radius * np.stack([np.cos(a), np.sin(a)], axis=1)


def left_well_inside(pts: np.ndarray) -> np.ndarray:
    return pts[:, 0] < 0


def left_half_disk_boundary(n: int = 4096) -> np.ndarray:
    """The x2-axis diameter plus the left unit semicircle."""
    s = np.linspace(-1, 1, n)
    a = np.linspace(np.pi / 2, 3 * np.pi / 2, n)
    return np.concatenate([np.stack([np.zeros(n), s], axis=1), np.stack([np.cos(a), np.sin(a)], axis=1)])
