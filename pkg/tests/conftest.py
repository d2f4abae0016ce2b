import numpy as np


def fit_order(residuals):
    """Least-squares slope of log2(residual) against refinement level."""
    residuals = np.asarray(residuals, dtype=float)
    levels = np.arange(len(residuals))
    slope = np.polyfit(levels, np.log2(residuals), 1)[0]
    return -slope


def rotation_field_z(angles):
    """Stacked rotations about e3 by the given angles."""
    angles = np.asarray(angles, dtype=float)
    rot = np.zeros(angles.shape + (3, 3))
    rot[..., 0, 0] = np.cos(angles)
    rot[..., 0, 1] = -np.sin(angles)
    rot[..., 1, 0] = np.sin(angles)
    rot[..., 1, 1] = np.cos(angles)
    rot[..., 2, 2] = 1.0
    return rot
