"""Geometry and free-space path-loss primitives shared by all solvers.

Pure functions; scalar forms here, vectorized forms where the caller
broadcasts numpy arrays directly.
"""

from __future__ import annotations

import math

import numpy as np

from .scenario import NoFlyZone


def link_distance(q, w, altitude: float) -> float:
    """3D distance between a UAV at horizontal position q and ground point w."""
    dx = q[0] - w[0]
    dy = q[1] - w[1]
    return math.sqrt(dx * dx + dy * dy + altitude * altitude)


def channel_gain(q, w, altitude: float, ref_gain: float) -> float:
    """Free-space power gain ref_gain / (|q - w|^2 + altitude^2)."""
    dx = q[0] - w[0]
    dy = q[1] - w[1]
    return ref_gain / (dx * dx + dy * dy + altitude * altitude)


def inside_nfz(q, zone: NoFlyZone) -> bool:
    """True iff q is strictly inside the zone's ground disk (boundary is allowed)."""
    dx = q[0] - zone.center[0]
    dy = q[1] - zone.center[1]
    return dx * dx + dy * dy < zone.radius * zone.radius


def gains_along(Q: np.ndarray, points: np.ndarray, altitude: float, ref_gain: float) -> np.ndarray:
    """Channel gains from waypoints Q (M, N+1, 2) to ground points (K, 2).

    Returns (N, M, K): gains at transmission slots 1..N (waypoint index n
    carries slot n; index 0 is the launch point and carries no traffic).
    """
    pos = Q[:, 1:, :]  # (M, N, 2)
    diff = pos[:, :, None, :] - points[None, None, :, :]
    d2 = np.einsum("mnkd,mnkd->mnk", diff, diff) + altitude * altitude
    return np.transpose(ref_gain / d2, (1, 0, 2))
