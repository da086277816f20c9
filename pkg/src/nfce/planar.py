"""Planar-array extension of the delay-profile symmetry decoupling.

For a uniform planar array the quadratic (Fresnel) delay map over element
indices (n_r, n_c) is

    eta = r + d - dr*s*alpha + dr^2 s^2 (1-alpha^2)/(2d)
                - dc*s*beta  + dc^2 s^2 (1-beta^2)/(2d)

with dr, dc the symmetric index offsets and (alpha, beta) the direction
sines along the two axes.  Reflections along rows/columns cancel the even
terms and isolate alpha and beta; a half-aperture shift along both axes
isolates 1/d; the double reflection sum isolates r.  This mirrors the linear
decoupling used on the line array, assuming an idealized full per-element
delay map (one delay per antenna, no subarray aggregation).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import index_offsets


@dataclass(frozen=True)
class UpaGeometry:
    """Uniform planar array on a rectangular lambda/2 lattice."""

    n_rows: int
    n_cols: int
    carrier_hz: float = 7e9
    spacing_m: float | None = None

    def __post_init__(self):
        if self.n_rows < 2 or self.n_cols < 2:
            raise ValueError("planar array needs at least 2x2 elements")
        if self.spacing_m is None:
            from .model import SPEED_OF_LIGHT

            object.__setattr__(
                self, "spacing_m", SPEED_OF_LIGHT / (2.0 * self.carrier_hz)
            )

    @property
    def row_offsets(self) -> np.ndarray:
        return index_offsets(self.n_rows)

    @property
    def col_offsets(self) -> np.ndarray:
        return index_offsets(self.n_cols)


def upa_delay_profile(alpha: float, beta: float, dist_m: float, range_m: float,
                      upa: UpaGeometry) -> np.ndarray:
    """Fresnel total-distance map (meters), shape (n_rows, n_cols)."""
    if alpha * alpha + beta * beta >= 1.0:
        raise ValueError("direction sines must satisfy alpha^2 + beta^2 < 1")
    if dist_m <= 0:
        raise ValueError("distance must be positive")
    s = upa.spacing_m
    dr = upa.row_offsets[:, None] * s
    dc = upa.col_offsets[None, :] * s
    curve = (dr * dr * (1.0 - alpha * alpha) + dc * dc * (1.0 - beta * beta)) / (
        2.0 * dist_m
    )
    return range_m + dist_m - dr * alpha - dc * beta + curve


def upa_decouple(eta: np.ndarray, upa: UpaGeometry
                 ) -> tuple[float, float, float, float]:
    """Recover (alpha, beta, d, r) from a per-element delay map.

    Requires even n_rows and n_cols.  Raises on degenerate difference sets
    (direction sines with |alpha| or |beta| at 1, or a vanishing curvature
    combination).
    """
    Nr, Nc = upa.n_rows, upa.n_cols
    if eta.shape != (Nr, Nc):
        raise ValueError(f"delay map must be {Nr}x{Nc}, got {eta.shape}")
    if Nr % 2 or Nc % 2:
        raise ValueError("decoupling requires even element counts per axis")
    s = upa.spacing_m
    dr = upa.row_offsets
    dc = upa.col_offsets

    # reflection along rows: eta[Nr-1-i, j] - eta[i, j] = 2 dr_i s alpha
    diff_r = eta[::-1, :] - eta
    x_r = np.broadcast_to(2.0 * dr[:, None] * s, diff_r.shape)
    alpha = float(np.sum(x_r * diff_r) / np.sum(x_r * x_r))

    diff_c = eta[:, ::-1] - eta
    x_c = np.broadcast_to(2.0 * dc[None, :] * s, diff_c.shape)
    beta = float(np.sum(x_c * diff_c) / np.sum(x_c * x_c))
    if not (abs(alpha) < 1.0 and abs(beta) < 1.0 and alpha**2 + beta**2 < 1.0):
        raise ValueError("degenerate direction-sine estimates")

    # half-aperture shift along both axes isolates the curvature 1/d
    hr, hc = Nr // 2, Nc // 2
    shift = eta[hr:, hc:] - eta[:hr, :hc]
    drh = dr[:hr][:, None]
    dch = dc[:hc][None, :]
    z = shift + hr * s * alpha + hc * s * beta
    q = (s * s / 2.0) * (
        (1.0 - alpha * alpha) * (Nr * drh + Nr * Nr / 4.0)
        + (1.0 - beta * beta) * (Nc * dch + Nc * Nc / 4.0)
    )
    q = np.broadcast_to(q, z.shape)
    denom = float(np.sum(z * z))
    if denom <= 0.0 or not np.isfinite(denom):
        raise ValueError("degenerate curvature differences")
    dist = float(np.sum(z * q) / denom)
    if dist <= 0.0 or not np.isfinite(dist):
        raise ValueError("curvature fit produced a non-physical distance")

    # double reflection sum isolates r once d is known
    even = 0.5 * (eta[::-1, ::-1] + eta)
    curve = (
        (1.0 - alpha * alpha) * (dr[:, None] * s) ** 2
        + (1.0 - beta * beta) * (dc[None, :] * s) ** 2
    ) / (2.0 * dist)
    rng = float(np.mean(even - curve - dist))
    return alpha, beta, dist, rng
