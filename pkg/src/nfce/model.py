"""Geometry and wideband channel synthesis for subarrayed uniform linear arrays.

Everything downstream (frontend, estimator, bounds) is built on the quantities
defined here: symmetric index offsets, exact and Fresnel propagation distances,
frequency-domain phase profiles, and the per-subarray delay structure that the
estimator exploits.

Conventions
-----------
* ``theta`` is the sine of the physical angle, in (-1, 1).
* ``dist_m`` is the distance from the array center to the scatterer (the
  geometry that bends the wavefront across the aperture).
* ``range_m`` is the remaining propagation distance of the path, so the total
  path length seen by antenna ``n`` is ``range_m + d_n(theta, dist_m)``.
* Delays are expressed as dimensionless fractions of the OFDM symbol,
  ``tau = delay_seconds * subcarrier_spacing``; the usable range is [0, 1).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

SPEED_OF_LIGHT = 299_792_458.0  # m/s


def index_offsets(count: int) -> np.ndarray:
    """Symmetric element offsets ``i - (count + 1) / 2`` for ``i = 1..count``.

    For even ``count`` these are half-integers (e.g. count=4 gives
    [-1.5, -0.5, 0.5, 1.5]); the mean is always exactly zero.
    """
    if count < 1:
        raise ValueError(f"count must be positive, got {count}")
    return np.arange(1, count + 1, dtype=float) - (count + 1) / 2.0


@dataclass(frozen=True)
class ArrayGeometry:
    """Uniform linear array split into equal contiguous subarrays.

    ``spacing_m=None`` selects half-wavelength spacing at the carrier.
    """

    n_antennas: int
    n_subarrays: int
    carrier_hz: float = 7.0e9
    spacing_m: float | None = None

    def __post_init__(self):
        if self.n_antennas <= 0 or self.n_subarrays <= 0:
            raise ValueError("n_antennas and n_subarrays must be positive")
        if self.n_antennas % self.n_subarrays != 0:
            raise ValueError(
                f"n_subarrays ({self.n_subarrays}) must divide "
                f"n_antennas ({self.n_antennas})"
            )
        if self.carrier_hz <= 0:
            raise ValueError("carrier_hz must be positive")
        if self.spacing_m is None:
            object.__setattr__(
                self, "spacing_m", SPEED_OF_LIGHT / (2.0 * self.carrier_hz)
            )
        elif self.spacing_m <= 0:
            raise ValueError("spacing_m must be positive")

    @property
    def subarray_size(self) -> int:
        return self.n_antennas // self.n_subarrays

    @property
    def antenna_offsets(self) -> np.ndarray:
        """Signed antenna offsets delta_{N,n} (unitless, scale by spacing_m)."""
        return index_offsets(self.n_antennas)

    @property
    def subarray_offsets(self) -> np.ndarray:
        """Signed subarray-center offsets delta_{K,k} in units of the
        subarray pitch ``subarray_size * spacing_m``."""
        return index_offsets(self.n_subarrays)

    @property
    def subarray_pitch_m(self) -> float:
        return self.subarray_size * self.spacing_m

    @property
    def aperture_m(self) -> float:
        return (self.n_antennas - 1) * self.spacing_m

    def subarray_slice(self, k: int) -> slice:
        """Row slice of subarray ``k`` (0-based) into length-N arrays."""
        if not 0 <= k < self.n_subarrays:
            raise ValueError(f"subarray index {k} out of range")
        ns = self.subarray_size
        return slice(k * ns, (k + 1) * ns)


@dataclass(frozen=True)
class SubcarrierGrid:
    """OFDM frequency grid: ``n_subcarriers`` tones spaced ``spacing_hz``."""

    n_subcarriers: int
    spacing_hz: float

    def __post_init__(self):
        if self.n_subcarriers <= 0:
            raise ValueError("n_subcarriers must be positive")
        if self.spacing_hz <= 0:
            raise ValueError("spacing_hz must be positive")

    @classmethod
    def from_bandwidth(cls, n_subcarriers: int, bandwidth_hz: float) -> "SubcarrierGrid":
        return cls(n_subcarriers, bandwidth_hz / n_subcarriers)

    @property
    def bandwidth_hz(self) -> float:
        return self.n_subcarriers * self.spacing_hz

    @property
    def freq_offsets_hz(self) -> np.ndarray:
        """Baseband frequency of each subcarrier, symmetric around 0."""
        return index_offsets(self.n_subcarriers) * self.spacing_hz


@dataclass
class PathParams:
    """One propagation path: sine-angle, bend distance, residual range, gain."""

    theta: float
    dist_m: float
    range_m: float
    gain: complex = 1.0 + 0.0j

    def __post_init__(self):
        if not -1.0 < self.theta < 1.0:
            raise ValueError(f"theta must lie in (-1, 1), got {self.theta}")
        if self.dist_m <= 0:
            raise ValueError(f"dist_m must be positive, got {self.dist_m}")
        if self.range_m < 0:
            raise ValueError(f"range_m must be non-negative, got {self.range_m}")

    @property
    def total_m(self) -> float:
        """Center-of-array path length range_m + dist_m."""
        return self.range_m + self.dist_m


def exact_distances(theta: float, dist_m: float, geom: ArrayGeometry) -> np.ndarray:
    """Per-antenna propagation distance d_n for a spherical wavefront.

    d_n = sqrt(d^2 - 2 d delta_n s theta + delta_n^2 s^2), the law of cosines
    with the source at distance ``dist_m`` and sine-angle ``theta`` from the
    array normal.
    """
    delta = geom.antenna_offsets * geom.spacing_m
    return np.sqrt(dist_m * dist_m - 2.0 * dist_m * delta * theta + delta * delta)


def fresnel_deltas(theta: float, dist_m: float, geom: ArrayGeometry) -> np.ndarray:
    """Second-order (Fresnel) expansion of d_n - dist_m across the aperture."""
    delta = geom.antenna_offsets * geom.spacing_m
    return -delta * theta + delta * delta * (1.0 - theta * theta) / (2.0 * dist_m)


def distance_deltas(
    theta: float, dist_m: float, geom: ArrayGeometry, model: str = "exact"
) -> np.ndarray:
    """d_n - dist_m under the chosen wavefront model ("exact" or "fresnel")."""
    if model == "exact":
        return exact_distances(theta, dist_m, geom) - dist_m
    if model == "fresnel":
        return fresnel_deltas(theta, dist_m, geom)
    raise ValueError(f"unknown wavefront model {model!r}")


def steering_vector(
    theta: float, dist_m: float, geom: ArrayGeometry, model: str = "exact"
) -> np.ndarray:
    """Near-field array response at the carrier, unit-modulus entries.

    w_n = exp(j 2 pi f_c (d_n - d) / c).  ``model`` picks the exact spherical
    distances or their Fresnel approximation.
    """
    dd = distance_deltas(theta, dist_m, geom, model)
    return np.exp(2j * np.pi * geom.carrier_hz / SPEED_OF_LIGHT * dd)


def freq_profile(dist_arg_m: float, range_arg_m: float, grid: SubcarrierGrid) -> np.ndarray:
    """Frequency-domain phase profile of a propagation length.

    p_m = exp(j 2 pi delta_m df (range_arg + dist_arg) / c).  Only the sum of
    the two arguments matters; they are kept separate because callers combine
    partial lengths (e.g. a subarray-center distance with a negative
    reference).
    """
    total = range_arg_m + dist_arg_m
    return np.exp(
        2j * np.pi / SPEED_OF_LIGHT * grid.freq_offsets_hz * total
    )


def delay_steering(tau: float, n_subcarriers: int) -> np.ndarray:
    """Delay-domain steering vector b(tau)_m = exp(j 2 pi delta_m tau).

    ``tau`` is a dimensionless symbol-fraction delay; b is 1-periodic in tau
    up to a global sign when ``n_subcarriers`` is even (half-integer offsets).
    """
    return np.exp(2j * np.pi * index_offsets(n_subcarriers) * tau)


def squint_matrix(
    theta: float, dist_m: float, geom: ArrayGeometry, grid: SubcarrierGrid
) -> np.ndarray:
    """Per-antenna, per-subcarrier phase rotation caused by the aperture delay.

    Q[n, m] = exp(j 2 pi delta_m df (d_n - d) / c) with the exact distances;
    this is the frequency-selective part of the wavefront that a
    carrier-frequency combiner cannot absorb.
    """
    dd = exact_distances(theta, dist_m, geom) - dist_m
    phase = 2.0 * np.pi / SPEED_OF_LIGHT * np.outer(dd, grid.freq_offsets_hz)
    return np.exp(1j * phase)


def combined_gain(path: PathParams, geom: ArrayGeometry) -> complex:
    """Path gain with the center-of-array carrier phase folded in."""
    return path.gain * np.exp(
        2j * np.pi * geom.carrier_hz / SPEED_OF_LIGHT * path.total_m
    )


def subarray_centers(theta: float, dist_m: float, geom: ArrayGeometry):
    """Observed geometry of each subarray: center distance and sine-angle.

    Treating subarray k's center as a small array of its own, the wavefront
    there is locally described by

        d~_k = sqrt(d^2 - 2 delta_k d ns s theta + delta_k^2 ns^2 s^2)
        theta~_k = (d theta - delta_k ns s) / d~_k

    Returns ``(dist_k, theta_k)`` arrays of length n_subarrays.
    """
    pitch = geom.subarray_pitch_m
    delta = geom.subarray_offsets
    dist_k = np.sqrt(
        dist_m * dist_m - 2.0 * delta * dist_m * pitch * theta + delta * delta * pitch * pitch
    )
    theta_k = (dist_m * theta - delta * pitch) / dist_k
    return dist_k, theta_k


def subarray_squint_block(
    theta: float, dist_m: float, geom: ArrayGeometry, grid: SubcarrierGrid
) -> np.ndarray:
    """Piecewise-constant approximation of the squint matrix.

    Within subarray k every antenna shares the subarray-center extra distance
    d~_k - d, so rows of subarray k all equal p(d~_k, -d).  Shape (N, M).
    """
    dist_k, _ = subarray_centers(theta, dist_m, geom)
    rows = np.stack(
        [freq_profile(dk, -dist_m, grid) for dk in dist_k]
    )
    return np.repeat(rows, geom.subarray_size, axis=0)


def synthesize_channel(
    paths,
    geom: ArrayGeometry,
    grid: SubcarrierGrid,
    steering: str = "exact",
    squint: str = "exact",
) -> np.ndarray:
    """Multipath frequency-domain channel H of shape (N, M).

    H = sum_l rho_l (w_l p_l^T) .* Q_l with w the carrier-frequency steering
    (``steering`` in {"exact", "fresnel"}), p the frequency profile of the
    total path length, and Q the squint term (``squint`` in {"exact",
    "subarray", "none"}).  With everything exact this reproduces the physical
    model H[n, m] = g_l exp(j 2 pi f_m (r_l + d_n) / c) per path.
    """
    if squint not in ("exact", "subarray", "none"):
        raise ValueError(f"unknown squint model {squint!r}")
    H = np.zeros((geom.n_antennas, grid.n_subcarriers), dtype=complex)
    for path in paths:
        w = steering_vector(path.theta, path.dist_m, geom, steering)
        p = freq_profile(path.dist_m, path.range_m, grid)
        rank1 = np.outer(w, p)
        if squint == "exact":
            rank1 = rank1 * squint_matrix(path.theta, path.dist_m, geom, grid)
        elif squint == "subarray":
            rank1 = rank1 * subarray_squint_block(path.theta, path.dist_m, geom, grid)
        H += combined_gain(path, geom) * rank1
    return H


def antenna_delays(path: PathParams, geom: ArrayGeometry, grid: SubcarrierGrid) -> np.ndarray:
    """Per-antenna symbol-fraction delays tau_n = df (r + d_n) / c."""
    d_n = exact_distances(path.theta, path.dist_m, geom)
    return grid.spacing_hz / SPEED_OF_LIGHT * (path.range_m + d_n)


def subarray_delay_profile(
    theta: float,
    dist_m: float,
    range_m: float,
    geom: ArrayGeometry,
    grid: SubcarrierGrid,
    model: str = "exact",
) -> np.ndarray:
    """Symbol-fraction delay observed at each subarray center.

    ``model="exact"`` uses the spherical subarray-center distances;
    ``model="fresnel"`` uses the quadratic expansion

        eta_k = r + d - delta_k s' theta + delta_k^2 s'^2 (1-theta^2) / (2 d)

    whose affine-plus-even structure in delta_k is what the decoupling
    stages invert.
    """
    if model == "exact":
        dist_k, _ = subarray_centers(theta, dist_m, geom)
        total = range_m + dist_k
    elif model == "fresnel":
        pitch = geom.subarray_pitch_m
        delta = geom.subarray_offsets
        total = (
            range_m
            + dist_m
            - delta * pitch * theta
            + delta * delta * pitch * pitch * (1.0 - theta * theta) / (2.0 * dist_m)
        )
    else:
        raise ValueError(f"unknown wavefront model {model!r}")
    return grid.spacing_hz / SPEED_OF_LIGHT * total


def check_delay_validity(paths, geom: ArrayGeometry, grid: SubcarrierGrid) -> float:
    """Largest per-antenna delay across paths; raises if it reaches one symbol.

    Delays at or beyond one symbol-fraction alias onto the grid and the
    model stops being identifiable, so synthesis refuses to proceed.
    """
    worst = 0.0
    for path in paths:
        worst = max(worst, float(antenna_delays(path, geom, grid).max()))
    if worst >= 1.0:
        raise ValueError(
            f"path delay {worst:.3f} symbol-fractions >= 1; reduce ranges or "
            f"subcarrier spacing"
        )
    return worst
