"""Delay-profile-symmetry (DPS) path estimator.

One iteration detects the strongest path's delay on the central subarray's
DFT grid, extrapolates it outward across subarrays with a tiny candidate
window, inverts the reflection symmetries of the resulting delay profile to
decouple (theta, dist, range), fits one complex gain per subarray, and
cancels the path from the residual.  A CFAR threshold on the central
correlation peak stops the iteration.

The computational kernels are free functions so that the message-passing
runtime (:mod:`nfce.runtime`) can execute the identical math in the identical
order — the equivalence between the two drivers is exact, not approximate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from nfce.model import (
    SPEED_OF_LIGHT,
    ArrayGeometry,
    SubcarrierGrid,
    index_offsets,
    steering_vector,
    subarray_centers,
)

# ---------------------------------------------------------------------------
# delay dictionary


@dataclass(frozen=True)
class DelayDictionary:
    """DFT delay grid with points tau_m = (2m-1)/(2M), m = 1..M.

    The implied atoms b(tau_m) are mutually orthogonal with ||b||^2 = M, so
    correlation against the whole grid is a scaled FFT.
    """

    size: int

    def __post_init__(self):
        if self.size < 2:
            raise ValueError("dictionary needs at least 2 grid points")

    @property
    def grid(self) -> np.ndarray:
        m = np.arange(1, self.size + 1, dtype=float)
        return (2.0 * m - 1.0) / (2.0 * self.size)

    def atom(self, tau: float) -> np.ndarray:
        return np.exp(2j * np.pi * index_offsets(self.size) * tau)


def grid_scores(y: np.ndarray, dictionary: DelayDictionary) -> np.ndarray:
    """|b(tau_m)^H y|^2 / M over the full grid, computed via one FFT.

    With delta_i = i - (M-1)/2 (0-based) and tau_m = (2m+1)/(2M) (0-based m):
    b^H y = e^{j pi (M-1)(2m+1)/(2M)} * FFT(y * e^{-j pi i / M})[m], so the
    magnitudes are an FFT of a pre-rotated copy of y.
    """
    M = dictionary.size
    if y.shape != (M,):
        raise ValueError(f"expected length-{M} vector, got {y.shape}")
    i = np.arange(M)
    pre = np.exp(-1j * np.pi * i / M)
    spectrum = np.fft.fft(y * pre)
    return np.abs(spectrum) ** 2 / M


def window_scores(y: np.ndarray, taus: np.ndarray, dictionary: DelayDictionary) -> np.ndarray:
    """|b(tau)^H y|^2 / M for a handful of off-grid candidates (direct)."""
    M = dictionary.size
    delta = index_offsets(M)
    atoms = np.exp(2j * np.pi * np.outer(np.asarray(taus, dtype=float), delta))
    return np.abs(atoms.conj() @ y) ** 2 / M


def ml_delay_detect(y: np.ndarray, dictionary: DelayDictionary):
    """Largest-correlation grid point: (0-based index, tau, score).

    Score is |b^H y|^2 / ||b||^2; ties resolve to the smallest index
    (np.argmax returns the first maximum).  A zero vector returns score 0.
    """
    scores = grid_scores(y, dictionary)
    idx = int(np.argmax(scores))
    return idx, float(dictionary.grid[idx]), float(scores[idx])


def max_hop(geom: ArrayGeometry, grid: SubcarrierGrid) -> int:
    """Largest grid-bin jump between adjacent subarrays' delays.

    M_s = ceil(B * subarray_size / (2 f_c)): the subarray pitch is
    ns*s = ns*c/(2 f_c) meters, i.e. ns*df/(2 f_c) symbol fractions of delay
    drift per subarray at worst (|theta|=1), which spans that many 1/M bins.
    A tiny epsilon keeps exact-integer ratios from rounding up.
    """
    ratio = grid.bandwidth_hz * geom.subarray_size / (2.0 * geom.carrier_hz)
    return max(1, math.ceil(ratio - 1e-12))


def extrapolate_step(
    y: np.ndarray, prev_tau: float, m_hop: int, dictionary: DelayDictionary
):
    """One serial hop: pick kappa in [-m_hop, m_hop] maximizing the score.

    Candidates are prev_tau + kappa/M; b() is 1-periodic so no explicit wrap
    is needed for the correlation.  Returns (kappa, unwrapped tau, score).
    Ties resolve to the most negative kappa (first maximum).
    """
    kappas = np.arange(-m_hop, m_hop + 1)
    cand = prev_tau + kappas / dictionary.size
    scores = window_scores(y, cand, dictionary)
    j = int(np.argmax(scores))
    return int(kappas[j]), float(cand[j]), float(scores[j])


def central_index(n_subarrays: int) -> int:
    """0-based index of the detection subarray, floor((K+1)/2) in 1-based."""
    if n_subarrays % 2 != 0:
        raise ValueError(f"subarray count must be even, got {n_subarrays}")
    return (n_subarrays + 1) // 2 - 1


@dataclass
class SubarrayDelayTrack:
    """Per-subarray delay profile from one detection + extrapolation pass."""

    taus_unwrapped: np.ndarray  # cumulative track, may leave [0, 1)
    kappas: np.ndarray  # int hops; 0 at the central subarray
    m_hop: int
    center: int  # 0-based central subarray
    grid_size: int

    @property
    def taus(self) -> np.ndarray:
        """Grid-valued delays wrapped to [0, 1)."""
        return np.mod(self.taus_unwrapped, 1.0)

    @property
    def grid_indices(self) -> np.ndarray:
        """0-based dictionary indices of the wrapped delays."""
        return np.mod(
            np.round(self.taus * self.grid_size - 0.5).astype(int), self.grid_size
        )

    def all_equal(self) -> bool:
        return bool(np.all(self.grid_indices == self.grid_indices[0]))


def extrapolate_delays(
    Y: np.ndarray,
    seed_tau: float,
    geom: ArrayGeometry,
    dictionary: DelayDictionary,
    m_hop: int | None = None,
) -> SubarrayDelayTrack:
    """Serial outward extrapolation of the central delay across subarrays.

    Ascending chain center -> K-1 and descending chain center -> 0, each hop
    evaluating exactly 2*m_hop+1 correlations on that subarray's row.
    """
    K = geom.n_subarrays
    kc = central_index(K)
    if m_hop is None:
        raise ValueError("m_hop is required (use max_hop(geom, grid))")
    taus = np.zeros(K)
    kappas = np.zeros(K, dtype=int)
    taus[kc] = seed_tau
    for k in range(kc + 1, K):
        kappas[k], taus[k], _ = extrapolate_step(Y[k], taus[k - 1], m_hop, dictionary)
    for k in range(kc - 1, -1, -1):
        kappas[k], taus[k], _ = extrapolate_step(Y[k], taus[k + 1], m_hop, dictionary)
    return SubarrayDelayTrack(taus, kappas, m_hop, kc, dictionary.size)


# ---------------------------------------------------------------------------
# parametric-symmetry decoupling (reflection differences / sums of the
# delay profile)


def decouple_angle(taus_unwrapped: np.ndarray, geom: ArrayGeometry, grid: SubcarrierGrid):
    """Sine-angle from the odd symmetry of the delay profile.

    Pairing subarray k with its mirror K-k+1 cancels every even term of the
    profile, leaving a difference linear in theta; an LS fit over the K/2
    pairs gives theta.  Returns (theta_hat, clamped_flag).
    """
    K = geom.n_subarrays
    if K % 2 != 0:
        raise ValueError("decoupling requires an even subarray count")
    half = K // 2
    delta = index_offsets(K)[:half]
    diffs = taus_unwrapped[::-1][:half] - taus_unwrapped[:half]
    pitch = geom.subarray_pitch_m
    denom = float(delta @ delta)
    theta = (
        SPEED_OF_LIGHT / (2.0 * pitch * grid.spacing_hz) * float(delta @ diffs) / denom
    )
    clamped = False
    limit = 1.0 - 1e-9
    if not -limit < theta < limit:
        theta = math.copysign(limit, theta) if math.isfinite(theta) else 0.0
        clamped = True
    return theta, clamped


def decouple_distance(
    taus_unwrapped: np.ndarray, theta: float, geom: ArrayGeometry, grid: SubcarrierGrid
) -> float:
    """Scatterer distance from the half-array shift of the delay profile.

    v_de stacks (c/df)(tau_{K/2+k} - tau_k) + (K/2)*pitch*theta, which the
    quadratic profile term makes proportional to (delta_k + K/4)/d; solving
    by pseudoinverse yields d.  Non-positive / non-finite results signal an
    unidentifiable geometry (caller rejects the path).
    """
    K = geom.n_subarrays
    half = K // 2
    delta = index_offsets(K)[:half]
    pitch = geom.subarray_pitch_m
    v_de = (
        SPEED_OF_LIGHT / grid.spacing_hz * (taus_unwrapped[half:] - taus_unwrapped[:half])
        + 0.5 * K * pitch * theta
    )
    u = delta + K / 4.0
    denom = float(v_de @ v_de)
    if denom == 0.0:
        return float("nan")
    return (
        0.5 * K * pitch * pitch * (1.0 - theta * theta) * float(v_de @ u) / denom
    )


def decouple_range(
    taus_unwrapped: np.ndarray,
    theta: float,
    dist_m: float,
    geom: ArrayGeometry,
    grid: SubcarrierGrid,
) -> float:
    """Residual range from the even symmetry of the delay profile.

    Mirror sums cancel the odd (angle) term; subtracting the known quadratic
    bulge and the distance leaves r in every entry, averaged over pairs.
    """
    K = geom.n_subarrays
    half = K // 2
    delta = index_offsets(K)[:half]
    pitch = geom.subarray_pitch_m
    v_re = (
        0.5 * SPEED_OF_LIGHT / grid.spacing_hz
        * (taus_unwrapped[::-1][:half] + taus_unwrapped[:half])
        - delta * delta * pitch * pitch * (1.0 - theta * theta) / (2.0 * dist_m)
        - dist_m
    )
    return float(np.mean(v_re))


def fit_profile_exact(
    taus_unwrapped: np.ndarray, geom: ArrayGeometry, grid: SubcarrierGrid
):
    """Closed-form (theta, d, r) fit with the exact subarray-center geometry.

    (eta(k) - r)^2 = d^2 - 2 d theta x_k + x_k^2 holds exactly with
    x_k = delta_k * pitch (law of cosines), so the quadratic-in-x LS
    coefficients of eta and eta^2 give r linearly, after which
    (eta - r)^2 - x^2 is an affine function of x yielding d and theta.
    Returns (theta, d, r) or None when the profile carries no usable
    curvature (e.g. endfire or an all-equal track).
    """
    x = index_offsets(geom.n_subarrays) * geom.subarray_pitch_m
    eta = SPEED_OF_LIGHT / grid.spacing_hz * np.asarray(taus_unwrapped, dtype=float)
    basis = np.polynomial.polynomial.polyvander(x, 2)
    coef_eta, *_ = np.linalg.lstsq(basis, eta, rcond=None)
    coef_eta2, *_ = np.linalg.lstsq(basis, eta * eta, rcond=None)
    curv = coef_eta[2]
    scale = max(abs(coef_eta[1]) / (abs(x[-1]) + 1.0), abs(coef_eta[0]) / (x[-1] ** 2 + 1.0))
    if abs(curv) <= 1e-12 * max(scale, 1e-30):
        return None
    r = (coef_eta2[2] - 1.0) / (2.0 * curv)
    z = (eta - r) ** 2 - x * x
    coef_z, *_ = np.linalg.lstsq(basis[:, :2], z, rcond=None)
    if not np.isfinite(coef_z).all() or coef_z[0] <= 0.0:
        return None
    d = math.sqrt(coef_z[0])
    theta = -coef_z[1] / (2.0 * d)
    if not (math.isfinite(theta) and -1.0 < theta < 1.0 and math.isfinite(r)):
        return None
    return float(theta), float(d), float(r)


# ---------------------------------------------------------------------------
# gain fitting and residual update


def gain_column(
    k: int,
    theta: float,
    dist_m: float,
    range_m: float,
    combiner_row: np.ndarray,
    geom: ArrayGeometry,
    grid: SubcarrierGrid,
    steering: str = "exact",
) -> np.ndarray:
    """Model column v_gc the k-th subarray's row projects onto.

    v_gc = (f_k^H w_k(theta, d)) * p(r + d~_k): the scalar combiner gain
    times the frequency profile of the estimated subarray-center length.
    """
    w = steering_vector(theta, dist_m, geom, steering)
    fk_wk = complex(np.vdot(combiner_row, w[geom.subarray_slice(k)]))
    dist_k, _ = subarray_centers(theta, dist_m, geom)
    phase = (
        2j * np.pi / SPEED_OF_LIGHT * grid.freq_offsets_hz * (range_m + dist_k[k])
    )
    return fk_wk * np.exp(phase)


def estimate_gain_lpu(
    y_row: np.ndarray, v_gc: np.ndarray, power: float = 1.0
) -> complex:
    """LS complex gain of one subarray row: v^H y / (sqrt(P) ||v||^2).

    On a matched noiseless row y = sqrt(P) rho v this returns rho exactly.
    A vanishing model column (combiner orthogonal to the steering) returns 0
    rather than amplifying noise.
    """
    norm2 = float(np.vdot(v_gc, v_gc).real)
    if norm2 <= 1e-12:
        return 0.0 + 0.0j
    return complex(np.vdot(v_gc, y_row)) / (math.sqrt(power) * norm2)


def residual_update(
    y_row: np.ndarray, rho_k: complex, v_gc: np.ndarray, power: float = 1.0
) -> np.ndarray:
    """Remove the fitted path from one subarray row."""
    return y_row - math.sqrt(power) * rho_k * v_gc


# ---------------------------------------------------------------------------
# stopping rule


@dataclass(frozen=True)
class StoppingRule:
    """CFAR stop on the central correlation peak plus a path-count cap."""

    noise_var: float
    p_fa: float = 1e-3
    max_paths: int = 16

    def __post_init__(self):
        if not 0.0 < self.p_fa < 1.0:
            raise ValueError(f"p_fa must lie in (0, 1), got {self.p_fa}")
        if self.noise_var < 0.0:
            raise ValueError("noise_var must be nonnegative")
        if self.max_paths < 0:
            raise ValueError("max_paths must be nonnegative")


def stopping_threshold(noise_var: float, n_subcarriers: int, p_fa: float) -> float:
    """CFAR threshold: sigma^2 ln M - sigma^2 ln(ln(1/(1-P_fa))).

    Under pure noise the grid scores are i.i.d. Exp(sigma^2); the maximum
    exceeds this level with probability P_fa (asymptotically in M).
    """
    if not 0.0 < p_fa < 1.0:
        raise ValueError(f"p_fa must lie in (0, 1), got {p_fa}")
    return noise_var * math.log(n_subcarriers) - noise_var * math.log(
        math.log(1.0 / (1.0 - p_fa))
    )


# ---------------------------------------------------------------------------
# results


@dataclass
class PathEstimate:
    """One detected path with its per-subarray gains and delay track."""

    theta: float
    dist_m: float
    range_m: float
    gain: complex  # average of lpu_gains
    lpu_gains: np.ndarray  # shape (K,)
    track: SubarrayDelayTrack
    clamped: bool = False  # theta hit the (-1, 1) clamp during decoupling
    refined: bool = False  # exact-geometry fit accepted over the Fresnel one


@dataclass
class DpsResult:
    paths: list
    fallback: bool
    rejected: int
    corr_per_iter: list  # dictionary correlations per completed iteration
    corr_total: int  # includes the terminal stopping check
    stop_reason: str
    residual: np.ndarray

    @property
    def n_paths(self) -> int:
        return len(self.paths)


def decouple_profile(
    track: SubarrayDelayTrack,
    geom: ArrayGeometry,
    grid: SubcarrierGrid,
    refine: str = "exact",
):
    """Full parameter decoupling of one delay track.

    Runs the Fresnel reflection solves, then (refine="exact") the
    exact-geometry closed-form fit, keeping whichever is valid.  Returns
    (theta, d, r, clamped, refined) or None when the path is unidentifiable.
    """
    if refine not in ("exact", "none"):
        raise ValueError(f"unknown refine mode {refine!r}")
    taus = track.taus_unwrapped
    theta, clamped = decouple_angle(taus, geom, grid)
    dist = decouple_distance(taus, theta, geom, grid)
    fresnel_ok = math.isfinite(dist) and dist > 0.0
    if fresnel_ok:
        rng_m = decouple_range(taus, theta, dist, geom, grid)
    if refine == "exact":
        fit = fit_profile_exact(taus, geom, grid)
        if fit is not None and fit[1] > 0.0:
            return fit[0], fit[1], fit[2], clamped, True
    if not fresnel_ok:
        return None
    return theta, dist, rng_m, clamped, False


def run_dps(
    Y: np.ndarray,
    combiners: np.ndarray,
    geom: ArrayGeometry,
    grid: SubcarrierGrid,
    rule: StoppingRule,
    power: float = 1.0,
    steering: str = "exact",
    refine: str = "exact",
) -> DpsResult:
    """Iterative path extraction on the combined observation Y (K x M).

    Per iteration: full-grid detection at the central subarray (M
    correlations), serial extrapolation (2*M_s+1 correlations at each of the
    K-1 other subarrays), symmetry decoupling, per-subarray gain fit, and
    residual cancellation.  Stops when the central peak falls below the CFAR
    threshold, the path cap is reached, a path is rejected as
    unidentifiable, or the all-delays-equal fallback fires.
    """
    K, M = geom.n_subarrays, grid.n_subcarriers
    if Y.shape != (K, M):
        raise ValueError(f"observation must be {K}x{M}, got {Y.shape}")
    if K % 2 != 0:
        raise ValueError(f"subarray count must be even, got {K}")
    dictionary = DelayDictionary(M)
    m_hop = max_hop(geom, grid)
    kc = central_index(K)
    threshold = stopping_threshold(rule.noise_var, M, rule.p_fa)
    resid = np.array(Y, dtype=complex, copy=True)

    paths: list[PathEstimate] = []
    corr_per_iter: list[int] = []
    corr_total = 0
    rejected = 0
    fallback = False
    stop_reason = "max_paths"

    while True:
        idx, tau_c, peak = ml_delay_detect(resid[kc], dictionary)
        corr_total += M
        if peak <= threshold:
            stop_reason = "threshold"
            break
        if len(paths) >= rule.max_paths:
            stop_reason = "max_paths"
            break

        track = extrapolate_delays(resid, tau_c, geom, dictionary, m_hop)
        corr_iter = M + (K - 1) * (2 * m_hop + 1)
        corr_total += (K - 1) * (2 * m_hop + 1)

        if track.all_equal():
            # parametric symmetry carries no information and the residual is
            # still above threshold: hand off to a dictionary-based method
            fallback = True
            stop_reason = "fallback"
            corr_per_iter.append(corr_iter)
            break

        decoupled = decouple_profile(track, geom, grid, refine)
        if decoupled is None:
            rejected += 1
            stop_reason = "rejected"
            corr_per_iter.append(corr_iter)
            break
        theta, dist, rng_m, clamped, refined = decoupled

        gains = np.zeros(K, dtype=complex)
        for k in range(K):
            v_gc = gain_column(k, theta, dist, rng_m, combiners[k], geom, grid, steering)
            gains[k] = estimate_gain_lpu(resid[k], v_gc, power)
            resid[k] = residual_update(resid[k], gains[k], v_gc, power)

        paths.append(
            PathEstimate(
                theta=theta,
                dist_m=dist,
                range_m=rng_m,
                gain=complex(np.mean(gains)),
                lpu_gains=gains,
                track=track,
                clamped=clamped,
                refined=refined,
            )
        )
        corr_per_iter.append(corr_iter)

    return DpsResult(
        paths=paths,
        fallback=fallback,
        rejected=rejected,
        corr_per_iter=corr_per_iter,
        corr_total=corr_total,
        stop_reason=stop_reason,
        residual=resid,
    )


def reconstruct_channel(
    paths,
    geom: ArrayGeometry,
    grid: SubcarrierGrid,
    steering: str = "exact",
    gains: str = "per_lpu",
) -> np.ndarray:
    """Rebuild the antenna-domain channel from path estimates, shape (N, M).

    Each path contributes per-subarray rank-1 blocks
    rho_k * w_k(theta, d) p(r + d~_k)^T.  gains="per_lpu" uses each
    subarray's own fitted gain (default; absorbs per-subarray phase error),
    gains="averaged" uses the K-averaged gain everywhere.
    """
    if gains not in ("per_lpu", "averaged"):
        raise ValueError(f"unknown gain mode {gains!r}")
    N, M = geom.n_antennas, grid.n_subcarriers
    H = np.zeros((N, M), dtype=complex)
    for est in paths:
        w = steering_vector(est.theta, est.dist_m, geom, steering)
        dist_k, _ = subarray_centers(est.theta, est.dist_m, geom)
        for k in range(geom.n_subarrays):
            rho = est.lpu_gains[k] if gains == "per_lpu" else est.gain
            if rho == 0:
                continue
            p = np.exp(
                2j * np.pi / SPEED_OF_LIGHT
                * grid.freq_offsets_hz
                * (est.range_m + dist_k[k])
            )
            sl = geom.subarray_slice(k)
            H[sl] += rho * np.outer(w[sl], p)
    return H
