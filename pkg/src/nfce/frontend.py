"""Analog combining front end: one RF chain per subarray.

Each subarray applies a constant-modulus combining vector (phase shifters
only, entries of modulus 1/sqrt(subarray_size)) and the receiver observes one
complex sample per subarray per subcarrier.  The same combiner is used across
the whole band, which is exactly why the aperture delay shows up as a
per-subarray delay shift downstream.
"""

from __future__ import annotations

import numpy as np

from nfce.model import (
    SPEED_OF_LIGHT,
    ArrayGeometry,
    PathParams,
    SubcarrierGrid,
    steering_vector,
)


def random_phase_combiner(geom: ArrayGeometry, rng: np.random.Generator) -> np.ndarray:
    """Random phase-shifter bank, shape (n_subarrays, subarray_size).

    Entries are (1/sqrt(ns)) * exp(j phi) with phi uniform on [0, 2pi); each
    row has unit norm so combining never amplifies noise.
    """
    ns = geom.subarray_size
    phases = rng.uniform(0.0, 2.0 * np.pi, size=(geom.n_subarrays, ns))
    return np.exp(1j * phases) / np.sqrt(ns)


def matched_combiner(
    path: PathParams, geom: ArrayGeometry, steering: str = "exact"
) -> np.ndarray:
    """Combiner matched to one path's wavefront at the carrier.

    Row k is the conjugate-free projection target: f_k = (1/sqrt(ns)) *
    exp(j 2 pi f_c total / c) * w_k, i.e. the subarray slice of the path's
    steering vector with the absolute carrier phase restored.  Then f_k^H
    applied to the path's carrier response yields sqrt(ns) coherently.
    """
    w = steering_vector(path.theta, path.dist_m, geom, steering)
    phase = np.exp(2j * np.pi * geom.carrier_hz / SPEED_OF_LIGHT * path.total_m)
    f = phase * w / np.sqrt(geom.subarray_size)
    return f.reshape(geom.n_subarrays, geom.subarray_size)


def combining_matrix(combiners: np.ndarray) -> np.ndarray:
    """Block-diagonal analog combining matrix A with rows f_k^H, shape (K, N).

    A @ H maps the antenna-domain channel to the per-subarray observation;
    A @ A^H = I_K because each combiner row has unit norm.
    """
    n_sub, ns = combiners.shape
    A = np.zeros((n_sub, n_sub * ns), dtype=complex)
    for k in range(n_sub):
        A[k, k * ns : (k + 1) * ns] = np.conj(combiners[k])
    return A


def combine(H: np.ndarray, combiners: np.ndarray) -> np.ndarray:
    """Noiseless combined observation A @ H without forming A, shape (K, M)."""
    n_sub, ns = combiners.shape
    blocks = H.reshape(n_sub, ns, -1)
    return np.einsum("kn,knm->km", np.conj(combiners), blocks)


def observe(
    H: np.ndarray,
    combiners: np.ndarray,
    power: float,
    noise_var: float,
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """Pilot observation Y = sqrt(P) A H + Z, shape (K, M).

    Noise is circular complex Gaussian, variance ``noise_var`` per combined
    sample (i.e. injected after the analog combiner, which preserves the
    variance because the combiner rows are unit-norm).
    """
    Y = np.sqrt(power) * combine(H, combiners)
    if noise_var > 0.0:
        if rng is None:
            raise ValueError("noise_var > 0 requires an rng")
        scale = np.sqrt(noise_var / 2.0)
        Y = Y + scale * (
            rng.standard_normal(Y.shape) + 1j * rng.standard_normal(Y.shape)
        )
    return Y


def snr_db(H: np.ndarray, combiners: np.ndarray, power: float, noise_var: float) -> float:
    """Post-combining SNR: P ||A H||_F^2 / (K M sigma^2), in dB."""
    AH = combine(H, combiners)
    signal = power * float(np.vdot(AH, AH).real)
    return 10.0 * np.log10(signal / (AH.size * noise_var))


def noise_var_for_snr(
    H: np.ndarray, combiners: np.ndarray, power: float, snr_target_db: float
) -> float:
    """Noise variance that realizes ``snr_target_db`` for this channel draw."""
    AH = combine(H, combiners)
    signal = power * float(np.vdot(AH, AH).real)
    return signal / (AH.size * 10.0 ** (snr_target_db / 10.0))


def apply_impairments(
    Y: np.ndarray,
    grid: SubcarrierGrid,
    carrier_hz: float,
    clock_offsets: np.ndarray | None = None,
    gain_factors: np.ndarray | None = None,
) -> np.ndarray:
    """Per-subarray hardware impairments on an observation.

    ``clock_offsets`` are symbol-fraction timing errors T_k; subarray k's row
    is rotated by the delay-steering phase exp(j 2 pi delta_m T_k) plus the
    carrier phase exp(j 2 pi f_c T_k / df) the timing error induces.
    ``gain_factors`` are per-subarray complex gains applied multiplicatively.
    """
    out = np.array(Y, dtype=complex, copy=True)
    n_sub, n_sc = out.shape
    if n_sc != grid.n_subcarriers:
        raise ValueError("observation width does not match the grid")
    if clock_offsets is not None:
        clock_offsets = np.asarray(clock_offsets, dtype=float)
        if clock_offsets.shape != (n_sub,):
            raise ValueError("need one clock offset per subarray")
        from nfce.model import delay_steering  # local to avoid cycle noise

        for k in range(n_sub):
            seconds = clock_offsets[k] / grid.spacing_hz
            out[k] *= delay_steering(clock_offsets[k], n_sc)
            out[k] *= np.exp(2j * np.pi * carrier_hz * seconds)
    if gain_factors is not None:
        gain_factors = np.asarray(gain_factors, dtype=complex)
        if gain_factors.shape != (n_sub,):
            raise ValueError("need one gain factor per subarray")
        out *= gain_factors[:, None]
    return out
