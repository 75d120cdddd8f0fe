"""Closed-form frequency-spatial analysis of staircase codebooks.

The uniform staircase is ``d`` interleaved uniform TTD sub-arrays of pitch
``d*lambda_c/2``.  Each sub-array produces ``d`` grating lobes (``subarray_gain``,
``beam_centres``); superposing the sub-arrays multiplies that pattern by a
Dirichlet-kernel spatial filter (``filter_response``, ``filter_centre``).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .codebook import DesignResult, PreconditionError, StaircaseParams, fmod_floored
from .wavefield import (ArrayConfig, DelayPhaseProfile, GainGrid, OfdmGrid, angle_grid, gain_at,
                        gain_vs_frequency)

SINGULAR_TOL = 1e-12
EDGE_TOL = 1e-12
HALF_POWER_FACTOR = 0.886  # textbook large-aperture constant


@dataclass(frozen=True)
class SubArrayView:
    d: float
    dtau_jump: float
    dphi_jump: float
    dtau_step: float
    dphi_step: float
    n_sub: int
    f_c: float

    def __post_init__(self):
        if self.n_sub < 1:
            raise ValueError("n_sub must be >= 1")
        if self.d == int(self.d) and self.n_sub * self.d < 1:
            raise ValueError("n_sub*d must be positive")

    @classmethod
    def from_params(cls, params: StaircaseParams, n_t: int, f_c: float) -> "SubArrayView":
        return cls(d=params.d, dtau_jump=params.dtau_jump, dphi_jump=params.dphi_jump,
                   dtau_step=params.dtau_step, dphi_step=params.dphi_step,
                   n_sub=max(int(n_t // params.d), 1), f_c=f_c)

    @property
    def is_integer(self) -> bool:
        return self.d == int(self.d)


@dataclass(frozen=True, eq=False)
class BeamMap:
    freq_indices: np.ndarray
    freqs: np.ndarray
    peak_sin_theta: np.ndarray
    peak_gain: np.ndarray


@dataclass(frozen=True, eq=False)
class OnTargetGain:
    user_angles: np.ndarray  # rad
    values: np.ndarray  # (K, m_tot)


def _ld(x):
    return np.asarray(x, dtype=np.longdouble)


def _dirichlet_sq(psi, length):
    """``|sin(L*pi/2*psi) / sin(pi/2*psi)|^2`` with the analytic limit at ``psi = 2z``."""
    psi = _ld(psi)
    length = np.longdouble(length)
    half_pi = np.longdouble(np.pi) / 2
    den = np.sin(half_pi * psi)
    num = np.sin(length * half_pi * psi)
    singular = np.abs(den) < SINGULAR_TOL
    safe = np.where(singular, 1, den)
    out = (num / safe) ** 2
    if np.any(singular):
        z = np.round(psi / 2)
        limit = (length * np.cos(length * np.longdouble(np.pi) * z)) ** 2
        out = np.where(singular, limit, out)
    return out


def _psi_jump(view, sin_theta, f):
    f = _ld(f)
    return (2 * f * np.longdouble(view.dtau_jump) + np.longdouble(view.dphi_jump) / np.longdouble(np.pi)
            + np.longdouble(view.d) * (f / np.longdouble(view.f_c)) * _ld(sin_theta))


def _psi_step(view, sin_theta, f):
    f = _ld(f)
    return (2 * f * np.longdouble(view.dtau_step) + (f / np.longdouble(view.f_c)) * _ld(sin_theta)
            + np.longdouble(view.dphi_step) / np.longdouble(np.pi))


def _out(x):
    x = np.asarray(x, dtype=float)
    return float(x) if x.ndim == 0 else x


def psi_jump(view: SubArrayView, sin_theta, f):
    """Inter-element phase progression of one sub-array, in units of pi."""
    return _out(_psi_jump(view, sin_theta, f))


def psi_step(view: SubArrayView, sin_theta, f):
    """Phase separation between adjacent sub-arrays, in units of pi."""
    return _out(_psi_step(view, sin_theta, f))


def subarray_gain(view: SubArrayView, sin_theta, f):
    # peak value n_sub = N_T/D under the unit-norm full-array convention
    return _out(_dirichlet_sq(_psi_jump(view, sin_theta, f), view.n_sub) / view.n_sub)


def filter_response(view: SubArrayView, sin_theta, f):
    return _out(_dirichlet_sq(_psi_step(view, sin_theta, f), view.d))


def factorized_gain(view: SubArrayView, cfg: ArrayConfig, grid: OfdmGrid, sin_theta, m):
    """``(1/D) * subarray_gain * filter_response``; only valid for the uniform integer staircase."""
    if not view.is_integer or cfg.n_t % int(view.d) or view.n_sub * int(view.d) != cfg.n_t:
        raise PreconditionError(
            f"factorization needs integer D dividing n_t (D={view.d}, n_t={cfg.n_t}); use direct gain")
    f = grid.frequencies(m)
    g = _dirichlet_sq(_psi_jump(view, sin_theta, f), view.n_sub) / view.n_sub
    filt = _dirichlet_sq(_psi_step(view, sin_theta, f), view.d)
    return _out(g * filt / np.longdouble(view.d))


def beam_centres(view: SubArrayView, grid: OfdmGrid, m: int) -> np.ndarray:
    """Visible grating-lobe centres (sin(theta) in [-1, 1)) at subcarrier ``m``.

    Starts from the closed-form first solution in (1 - p, 1] and steps down by the
    lobe spacing ``p = (2/D)(f_c/f)``; every solution of ``psi_jump = 2z`` inside
    the visible window is returned, in decreasing order.
    """
    return beam_centres_at(view, float(grid.frequencies(m)))


def beam_centres_at(view: SubArrayView, f: float) -> np.ndarray:
    spacing = 2 * view.f_c / (view.d * f)
    x = 2 * view.f_c * view.dtau_jump / view.d + view.dphi_jump * view.f_c / (view.d * np.pi * f)
    first = 1 - float(fmod_floored(x + 1, spacing))
    count = int(math.floor((first + 1) / spacing)) + 1
    centres = first - spacing * np.arange(count + 1)
    # a lobe sitting on -1 can land a few ulp outside the window
    centres = np.where((centres < -1) & (centres >= -1 - EDGE_TOL), -1.0, centres)
    return centres[(centres >= -1) & (centres < 1)]


def lobe_spacing(view: SubArrayView, grid: OfdmGrid, m: int) -> float:
    return 2 * view.f_c / (view.d * float(grid.frequencies(m)))


def map_slope(view: SubArrayView) -> float:
    """Large-delay approximation of d sin(theta*)/df (per Hz)."""
    return -2 * view.dtau_jump / view.d


def filter_centre(view: SubArrayView, grid: OfdmGrid, m: int) -> float:
    """Gain-maximizing sin(theta) of the spatial filter at subcarrier ``m``."""
    return filter_centre_at(view, float(grid.frequencies(m)))


def filter_centre_at(view: SubArrayView, f: float) -> float:
    period = 2 * view.f_c / f
    x = 2 * view.f_c * view.dtau_step + (view.dphi_step / np.pi) * (view.f_c / f) + 1
    centre = 1 - float(fmod_floored(x, period))
    # (1 - period, 1] may reach past -1 below f_c, or sit exactly on the excluded +1
    if centre < -1:
        centre += period
    elif centre >= 1 and centre - period >= -1:
        centre -= period
    return centre


def filter_half_power_width(view: SubArrayView, grid: OfdmGrid, m: int,
                            angle_count: int = 2048) -> float:
    """Measured half-power width (in sin(theta)) of the filter main lobe at subcarrier ``m``.

    The response is sampled with the grid pitch ``2/angle_count`` around the filter
    centre and the two half-power crossings are linearly interpolated.
    """
    f = float(grid.frequencies(m))
    cell = 2.0 / angle_count
    centre = filter_centre(view, grid, m)
    reach = int(math.ceil(2 * view.f_c / (view.d * f) / cell)) + 2
    offsets = np.arange(-reach, reach + 1)
    resp = np.asarray(filter_response(view, centre + offsets * cell, f))
    half = resp[reach] / 2

    def crossing(direction):
        idx = reach
        while resp[idx + direction] >= half:
            idx += direction
        a, b = resp[idx], resp[idx + direction]
        frac = (a - half) / (a - b)
        return (offsets[idx] + direction * frac) * cell

    return crossing(1) - crossing(-1)


def nominal_half_power_width(d: float) -> float:
    return 2 * HALF_POWER_FACTOR / d


def extract_beam_map(gg: GainGrid) -> BeamMap:
    if gg.values.size == 0:
        raise ValueError("empty gain grid")
    idx = np.argmax(gg.values, axis=1)  # first maximum = smallest sin(theta)
    rows = np.arange(gg.values.shape[0])
    return BeamMap(freq_indices=gg.freq_indices, freqs=gg.freqs, peak_sin_theta=gg.angles[idx],
                   peak_gain=gg.values[rows, idx])


def subband_peaks(profile: DelayPhaseProfile, cfg: ArrayConfig, grid: OfdmGrid, freqs,
                  angle_count: int = 2048) -> np.ndarray:
    """Full-gain argmax (sin(theta)) at arbitrary frequencies such as sub-band centres."""
    u = angle_grid(angle_count)
    return np.array([u[np.argmax(gain_at(profile, cfg, grid, u, float(f)))] for f in freqs])


def extract_branches(gg: GainGrid, rel_threshold: float = 0.5) -> list[np.ndarray]:
    """Per-row local maxima (sin(theta)) whose gain is at least ``rel_threshold`` of the row peak."""
    out = []
    for row in gg.values:
        left = np.concatenate(([-np.inf], row[:-1]))
        right = np.concatenate((row[1:], [-np.inf]))
        peaks = (row > left) & (row >= right) & (row >= rel_threshold * row.max())
        out.append(gg.angles[peaks])
    return out


def on_target_gain(profile: DelayPhaseProfile, cfg: ArrayConfig, grid: OfdmGrid, user_angles) -> OnTargetGain:
    user_angles = np.asarray(user_angles, dtype=float).ravel()
    if not 1 <= user_angles.size <= cfg.n_t:
        raise ValueError(f"need 1 <= K <= n_t users, got {user_angles.size}")
    values = np.stack([gain_vs_frequency(profile, cfg, grid, math.sin(t)) for t in user_angles])
    return OnTargetGain(user_angles=user_angles, values=values)


def mapping_discrepancy(result: DesignResult) -> np.ndarray:
    return np.abs(np.sin(result.predicted_angles) - np.sin(result.target_angles))


def gain_db(linear):
    """10*log10 with a -300 dB floor so exact nulls stay finite in CSV output."""
    return 10 * np.log10(np.maximum(np.asarray(linear, dtype=float), 1e-30))


BEAM_MAP_HEADER = ("m", "f_hz", "sin_theta_peak", "theta_peak_deg", "gain_peak_db")


def write_beam_map_csv(path, beam_map: BeamMap) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(BEAM_MAP_HEADER)
        for m, f, s, g in zip(beam_map.freq_indices, beam_map.freqs, beam_map.peak_sin_theta,
                              beam_map.peak_gain):
            writer.writerow([int(m), repr(float(f)), repr(float(s)),
                             repr(float(np.degrees(np.arcsin(s)))), repr(float(gain_db(g)))])
