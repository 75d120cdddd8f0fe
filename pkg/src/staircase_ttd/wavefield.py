"""Physical primitives for an analog TTD uniform linear array fed by one OFDM RF chain.

Angles are handled as ``sin(theta)`` internally and frequencies are absolute Hz.
The gain convention is ``G = |w^H a|^2`` with a unit-norm precoder, so a perfectly
aligned beam reaches ``n_t``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DEFAULT_ANGLE_COUNT = 2048


@dataclass(frozen=True)
class OfdmGrid:
    f_c: float
    bw: float
    m_tot: int

    def __post_init__(self):
        if not (self.bw > 0 and self.f_c > self.bw / 2):
            raise ValueError(f"need f_c > bw/2 > 0, got f_c={self.f_c!r}, bw={self.bw!r}")
        if int(self.m_tot) != self.m_tot or self.m_tot < 2:
            raise ValueError(f"m_tot must be an integer >= 2, got {self.m_tot!r}")
        object.__setattr__(self, "m_tot", int(self.m_tot))

    def frequencies(self, m=None) -> np.ndarray:
        """Frequencies (Hz) of 1-based subcarrier indices ``m`` (all of them if None)."""
        if m is None:
            m = np.arange(1, self.m_tot + 1)
        m = np.asarray(m)
        if np.any(m < 1) or np.any(m > self.m_tot):
            raise IndexError(f"subcarrier index outside [1, {self.m_tot}]")
        return self.f_c - self.bw / 2 + self.bw * (m - 1) / (self.m_tot - 1)


@dataclass(frozen=True)
class ArrayConfig:
    n_t: int
    spacing_factor: float = 1.0  # pitch in units of lambda_c / 2

    def __post_init__(self):
        if int(self.n_t) != self.n_t or self.n_t < 2:
            raise ValueError(f"n_t must be an integer >= 2, got {self.n_t!r}")
        object.__setattr__(self, "n_t", int(self.n_t))


@dataclass(frozen=True, eq=False)
class DelayPhaseProfile:
    """Per-antenna delays (s) and phase shifts (rad)."""

    delays: np.ndarray
    phases: np.ndarray

    def __post_init__(self):
        delays = np.asarray(self.delays, dtype=float).copy()
        phases = np.asarray(self.phases, dtype=float).copy()
        if delays.ndim != 1 or delays.shape != phases.shape:
            raise ValueError("delays and phases must be 1-D vectors of equal length")
        if not (np.all(np.isfinite(delays)) and np.all(np.isfinite(phases))):
            raise ValueError("delays and phases must be finite")
        delays.flags.writeable = False
        phases.flags.writeable = False
        object.__setattr__(self, "delays", delays)
        object.__setattr__(self, "phases", phases)

    @property
    def n_t(self) -> int:
        return self.delays.size

    @classmethod
    def zeros(cls, n_t: int) -> "DelayPhaseProfile":
        return cls(np.zeros(n_t), np.zeros(n_t))

    def __eq__(self, other):
        if not isinstance(other, DelayPhaseProfile):
            return NotImplemented
        return np.array_equal(self.delays, other.delays) and np.array_equal(self.phases, other.phases)


@dataclass(frozen=True, eq=False)
class GainGrid:
    angles: np.ndarray  # sin(theta) samples
    freqs: np.ndarray  # Hz, one per row
    values: np.ndarray  # linear power gain, shape (len(freqs), len(angles))
    freq_indices: np.ndarray  # 1-based subcarrier index of each row


def subcarrier_frequency(grid: OfdmGrid, m: int) -> float:
    if not 1 <= m <= grid.m_tot:
        raise IndexError(f"subcarrier index {m} outside [1, {grid.m_tot}]")
    return float(grid.frequencies(m))


def angle_grid(angle_count: int = DEFAULT_ANGLE_COUNT) -> np.ndarray:
    """Uniform sin(theta) grid of ``angle_count`` points over [-1, 1)."""
    if angle_count < 2:
        raise ValueError("angle_count must be >= 2")
    return -1.0 + 2.0 * np.arange(angle_count) / angle_count


def array_response(cfg: ArrayConfig, grid: OfdmGrid, sin_theta: float, f: float,
                   subsample_stride: int = 1) -> np.ndarray:
    if subsample_stride < 1 or cfg.n_t % subsample_stride:
        raise ValueError(f"stride {subsample_stride} does not divide n_t={cfg.n_t}")
    n = np.arange(cfg.n_t // subsample_stride)
    return np.exp(-1j * np.pi * (f / grid.f_c) * n * subsample_stride * cfg.spacing_factor * sin_theta)


def precoder(profile: DelayPhaseProfile, f: float) -> np.ndarray:
    if not f > 0:
        raise ValueError("frequency must be positive")
    return np.exp(1j * (2 * np.pi * f * profile.delays + profile.phases)) / np.sqrt(profile.n_t)


def _gain_core(profile, f_c, spacing, sin_theta, f):
    """|w^H a|^2 broadcast over ``sin_theta`` and ``f``.

    Per-element phases are accumulated in extended precision and reduced mod 2
    (units of pi) before the float64 exponential: 2*f*tau reaches ~1e3 cycles.
    """
    u = np.asarray(sin_theta, dtype=np.longdouble)[..., None]
    f = np.asarray(f, dtype=np.longdouble)[..., None]
    tau = profile.delays.astype(np.longdouble)
    phi = profile.phases.astype(np.longdouble) / np.longdouble(np.pi)
    n = np.arange(profile.n_t, dtype=np.longdouble) * np.longdouble(spacing)
    cycles = 2 * f * tau + phi + (f / np.longdouble(f_c)) * n * u
    cycles = np.mod(cycles, 2).astype(float)
    s = np.exp(-1j * np.pi * cycles).sum(axis=-1)
    return (s.real ** 2 + s.imag ** 2) / profile.n_t


def gain(profile: DelayPhaseProfile, cfg: ArrayConfig, grid: OfdmGrid, sin_theta: float, m: int,
         squint: bool = True) -> float:
    """Linear beamforming gain at ``sin_theta`` on subcarrier ``m``.

    ``squint=False`` evaluates the array response at f_c (precoder still at f_m);
    it exists to isolate the delay-induced frequency dependence in tests.
    """
    if profile.n_t != cfg.n_t:
        raise ValueError(f"profile has {profile.n_t} elements, array has {cfg.n_t}")
    f = subcarrier_frequency(grid, m)
    f_c = grid.f_c if squint else f
    return float(_gain_core(profile, f_c, cfg.spacing_factor, np.array([sin_theta]), f)[0])


def gain_at(profile: DelayPhaseProfile, cfg: ArrayConfig, grid: OfdmGrid, sin_theta, f: float) -> np.ndarray:
    """Gain over a vector of ``sin_theta`` at an arbitrary in-band frequency ``f`` (Hz)."""
    if profile.n_t != cfg.n_t:
        raise ValueError(f"profile has {profile.n_t} elements, array has {cfg.n_t}")
    return _gain_core(profile, grid.f_c, cfg.spacing_factor, np.atleast_1d(sin_theta), f)


def gain_grid(profile: DelayPhaseProfile, cfg: ArrayConfig, grid: OfdmGrid,
              angle_count: int = DEFAULT_ANGLE_COUNT, freq_indices=None, squint: bool = True) -> GainGrid:
    if profile.n_t != cfg.n_t:
        raise ValueError(f"profile has {profile.n_t} elements, array has {cfg.n_t}")
    if freq_indices is None:
        raise ValueError("freq_indices is required")
    m = np.asarray(freq_indices, dtype=int).ravel()
    if m.size == 0:
        raise ValueError("freq_indices must be non-empty")
    u = angle_grid(angle_count)
    freqs = grid.frequencies(m)
    # row by row: same arithmetic as the pointwise gain() and bounded memory
    values = np.empty((m.size, u.size))
    for i, f in enumerate(freqs):
        values[i] = _gain_core(profile, grid.f_c if squint else f, cfg.spacing_factor, u, f)
    return GainGrid(angles=u, freqs=freqs, values=values, freq_indices=m)


def gain_vs_frequency(profile: DelayPhaseProfile, cfg: ArrayConfig, grid: OfdmGrid, sin_theta: float,
                      freq_indices=None) -> np.ndarray:
    """Gain at one angle across subcarriers (all of them by default)."""
    if profile.n_t != cfg.n_t:
        raise ValueError(f"profile has {profile.n_t} elements, array has {cfg.n_t}")
    f = grid.frequencies(freq_indices)
    out = np.empty(f.shape)
    # chunked to keep the (freqs x n_t) extended-precision block small
    for start in range(0, f.size, 1024):
        out.flat[start:start + 1024] = _gain_core(profile, grid.f_c, cfg.spacing_factor, sin_theta,
                                                  f.ravel()[start:start + 1024])
    return out


def evenly_spaced_indices(grid: OfdmGrid, count: int) -> np.ndarray:
    """``count`` subcarrier indices spread evenly over [1, m_tot]."""
    count = min(count, grid.m_tot)
    return np.unique(np.round(np.linspace(1, grid.m_tot, count)).astype(int))
