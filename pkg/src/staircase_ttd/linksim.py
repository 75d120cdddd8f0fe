"""Multi-user OFDM downlink evaluation of staircase codebooks.

Each of ``K`` users owns one contiguous sub-band of ``M/K`` subcarriers and sees a
single line-of-sight path at its target angle, so its rate on subcarrier ``m`` is
``log2(1 + snr * B_k(f_m))`` with ``B_k`` the beamforming gain toward that user.
"""

from __future__ import annotations

import csv
import logging
import math
from concurrent.futures import Executor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.stats import qmc

from .codebook import (DesignSpec, Formulation, StaircaseParams, build_profile, integer_design,
                       is_feasible, squint_factor, target_sines, two_stage_design)
from .wavefield import ArrayConfig, DelayPhaseProfile, OfdmGrid, gain_vs_frequency

log = logging.getLogger(__name__)

SECTOR_LIMIT = math.radians(75.0)
METHODS = ("IdealBound", "PhasedSingleBeam", "StaircaseUniform", "StaircaseModulo")
SWEEP_VARIABLES = ("K", "BW", "N_T", "SNR")
SWEEP_HEADER = ("variable", "value", "method", "spectral_efficiency_bps_hz", "sectors_averaged",
                "sectors_skipped")


class InfeasibleSweepError(ValueError):
    """No sector of a swept configuration satisfies the grating-factor constraint."""


@dataclass(frozen=True)
class LinkConfig:
    grid: OfdmGrid
    cfg: ArrayConfig
    k_users: int
    snr_linear: float
    sector: tuple[float, float] = (math.radians(-30.0), math.radians(40.0))  # rad

    def __post_init__(self):
        if int(self.k_users) != self.k_users or not 1 <= self.k_users <= self.grid.m_tot:
            raise ValueError(f"k_users must be an integer in [1, m_tot], got {self.k_users!r}")
        if not self.snr_linear > 0:
            raise ValueError(f"snr_linear must be > 0, got {self.snr_linear!r}")
        object.__setattr__(self, "k_users", int(self.k_users))
        object.__setattr__(self, "sector", tuple(float(t) for t in self.sector))

    @property
    def m_used(self) -> int:
        """Subcarriers actually assigned: ``m_tot`` trimmed to a multiple of ``k_users``."""
        return self.grid.m_tot - self.grid.m_tot % self.k_users

    def user_sines(self) -> np.ndarray:
        theta_1, theta_2 = self.sector
        if self.k_users == 1:
            return np.array([math.sin(theta_1)])
        return target_sines(self.k_users, theta_1, theta_2)


class IdealBound:
    """Gain oracle that delivers the full array gain to every user on every subcarrier."""

    def __repr__(self):
        return "IdealBound()"


def subband_assignment(link: LinkConfig, m_tot: int | None = None) -> list[range]:
    """Contiguous 1-based subcarrier ranges, one per user.

    ``m_tot`` overrides the grid size (used to assign over the trimmed count).
    """
    m_tot = link.grid.m_tot if m_tot is None else m_tot
    k = link.k_users
    if m_tot % k:
        raise ValueError(f"K={k} does not divide M_tot={m_tot}; trim M_tot to {m_tot - m_tot % k}")
    per = m_tot // k
    return [range(q * per + 1, (q + 1) * per + 1) for q in range(k)]


def spectral_efficiency(source, link: LinkConfig) -> tuple[float, np.ndarray]:
    """Sum rate (bits/s/Hz) and per-user rates of a profile or the ``IdealBound`` oracle.

    The total is normalized by the assigned subcarrier count, so a trailing
    ``m_tot mod K`` subcarriers left unassigned do not dilute it.
    """
    m_used = link.m_used
    ranges = subband_assignment(link, m_used)
    per_user = np.empty(link.k_users)
    sines = link.user_sines()
    for k, (rng, s) in enumerate(zip(ranges, sines)):
        if isinstance(source, IdealBound):
            b = np.full(len(rng), float(link.cfg.n_t))
        else:
            b = gain_vs_frequency(source, link.cfg, link.grid, float(s), np.arange(rng.start, rng.stop))
        per_user[k] = np.sum(np.log2(1 + link.snr_linear * b)) / m_used
    return float(per_user.sum()), per_user


def phased_single_beam(link: LinkConfig) -> DelayPhaseProfile:
    """Zero-delay phased array steered at f_c toward the median user."""
    s = float(np.median(link.user_sines()))
    n = np.arange(link.cfg.n_t)
    return DelayPhaseProfile(np.zeros(link.cfg.n_t),
                             np.mod(-np.pi * n * link.cfg.spacing_factor * s, 2 * np.pi))


def single_user_ttd(link: LinkConfig) -> DelayPhaseProfile:
    """Pure TTD steering toward the sector start: the D=1 staircase."""
    s = math.sin(link.sector[0])
    params = StaircaseParams(d=1, dtau_jump=-s * link.cfg.spacing_factor / (2 * link.grid.f_c),
                             dphi_jump=0.0, dtau_step=0.0, dphi_step=0.0,
                             formulation=Formulation.UNIFORM_INTEGER)
    return build_profile(params, link.cfg.n_t)


def baseline_profiles(link: LinkConfig) -> dict:
    """Method label -> profile (or ``IdealBound``) for one scenario.

    Staircase entries are None when the sector violates the grating-factor constraint.
    """
    out = {"IdealBound": IdealBound(), "PhasedSingleBeam": phased_single_beam(link)}
    if link.k_users == 1:
        ttd = single_user_ttd(link)
        out["StaircaseUniform"] = ttd
        out["StaircaseModulo"] = ttd
        return out
    spec = DesignSpec(link.k_users, link.sector[0], link.sector[1], link.grid, link.cfg)
    out["StaircaseUniform"] = integer_design(spec).profile
    out["StaircaseModulo"] = two_stage_design(spec).profile
    return out


@dataclass(frozen=True)
class SectorSample:
    pairs: list  # (theta_1, theta_2) in rad
    rejected: int
    draws: int


def _sector_feasible(k: int, grid: OfdmGrid, cfg: ArrayConfig, s1: float, s2: float) -> bool:
    if s1 == s2:
        return False
    if k == 1:
        return True
    d_req = 2 * (k - 1) / (squint_factor(k, grid) * abs(s2 - s1))
    return is_feasible(d_req, cfg.n_t)


def sample_sectors(k: int, grid: OfdmGrid, cfg: ArrayConfig, count: int, seed: int = 0,
                   max_draws: int | None = None) -> SectorSample:
    """Scrambled-Halton pairs uniform in sin(theta) over +-75 deg, filtered by feasibility.

    Draws continue in order until ``count`` pairs are accepted or ``max_draws``
    (default ``64*count``) points have been consumed.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    max_draws = 64 * count if max_draws is None else max_draws
    lo, hi = math.sin(-SECTOR_LIMIT), math.sin(SECTOR_LIMIT)
    sampler = qmc.Halton(d=2, scramble=True, seed=np.random.default_rng(seed))
    pairs, rejected, draws = [], 0, 0
    while len(pairs) < count and draws < max_draws:
        batch = min(max(count, 16), max_draws - draws)
        pts = lo + (hi - lo) * sampler.random(batch)
        for s1, s2 in pts:
            draws += 1
            if _sector_feasible(k, grid, cfg, float(s1), float(s2)):
                pairs.append((math.asin(s1), math.asin(s2)))
                if len(pairs) == count:
                    break
            else:
                rejected += 1
    if len(pairs) < count:
        log.warning("only %d of %d feasible sectors found for K=%d, n_t=%d after %d draws",
                    len(pairs), count, k, cfg.n_t, draws)
    return SectorSample(pairs=pairs, rejected=rejected, draws=draws)


def feasible_sector_sample(k: int, grid: OfdmGrid, cfg: ArrayConfig, count: int,
                           seed: int = 0) -> list[tuple[float, float]]:
    return sample_sectors(k, grid, cfg, count, seed).pairs


@dataclass(frozen=True)
class SweepSpec:
    variable: str
    values: tuple
    fixed: LinkConfig
    sector_samples: int = 64
    seed: int = 0

    def __post_init__(self):
        if self.variable not in SWEEP_VARIABLES:
            raise ValueError(f"variable must be one of {SWEEP_VARIABLES}, got {self.variable!r}")
        values = tuple(float(v) for v in self.values)
        if not values:
            raise ValueError("values must be non-empty")
        if any(b <= a for a, b in zip(values, values[1:])):
            raise ValueError("values must be strictly increasing")
        if self.sector_samples < 1:
            raise ValueError("sector_samples must be >= 1")
        object.__setattr__(self, "values", values)


@dataclass(frozen=True, eq=False)
class SweepResult:
    variable: str
    values: np.ndarray
    methods: tuple
    efficiency: np.ndarray  # (methods, values), bits/s/Hz
    sectors_averaged: np.ndarray
    sectors_skipped: np.ndarray
    per_sector: list = field(default_factory=list)  # per value: (sectors, methods) array

    def row(self, method: str) -> np.ndarray:
        return self.efficiency[self.methods.index(method)]

    def format_value(self, v: float) -> str:
        return str(int(v)) if self.variable in ("K", "N_T") else repr(float(v))

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(SWEEP_HEADER)
            for j, v in enumerate(self.values):
                for i, method in enumerate(self.methods):
                    writer.writerow([self.variable, self.format_value(v), method,
                                     repr(float(self.efficiency[i, j])),
                                     int(self.sectors_averaged[j]), int(self.sectors_skipped[j])])


def configure(link: LinkConfig, variable: str, value: float) -> LinkConfig:
    """``link`` with one swept quantity replaced (SNR in dB, BW in Hz)."""
    if variable == "K":
        return replace(link, k_users=int(round(value)))
    if variable == "N_T":
        return replace(link, cfg=replace(link.cfg, n_t=int(round(value))))
    if variable == "BW":
        return replace(link, grid=replace(link.grid, bw=float(value)))
    if variable == "SNR":
        return replace(link, snr_linear=10 ** (value / 10))
    raise ValueError(f"unknown sweep variable {variable!r}")


def evaluate_scenario(link: LinkConfig) -> np.ndarray:
    """Spectral efficiency of every method in ``METHODS`` order for one sector."""
    profiles = baseline_profiles(link)
    out = np.empty(len(METHODS))
    for i, name in enumerate(METHODS):
        source = profiles[name]
        if source is None:
            raise ValueError(f"{name} has no feasible design for sector {link.sector}")
        out[i] = spectral_efficiency(source, link)[0]
    return out


def run_sweep(spec: SweepSpec, executor: Executor | None = None) -> SweepResult:
    """Average every method over a feasible sector sample at each swept value.

    Scenarios may run on ``executor``; results are reduced in scenario order, so
    the output does not depend on completion order.
    """
    averaged, skipped, per_value = [], [], []
    for value in spec.values:
        link = configure(spec.fixed, spec.variable, value)
        sample = sample_sectors(link.k_users, link.grid, link.cfg, spec.sector_samples, spec.seed)
        if not sample.pairs:
            raise InfeasibleSweepError(
                f"{spec.variable}={value}: no sector satisfies ceil(D) < n_t={link.cfg.n_t} "
                f"with D = 2(K-1)/(gamma*|sin(theta_2)-sin(theta_1)|), K={link.k_users}")
        links = [replace(link, sector=p) for p in sample.pairs]
        if executor is None:
            rows = [evaluate_scenario(lk) for lk in links]
        else:
            rows = list(executor.map(evaluate_scenario, links))
        per_value.append(np.array(rows))
        averaged.append(len(rows))
        skipped.append(sample.rejected)
    efficiency = np.stack([r.mean(axis=0) for r in per_value], axis=1)
    return SweepResult(variable=spec.variable, values=np.array(spec.values), methods=METHODS,
                       efficiency=efficiency, sectors_averaged=np.array(averaged),
                       sectors_skipped=np.array(skipped), per_sector=per_value)
