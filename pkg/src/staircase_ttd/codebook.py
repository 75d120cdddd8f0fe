"""Staircase TTD delay/phase codebooks and their closed-form two-stage design.

A staircase codebook applies small *step* increments (``dtau_step``, ``dphi_step``)
between neighbouring antennas and a larger *jump* every ``d`` antennas
(``dtau_jump``, ``dphi_jump``).  The jump parameters place ``d`` grating lobes;
the step parameters steer a frequency-dependent spatial filter that keeps one
lobe per sub-band.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .wavefield import ArrayConfig, DelayPhaseProfile, OfdmGrid

TWO_PI = 2 * np.pi


class PreconditionError(ValueError):
    """An operation was called outside the regime where it is defined."""


class Formulation(str, enum.Enum):
    UNIFORM_INTEGER = "UniformInteger"
    MODULO = "Modulo"


@dataclass(frozen=True)
class StaircaseParams:
    d: float
    dtau_jump: float
    dphi_jump: float
    dtau_step: float
    dphi_step: float
    formulation: Formulation = Formulation.MODULO

    def __post_init__(self):
        object.__setattr__(self, "formulation", Formulation(self.formulation))
        if not self.d >= 1:
            raise ValueError(f"d must be >= 1, got {self.d!r}")
        if self.formulation is Formulation.UNIFORM_INTEGER and self.d != int(self.d):
            raise ValueError(f"UniformInteger formulation needs an integer d, got {self.d!r}")

    @property
    def dtau_low(self) -> float:
        """Extra delay applied once per step on top of ``dtau_step``."""
        return self.dtau_jump - self.d * self.dtau_step

    @property
    def dphi_low(self) -> float:
        return self.dphi_jump - self.d * self.dphi_step


@dataclass(frozen=True)
class DesignSpec:
    k_users: int
    theta_1: float  # rad
    theta_2: float  # rad
    grid: OfdmGrid
    cfg: ArrayConfig

    def __post_init__(self):
        if int(self.k_users) != self.k_users or self.k_users < 2:
            raise ValueError(f"k_users must be an integer >= 2, got {self.k_users!r}")
        for name in ("theta_1", "theta_2"):
            if not abs(getattr(self, name)) < np.pi / 2:
                raise ValueError(f"|{name}| must be < 90 deg")
        if math.sin(self.theta_1) == math.sin(self.theta_2):
            raise ValueError("sector endpoints must differ (theta_1 == theta_2)")


@dataclass(frozen=True, eq=False)
class DesignResult:
    spec: DesignSpec
    params: StaircaseParams
    profile: DelayPhaseProfile | None
    target_angles: np.ndarray
    predicted_angles: np.ndarray
    gamma: float
    subband_centers: np.ndarray
    feasible: bool
    d_required: float  # real-valued grating factor before any rounding
    orientation: int  # +1 increasing, -1 decreasing sub-band-to-angle map
    notes: list = field(default_factory=list)

    def report(self) -> dict:
        p = self.params
        return {
            "k_users": self.spec.k_users,
            "n_t": self.spec.cfg.n_t,
            "formulation": p.formulation.value,
            "feasible": self.feasible,
            "d": p.d,
            "d_required": self.d_required,
            "ceil_d": math.ceil(self.d_required),
            "gamma": self.gamma,
            "orientation": self.orientation,
            "dtau_jump_s": p.dtau_jump,
            "dphi_jump_rad": p.dphi_jump,
            "dtau_step_s": p.dtau_step,
            "dphi_step_rad": p.dphi_step,
            "subband_centers_hz": self.subband_centers.tolist(),
            "target_angles_deg": np.degrees(self.target_angles).tolist(),
            "predicted_angles_deg": np.degrees(self.predicted_angles).tolist(),
            "notes": list(self.notes),
        }


WRAP_TOL = 1e-12


def fmod_floored(x, y):
    """``x - y*floor(x/y)``: lands in [0, y) for y > 0 and (y, 0] for y < 0.

    Exact multiples of ``y`` that rounding pushes just below a wrap (a residual
    within ``WRAP_TOL*|y|`` of ``y``) are returned as 0, as exact arithmetic would.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if np.any(y == 0):
        raise ValueError("modulus must be non-zero")
    r = x - y * np.floor(x / y)
    return np.where(np.abs(r - y) <= WRAP_TOL * np.abs(y), 0.0, r)


def wrap_phase(phi):
    """Map phases into [0, 2*pi); tiny negatives would otherwise round up to exactly 2*pi."""
    w = np.mod(phi, TWO_PI)
    return np.where(w >= TWO_PI, 0.0, w)


def kron_sum(a, b) -> np.ndarray:
    """Kronecker sum: element ``i*len(b) + j`` is ``a[i] + b[j]``."""
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    if a.size == 0 or b.size == 0:
        raise ValueError("kron_sum needs non-empty vectors")
    return (a[:, None] + b[None, :]).ravel()


def build_uniform(params: StaircaseParams, n_t: int) -> DelayPhaseProfile:
    """Index-triggered staircase with integer step size ``d``; element 1 at zero delay and phase."""
    if params.formulation is not Formulation.UNIFORM_INTEGER:
        raise ValueError("build_uniform needs the UniformInteger formulation")
    d = int(params.d)
    n = np.arange(n_t)
    # closed form of the recurrence; bit-identical to the Kronecker construction
    k = (n // d).astype(float)
    r = (n % d).astype(float)
    delays = k * params.dtau_jump + r * params.dtau_step
    phases = k * params.dphi_jump + r * params.dphi_step
    return DelayPhaseProfile(delays, wrap_phase(phases))


def build_modulo(params: StaircaseParams, n_t: int) -> DelayPhaseProfile:
    """Threshold-triggered staircase, ``tau_n = mod((n-1)*dtau_step, d*dtau_step - dtau_jump)``.

    The wrap happens whenever the running delay crosses the modulus, so ``d`` need not
    be an integer.
    """
    if params.formulation is not Formulation.MODULO:
        raise ValueError("build_modulo needs the Modulo formulation")
    tau_mod = params.d * params.dtau_step - params.dtau_jump
    phi_mod = params.d * params.dphi_step - params.dphi_jump
    if tau_mod == 0 or phi_mod == 0:
        raise ValueError(f"zero modulus (delay modulus {tau_mod!r}, phase modulus {phi_mod!r})")
    n = np.arange(n_t)
    delays = fmod_floored(n * params.dtau_step, tau_mod)
    phases = fmod_floored(n * params.dphi_step, phi_mod)
    return DelayPhaseProfile(delays, wrap_phase(phases))


def build_profile(params: StaircaseParams, n_t: int) -> DelayPhaseProfile:
    if params.formulation is Formulation.UNIFORM_INTEGER:
        return build_uniform(params, n_t)
    return build_modulo(params, n_t)


def squint_factor(k: int, grid: OfdmGrid) -> float:
    if k < 2:
        raise ValueError("k must be >= 2")
    return 1 + grid.bw / (2 * grid.f_c) - grid.bw / (2 * k * grid.f_c)


def subband_centers(k: int, grid: OfdmGrid) -> np.ndarray:
    q = np.arange(1, k + 1)
    return grid.f_c - grid.bw / 2 + grid.bw * (2 * q - 1) / (2 * k)


def target_sines(k: int, theta_1: float, theta_2: float) -> np.ndarray:
    """Sinusoidally equidistant user positions across the sector (as sin(theta))."""
    s1, s2 = math.sin(theta_1), math.sin(theta_2)
    return s1 + np.arange(k) * (s2 - s1) / (k - 1)


def required_grating_factor(spec: DesignSpec) -> float:
    gamma = squint_factor(spec.k_users, spec.grid)
    span = abs(math.sin(spec.theta_2) - math.sin(spec.theta_1))
    return 2 * (spec.k_users - 1) / (gamma * span)


def is_feasible(d_required: float, n_t: int) -> bool:
    return math.isfinite(d_required) and d_required >= 1 and math.ceil(d_required) < n_t


def _wrap_sine(s):
    return np.mod(np.asarray(s) + 1, 2) - 1


def _lobe_sines(s1, orientation, d, f_c, freqs, z):
    """Grating lobe ``z`` (0 = anchored at s1) read off at ``freqs``; squint-aware."""
    return _wrap_sine(s1 + orientation * np.asarray(z) * 2 * f_c / (d * np.asarray(freqs)))


def _filter_steps(spec: DesignSpec) -> tuple[float, float]:
    """Step delay and phase that sweep the filter from theta_1 (first sub-band) to theta_2 (last)."""
    k, grid = spec.k_users, spec.grid
    s1, s2 = math.sin(spec.theta_1), math.sin(spec.theta_2)
    fc = subband_centers(k, grid)
    f_first, f_last = fc[0], fc[-1]
    dtau_step = (f_first * s1 - f_last * s2) / (2 * grid.f_c * (k - 1) * grid.bw / k)
    dphi_step = -np.pi * (f_last / grid.f_c) * (s2 + 2 * grid.f_c * dtau_step)
    return float(dtau_step), float(dphi_step)


def _design(spec: DesignSpec, formulation: Formulation) -> DesignResult:
    k, grid, cfg = spec.k_users, spec.grid, spec.cfg
    s1, s2 = math.sin(spec.theta_1), math.sin(spec.theta_2)
    orientation = 1 if s2 > s1 else -1
    gamma = squint_factor(k, grid)
    d_req = required_grating_factor(spec)
    if not math.isfinite(d_req):
        # a sector narrower than float resolution; keep the parameters finite for the report
        d = float(cfg.n_t)
    elif formulation is Formulation.UNIFORM_INTEGER:
        # guard against 4.000000000001 rounding up to 5
        d = float(math.ceil(d_req - 1e-9))
    else:
        d = d_req
    feasible = is_feasible(d_req, cfg.n_t)
    notes = []
    if not feasible:
        ceil_d = math.ceil(d_req) if math.isfinite(d_req) else d_req
        notes.append(f"infeasible: ceil(D)={ceil_d} must be < n_t={cfg.n_t}"
                     + ("" if d_req >= 1 else f" and D={d_req:.4g} must be >= 1"))
    dtau_step, dphi_step = _filter_steps(spec)
    params = StaircaseParams(
        d=max(d, 1.0),
        dtau_jump=-d * s1 / (2 * grid.f_c),
        dphi_jump=0.0,
        dtau_step=dtau_step,
        dphi_step=dphi_step,
        formulation=formulation,
    )
    centers = subband_centers(k, grid)
    targets = np.arcsin(target_sines(k, spec.theta_1, spec.theta_2))
    # lobe q sits at s1 + q*(2/D)(f_c/f); read it off at its own sub-band centre
    predicted = np.arcsin(_lobe_sines(s1, orientation, params.d, grid.f_c, centers, np.arange(k)))
    profile = build_profile(params, cfg.n_t) if feasible else None
    return DesignResult(spec=spec, params=params, profile=profile, target_angles=targets,
                        predicted_angles=predicted, gamma=gamma, subband_centers=centers,
                        feasible=feasible, d_required=d_req, orientation=orientation, notes=notes)


def two_stage_design(spec: DesignSpec) -> DesignResult:
    """Real-valued grating factor and threshold-triggered (modulo) staircase."""
    return _design(spec, Formulation.MODULO)


def integer_design(spec: DesignSpec) -> DesignResult:
    """Same recipe with the grating factor rounded up to an integer and the uniform staircase."""
    return _design(spec, Formulation.UNIFORM_INTEGER)


def rotation_admissible(result: DesignResult) -> bool:
    spec = result.spec
    span = abs(math.sin(spec.theta_2) - math.sin(spec.theta_1))
    return result.gamma * span > 2 * (spec.k_users - 1) / (spec.k_users + 1)


def rotate_mapping(result: DesignResult, i: int) -> StaircaseParams:
    """Re-aim the filter so the first sub-band lands on user ``i`` (1-based); the rest follow cyclically."""
    spec = result.spec
    k = spec.k_users
    if not 1 <= i <= k:
        raise ValueError(f"rotation index {i} outside [1, {k}]")
    if not rotation_admissible(result):
        span = abs(math.sin(spec.theta_2) - math.sin(spec.theta_1))
        raise PreconditionError(
            f"rotation needs gamma*|sin(theta_2)-sin(theta_1)| > 2(K-1)/(K+1): "
            f"{result.gamma * span:.6g} <= {2 * (k - 1) / (k + 1):.6g}")
    f_first = result.subband_centers[0]
    s_i = math.sin(result.target_angles[i - 1])
    p = result.params
    dphi_step = -np.pi * ((f_first / spec.grid.f_c) * s_i + 2 * f_first * p.dtau_step)
    return replace(p, dphi_step=float(dphi_step))


def rotated_lobes(result: DesignResult, i: int) -> np.ndarray:
    """sin(theta) of the lobe each sub-band centre selects after ``rotate_mapping(result, i)``.

    Sub-band q picks lobe ``(q + i - 2) mod K``, evaluated at its own centre frequency,
    so the rotated peaks are not a permutation of the unrotated ones under squint.
    """
    k = result.spec.k_users
    if not 1 <= i <= k:
        raise ValueError(f"rotation index {i} outside [1, {k}]")
    z = (np.arange(k) + i - 1) % k
    return _lobe_sines(math.sin(result.spec.theta_1), result.orientation, result.params.d,
                       result.spec.grid.f_c, result.subband_centers, z)


CODEBOOK_FIELDS = ("n_t", "formulation", "d", "dtau_jump_s", "dphi_jump_rad", "dtau_step_s",
                   "dphi_step_rad", "delays_s", "phases_rad")


def codebook_to_dict(params: StaircaseParams, profile: DelayPhaseProfile) -> dict:
    return {
        "n_t": profile.n_t,
        "formulation": params.formulation.value,
        "d": float(params.d),
        "dtau_jump_s": float(params.dtau_jump),
        "dphi_jump_rad": float(params.dphi_jump),
        "dtau_step_s": float(params.dtau_step),
        "dphi_step_rad": float(params.dphi_step),
        "delays_s": [float(x) for x in profile.delays],
        "phases_rad": [float(x) for x in profile.phases],
    }


def codebook_from_dict(data: dict) -> tuple[StaircaseParams, DelayPhaseProfile]:
    if not isinstance(data, dict):
        raise ValueError("codebook must be a JSON object")
    missing = [k for k in CODEBOOK_FIELDS if k not in data]
    if missing:
        raise ValueError(f"codebook is missing fields: {', '.join(missing)}")
    try:
        params = StaircaseParams(
            d=float(data["d"]),
            dtau_jump=float(data["dtau_jump_s"]),
            dphi_jump=float(data["dphi_jump_rad"]),
            dtau_step=float(data["dtau_step_s"]),
            dphi_step=float(data["dphi_step_rad"]),
            formulation=Formulation(data["formulation"]),
        )
        profile = DelayPhaseProfile(data["delays_s"], data["phases_rad"])
    except (TypeError, ValueError) as exc:
        raise ValueError(f"malformed codebook: {exc}") from exc
    if profile.n_t != int(data["n_t"]):
        raise ValueError(f"codebook n_t={data['n_t']} but {profile.n_t} delays given")
    return params, profile
