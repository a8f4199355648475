"""
E-RAPiD: ergodic random access to pilots and data.

Active devices hop to a fresh random pilot in every slot and spread each
codeword over many slots, so pilot contamination is averaged out. Performance
is the use-and-then-forget sum-rate bound with maximum ratio combining, the
expectation running over activity, pilot and contender configurations.
"""

import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy.stats import linregress

from channel_core import RandomStream, db_to_linear, draw_channels

logger = logging.getLogger(__name__)


class ErapidConfig(BaseModel):
    """Crowd, array and slot parameters of one E-RAPiD operating point."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    num_devices: int = Field(800, ge=1)
    num_antennas: int = Field(100, ge=1)
    slot_length: int = Field(300, ge=2)
    num_pilots: int = Field(100, ge=1)
    activation_prob: float = Field(0.075, ge=0, le=1)
    mean_gain: float = Field(1.0, gt=0)
    gain_spread: float = Field(0.25, ge=0, lt=1)
    snr_db: float = 10.0
    ul_power: float = Field(1.0, gt=0)
    mc_slots: int = Field(400, ge=2)

    @model_validator(mode="after")
    def _pilots_fit_in_slot(self):
        if self.num_pilots >= self.slot_length:
            raise ValueError("num_pilots must be smaller than slot_length")
        return self

    @property
    def noise_power(self) -> float:
        """sigma^2 such that p * mean_gain / sigma^2 equals snr_db."""
        return self.ul_power * self.mean_gain / float(db_to_linear(self.snr_db))

    @property
    def prelog(self) -> float:
        return 1.0 - self.num_pilots / self.slot_length


@dataclass(frozen=True)
class ErapidDraws:
    """
    Common random numbers shared by every grid point of an optimization.

    Activity and pilot choices are stored as uniforms, so changing p_a or
    tau_p re-thresholds the same draws.
    """

    gains: np.ndarray
    activity: np.ndarray
    pilot_draws: np.ndarray

    @property
    def num_slots(self) -> int:
        return self.activity.shape[0]

    def active(self, activation_prob: float) -> np.ndarray:
        return self.activity < activation_prob

    def pilots(self, num_pilots: int) -> np.ndarray:
        return np.minimum((self.pilot_draws * num_pilots).astype(int), num_pilots - 1)


@dataclass(frozen=True)
class ErapidSlot:
    active: np.ndarray
    pilots: np.ndarray
    channels: np.ndarray
    gains: np.ndarray

    @property
    def contenders(self) -> Dict[int, List[int]]:
        groups: Dict[int, List[int]] = {}
        for device in np.flatnonzero(self.active):
            groups.setdefault(int(self.pilots[device]), []).append(int(device))
        return groups


@dataclass(frozen=True)
class RateBound:
    sum_rate: float
    mean_active: float
    per_active_rate: float
    std_error: float = 0.0


@dataclass(frozen=True)
class ErapidOptimum:
    activation_prob: float
    num_pilots: int
    bound: RateBound
    slot_length: int

    @property
    def pilot_fraction(self) -> float:
        return self.num_pilots / self.slot_length


@dataclass(frozen=True)
class SweepPoint:
    num_antennas: int
    slot_length: int
    sum_rate: float
    mean_active: float


@dataclass(frozen=True)
class HeuristicModel:
    """mean_active ~ x * sqrt(M * tau_u); log R* ~ slope * log(M * tau_u) + intercept."""

    x: float
    slope: float
    intercept: float

    def predict_mean_active(self, num_antennas: int, slot_length: int) -> float:
        return self.x * np.sqrt(num_antennas * slot_length)


def draw_gains(cfg: ErapidConfig, rng: RandomStream) -> np.ndarray:
    """Gains uniform in [mean (1 - spread), mean (1 + spread)]."""
    spread = rng.uniform(-1.0, 1.0, size=cfg.num_devices)
    return cfg.mean_gain * (1.0 + cfg.gain_spread * spread)


def draw_common_numbers(cfg: ErapidConfig, rng: RandomStream) -> ErapidDraws:
    gains = draw_gains(cfg, rng)
    shape = (cfg.mc_slots, cfg.num_devices)
    return ErapidDraws(gains, rng.random(shape), rng.random(shape))


def simulate_erapid_slot(
    cfg: ErapidConfig, rng: RandomStream, gains: Optional[np.ndarray] = None
) -> ErapidSlot:
    """One slot: Bernoulli(p_a) activity, uniform pilot, fresh channel per active device."""
    if gains is None:
        gains = draw_gains(cfg, rng)
    active = rng.random(cfg.num_devices) < cfg.activation_prob
    pilots = np.where(active, rng.integers(cfg.num_pilots, size=cfg.num_devices), -1)
    channels = draw_channels(gains[active], cfg.num_antennas, rng)
    channels = channels.reshape(int(np.count_nonzero(active)), cfg.num_antennas)
    return ErapidSlot(active, pilots, channels, gains)


def contaminated_mrc_sinr(
    gains: np.ndarray,
    active: np.ndarray,
    pilots: np.ndarray,
    num_antennas: int,
    num_pilots: int,
    ul_power: float,
    noise_power: float,
    include_self: bool = True,
) -> np.ndarray:
    """
    Large-scale MRC SINR under pilot contamination for a batch of slots.

    gains has shape (K,) or (slots, K); active and pilots have shape (slots, K).
    Returns SINR with the same shape, zero where a device is inactive. With
    include_self the interference sum also covers the device itself; without it
    the result is the deterministic equivalent of the instantaneous SINR.
    """
    active = np.atleast_2d(active)
    pilots = np.atleast_2d(pilots)
    num_slots, num_devices = active.shape
    gains = np.broadcast_to(gains, active.shape)
    weighted = np.where(active, gains, 0.0)

    bins = (np.arange(num_slots)[:, np.newaxis] * num_pilots + np.maximum(pilots, 0)).ravel()
    size = num_slots * num_pilots
    pilot_sum = np.bincount(bins, weights=weighted.ravel(), minlength=size)
    pilot_sq_sum = np.bincount(bins, weights=(weighted**2).ravel(), minlength=size)
    pilot_sum = pilot_sum[bins].reshape(active.shape)
    pilot_sq_sum = pilot_sq_sum[bins].reshape(active.shape)
    total = weighted.sum(axis=1, keepdims=True)

    p, m = ul_power, num_antennas
    gamma = pilot_sum + noise_power / (p * num_pilots)
    signal = m * p * gains**2 / gamma
    contamination = p * m * (pilot_sq_sum - gains**2) / gamma
    spread = p * (total if include_self else total - gains)
    sinr = signal / (contamination + spread + noise_power)
    return np.where(active, sinr, 0.0)


def configuration_moments(
    cfg: ErapidConfig, draws: ErapidDraws
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Per-slot statistics of the MMSE-scaled MR combiner, shape (slots, K).

    Every device is put on the air in every slot with its own pilot draw while the
    others follow their activity draws. Returns 1/gamma and the residual term
    M * (same-pilot gains of the others, squared) / gamma^2
    + (all active gains + sigma^2 / p) / gamma.
    """
    active = draws.active(cfg.activation_prob)
    pilots = draws.pilots(cfg.num_pilots)
    num_slots = active.shape[0]
    gains = np.broadcast_to(draws.gains, active.shape)
    weighted = np.where(active, gains, 0.0)

    bins = np.arange(num_slots)[:, np.newaxis] * cfg.num_pilots + pilots
    size = num_slots * cfg.num_pilots
    pilot_sum = np.bincount(bins.ravel(), weights=weighted.ravel(), minlength=size)[bins]
    pilot_sq_sum = np.bincount(bins.ravel(), weights=(weighted**2).ravel(), minlength=size)[bins]
    total = weighted.sum(axis=1, keepdims=True)

    # devices idle in a slot still see it as if they had transmitted
    own = gains - weighted
    p, sigma2 = cfg.ul_power, cfg.noise_power
    inverse = 1.0 / (pilot_sum + own + sigma2 / (p * cfg.num_pilots))
    contamination = pilot_sq_sum - weighted**2
    residual = cfg.num_antennas * contamination * inverse**2 + (total + own + sigma2 / p) * inverse
    return inverse, residual


def _bound_sinr(
    gains: np.ndarray, inverse: np.ndarray, residual: np.ndarray, num_antennas: int
) -> np.ndarray:
    signal = num_antennas * gains**2
    mean_inverse = inverse.mean(axis=0)
    return signal * mean_inverse**2 / (residual.mean(axis=0) + signal * inverse.var(axis=0))


def ergodic_sum_rate(
    cfg: ErapidConfig,
    rng: Optional[RandomStream] = None,
    draws: Optional[ErapidDraws] = None,
    num_batches: int = 10,
) -> RateBound:
    """
    Use-and-then-forget bound with the expectation taken over configurations.

    The combiner is the pilot observation scaled by 1/gamma of its slot, which the
    BS reads off the received pilot energy. Per device:
    SINR_k = M beta_k^2 E[1/gamma]^2 / (E[residual] + M beta_k^2 Var[1/gamma])
    and R = (1 - tau_p/tau_u) p_a sum_k log2(1 + SINR_k). The standard error comes
    from batch means over slots.
    """
    if draws is None:
        if rng is None:
            raise ValueError("either a random stream or common draws are required")
        draws = draw_common_numbers(cfg, rng)

    mean_active = cfg.num_devices * cfg.activation_prob
    if cfg.activation_prob == 0:
        return RateBound(0.0, 0.0, 0.0, 0.0)

    inverse, residual = configuration_moments(cfg, draws)
    scale = cfg.prelog * cfg.activation_prob

    def rate(rows) -> float:
        sinr = _bound_sinr(draws.gains, inverse[rows], residual[rows], cfg.num_antennas)
        return scale * float(np.sum(np.log2(1.0 + sinr)))

    sum_rate = rate(slice(None))
    batches = np.array_split(np.arange(draws.num_slots), min(num_batches, draws.num_slots))
    batch_rates = [rate(batch) for batch in batches]
    std_error = float(np.std(batch_rates, ddof=1) / np.sqrt(len(batch_rates)))
    return RateBound(sum_rate, mean_active, sum_rate / mean_active, std_error)


def optimize_erapid(
    cfg: ErapidConfig,
    activation_grid: Sequence[float],
    pilot_grid: Sequence[int],
    rng: Optional[RandomStream] = None,
    draws: Optional[ErapidDraws] = None,
) -> ErapidOptimum:
    """
    Exhaustive search of (p_a, tau_p) with common random numbers.

    Ties go to the smaller tau_p, then the smaller p_a. Pilot counts that do not
    fit in the slot are skipped.
    """
    pilot_grid = sorted(int(t) for t in pilot_grid if 1 <= int(t) < cfg.slot_length)
    activation_grid = sorted(float(a) for a in activation_grid)
    if not pilot_grid or not activation_grid:
        raise ValueError("optimization grid is empty")
    if draws is None:
        if rng is None:
            raise ValueError("either a random stream or common draws are required")
        draws = draw_common_numbers(cfg, rng)

    best: Optional[ErapidOptimum] = None
    for num_pilots in pilot_grid:
        for activation_prob in activation_grid:
            point = cfg.model_copy(
                update={"num_pilots": num_pilots, "activation_prob": activation_prob}
            )
            bound = ergodic_sum_rate(point, draws=draws)
            if best is None or bound.sum_rate > best.bound.sum_rate:
                best = ErapidOptimum(activation_prob, num_pilots, bound, cfg.slot_length)

    logger.debug(
        "E-RAPiD optimum M=%d tau_u=%d: p_a=%.3f tau_p=%d R=%.2f",
        cfg.num_antennas,
        cfg.slot_length,
        best.activation_prob,
        best.num_pilots,
        best.bound.sum_rate,
    )
    return best


def fit_heuristic(points: Sequence[SweepPoint]) -> HeuristicModel:
    """Fit the sqrt(M tau_u) scaling to optimized sweep results."""
    if len(points) < 4:
        raise ValueError(f"need at least 4 sweep points, got {len(points)}")
    products = np.array([p.num_antennas * p.slot_length for p in points], dtype=float)
    if len(np.unique(products)) < 2:
        raise ValueError("sweep is degenerate: all points share the same M * tau_u")

    rates = np.array([p.sum_rate for p in points], dtype=float)
    regression = linregress(np.log(products), np.log(rates))

    roots = np.sqrt(products)
    active = np.array([p.mean_active for p in points], dtype=float)
    x = float(np.dot(active, roots) / np.dot(roots, roots))
    return HeuristicModel(x=x, slope=float(regression.slope), intercept=float(regression.intercept))


def pilot_signatures(draws: ErapidDraws, activation_prob: float, num_pilots: int) -> np.ndarray:
    """Per-device pilot hopping sequence across slots, -1 where inactive (K x slots)."""
    pilots = np.where(draws.active(activation_prob), draws.pilots(num_pilots), -1)
    return pilots.T


def signatures_unique(signatures: np.ndarray) -> bool:
    return len(np.unique(signatures, axis=0)) == len(signatures)
