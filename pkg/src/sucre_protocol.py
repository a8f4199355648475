"""
Four-phase random access with strongest-user collision resolution (SUCRe).

Phase 1: contenders send a random access pilot.
Phase 2: the BS beamforms back along each pilot's correlation; every contender
         estimates the summed path gain of its pilot.
Phase 3: a contender repeats its pilot iff it believes it is the strongest.
Phase 4: a pilot with exactly one Phase 3 transmitter admits that device.

The retry-only baseline skips Phases 2-3, and the centralized mode resolves
collisions with coded pilots (see coded_pilot).
"""

import logging
from dataclasses import dataclass
from typing import Dict, List, Literal, Optional, Sequence, Set, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from channel_core import (
    PilotBook,
    Population,
    RandomStream,
    SystemConfig,
    complex_gaussian,
    correlate_all,
    draw_channels,
    receive_pilots,
    sample_population,
)
from coded_pilot import assign_unique_patterns, resolve_centralized
from config import WARMUP_SLOTS

logger = logging.getLogger(__name__)

CrowdMode = Literal["sucre", "baseline", "centralized"]
CROWD_MODES = ("sucre", "baseline", "centralized")


class SucreConfig(BaseModel):
    """Retry policy and Phase 2 estimator settings."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    retry_prob: float = Field(0.5, gt=0, le=1)
    max_attempts: int = Field(10, ge=1)
    decision_bias: float = Field(0.0, ge=0)
    estimator_mode: Literal["ideal", "noisy"] = "ideal"
    dl_power: float = Field(1.0, gt=0)
    coded_pilot_length: int = Field(20, ge=2)
    coded_pilot_nulls: int = Field(10, ge=1)

    @model_validator(mode="after")
    def _nulls_fit(self):
        if self.coded_pilot_nulls >= self.coded_pilot_length:
            raise ValueError("coded_pilot_nulls must be smaller than coded_pilot_length")
        return self


@dataclass
class AccessState:
    """Attempts used by each device's pending request; 0 means idle."""

    attempts: np.ndarray

    @classmethod
    def idle(cls, num_devices: int) -> "AccessState":
        return cls(np.zeros(num_devices, dtype=int))

    @property
    def backlogged(self) -> np.ndarray:
        return self.attempts > 0

    def copy(self) -> "AccessState":
        return AccessState(self.attempts.copy())


@dataclass(frozen=True)
class Phase1Result:
    """Phase 1 signals of one slot; channels stay valid for Phases 2-3."""

    devices: np.ndarray
    pilots: np.ndarray
    channels: np.ndarray
    correlations: np.ndarray

    def channel_of(self, device: int) -> np.ndarray:
        return self.channels[self._row(device)]

    def _row(self, device: int) -> int:
        rows = np.flatnonzero(self.devices == device)
        if len(rows) == 0:
            raise ValueError(f"device {device} did not transmit in Phase 1")
        return int(rows[0])


@dataclass(frozen=True)
class AccessRound:
    """Everything that happened in one access slot, one entry per contender."""

    devices: np.ndarray
    pilots: np.ndarray
    gain_estimates: np.ndarray
    decisions: np.ndarray
    phase3_pilots: np.ndarray
    admitted_mask: np.ndarray
    attempt_numbers: np.ndarray
    denied: np.ndarray

    @property
    def contenders(self) -> Dict[int, List[int]]:
        return _group_by_pilot(self.devices, self.pilots)

    @property
    def phase3_contenders(self) -> Dict[int, List[int]]:
        sent = self.phase3_pilots >= 0
        return _group_by_pilot(self.devices[sent], self.phase3_pilots[sent])

    @property
    def admitted(self) -> Set[int]:
        return {int(d) for d in self.devices[self.admitted_mask]}

    def collision_pilots(self) -> np.ndarray:
        pilots, counts = np.unique(self.pilots, return_counts=True)
        return pilots[counts >= 2]

    def resolved_collisions(self) -> int:
        """Phase 1 collisions that ended with one of their contenders admitted."""
        return sum(
            int(np.any(self.admitted_mask[self.pilots == pilot]))
            for pilot in self.collision_pilots()
        )


@dataclass(frozen=True)
class CrowdStats:
    mean_attempts: float
    admission_fraction: float
    resolution_fraction: float
    denied_fraction: float
    collision_fraction: float
    finished_requests: int
    collisions: int


def _group_by_pilot(devices, pilots) -> Dict[int, List[int]]:
    groups: Dict[int, List[int]] = {}
    for device, pilot in zip(devices, pilots):
        groups.setdefault(int(pilot), []).append(int(device))
    return groups


def phase1(
    active: Sequence[Tuple[int, int]],
    population: Population,
    config: SystemConfig,
    rng: RandomStream,
    noise: bool = True,
) -> Phase1Result:
    """Draw fresh channels for the (device, pilot) pairs and correlate every pilot."""
    pairs = np.asarray(list(active), dtype=int).reshape(-1, 2)
    devices, pilots = pairs[:, 0], pairs[:, 1]
    book = PilotBook.orthogonal(config.num_pilots)

    channels = draw_channels(population.path_gains[devices], config.num_antennas, rng)
    channels = channels.reshape(len(devices), config.num_antennas)
    received = receive_pilots(channels, pilots, book, config, rng, noise=noise)
    return Phase1Result(devices, pilots, channels, correlate_all(received, book))


def phase2_gain_estimate(
    device: int,
    pilot: int,
    observation: Phase1Result,
    population: Population,
    config: SystemConfig,
    sucre_config: SucreConfig,
    rng: Optional[RandomStream] = None,
) -> float:
    """
    Estimate of the summed path gain of the contenders on `pilot`.

    The noisy estimator inverts E|z|^2 = q M beta_k^2 / (sum beta + sigma^2 / (p tau_p))
    for the precoded downlink scalar z; the result never drops below beta_k.
    """
    users = observation.devices[observation.pilots == pilot]
    if device not in users:
        raise ValueError(f"device {device} is not a Phase 1 contender on pilot {pilot}")
    own_gain = float(population.path_gains[device])

    if sucre_config.estimator_mode == "ideal":
        return float(np.sum(population.path_gains[users]))

    if rng is None:
        raise ValueError("the noisy estimator requires a random stream")
    correlation = observation.correlations[pilot]
    channel = observation.channel_of(device)
    norm = np.linalg.norm(correlation)
    if norm == 0:
        return float("inf")

    q = sucre_config.dl_power
    z = np.sqrt(q) * (channel.conj() @ correlation) / norm
    z = z + complex_gaussian((), config.noise_power / config.num_pilots, rng)
    return _invert_downlink_power(abs(z) ** 2, own_gain, config, sucre_config)


def _invert_downlink_power(power, own_gain, config, sucre_config):
    power = np.asarray(power, dtype=float)
    noise_term = config.noise_power / (config.ul_power * config.num_pilots)
    with np.errstate(divide="ignore"):
        total = (
            sucre_config.dl_power * config.num_antennas * own_gain**2 / power
            - noise_term
        )
    estimate = np.maximum(total, own_gain)
    return estimate if np.ndim(estimate) else float(estimate)


def estimate_sum_gains(
    observation: Optional[Phase1Result],
    devices: np.ndarray,
    pilots: np.ndarray,
    population: Population,
    config: SystemConfig,
    sucre_config: SucreConfig,
    rng: Optional[RandomStream] = None,
) -> np.ndarray:
    """Phase 2 estimate for every contender of the slot at once."""
    gains = population.path_gains[devices]
    if sucre_config.estimator_mode == "ideal":
        sums = np.bincount(pilots, weights=gains, minlength=config.num_pilots)
        return sums[pilots]

    correlations = observation.correlations[pilots]
    norms = np.linalg.norm(correlations, axis=1)
    inner = np.sum(observation.channels.conj() * correlations, axis=1)
    z = np.sqrt(sucre_config.dl_power) * inner / np.where(norms > 0, norms, np.inf)
    z = z + complex_gaussian(len(z), config.noise_power / config.num_pilots, rng)
    estimates = np.empty(len(devices))
    for row, gain in enumerate(gains):
        estimates[row] = _invert_downlink_power(
            abs(z[row]) ** 2, float(gain), config, sucre_config
        )
    return estimates


def sucre_decision(own_gain, estimated_sum, decision_bias: float = 0.0):
    """Repeat the pilot iff beta_k > alpha_hat / 2 + bias (strict)."""
    decision = np.greater(own_gain, np.asarray(estimated_sum) / 2.0 + decision_bias)
    return decision if np.ndim(decision) else bool(decision)


def run_access_slot(
    population: Population,
    config: SystemConfig,
    sucre_config: SucreConfig,
    pending: AccessState,
    rng: RandomStream,
    mode: CrowdMode = "sucre",
    coded_pilots=None,
) -> Tuple[AccessRound, AccessState]:
    """One access occasion: activation, Phases 1-4, backlog and denial bookkeeping."""
    attempts = pending.attempts
    idle = attempts == 0
    draw = rng.random(population.num_devices)
    joining = (idle & (draw < population.activation_prob)) | (
        ~idle & (draw < sucre_config.retry_prob)
    )

    devices = np.flatnonzero(joining)
    pilots = rng.integers(config.num_pilots, size=len(devices))
    attempt_numbers = attempts[devices] + 1
    gains = population.path_gains[devices]
    phase1_counts = np.bincount(pilots, minlength=config.num_pilots)

    estimates = np.full(len(devices), np.nan)
    if mode == "sucre":
        observation = None
        if sucre_config.estimator_mode == "noisy":
            observation = phase1(zip(devices, pilots), population, config, rng)
        estimates = estimate_sum_gains(
            observation, devices, pilots, population, config, sucre_config, rng
        )
        decisions = sucre_decision(gains, estimates, sucre_config.decision_bias)
        phase3_pilots = np.where(decisions, pilots, -1)
        phase3_counts = np.bincount(pilots[decisions], minlength=config.num_pilots)
        admitted = decisions & (phase3_counts[pilots] == 1)
    elif mode == "baseline":
        admitted = phase1_counts[pilots] == 1
        decisions = admitted.copy()
        phase3_pilots = np.full(len(devices), -1)
    elif mode == "centralized":
        if coded_pilots is None:
            raise ValueError("centralized mode needs one coded pilot per device")
        contenders_coded = [coded_pilots[d] for d in devices]
        admitted, phase3_pilots = resolve_centralized(
            pilots, contenders_coded, config.num_pilots, rng
        )
        decisions = phase3_pilots >= 0
    else:
        raise ValueError(f"unknown access mode: {mode}")

    updated = pending.copy()
    updated.attempts[devices] = attempt_numbers
    updated.attempts[devices[admitted]] = 0
    exhausted = ~admitted & (attempt_numbers >= sucre_config.max_attempts)
    denied = devices[exhausted]
    updated.attempts[denied] = 0

    access_round = AccessRound(
        devices=devices,
        pilots=pilots,
        gain_estimates=estimates,
        decisions=np.asarray(decisions, dtype=bool),
        phase3_pilots=phase3_pilots,
        admitted_mask=admitted,
        attempt_numbers=attempt_numbers,
        denied=denied,
    )
    return access_round, updated


def run_crowd_scenario(
    num_devices: int,
    config: SystemConfig,
    sucre_config: SucreConfig,
    mode: CrowdMode,
    num_slots: int,
    rng: RandomStream,
    activation_prob: float = 0.001,
    warmup_slots: int = WARMUP_SLOTS,
) -> CrowdStats:
    """Steady-state access statistics of a crowd of `num_devices` devices."""
    population = sample_population(config, num_devices, activation_prob, rng)
    coded_pilots = None
    if mode == "centralized":
        coded_pilots = assign_unique_patterns(
            num_devices,
            sucre_config.coded_pilot_length,
            sucre_config.coded_pilot_nulls,
            rng,
        )

    state = AccessState.idle(num_devices)
    finished = admitted = denied = attempts_total = 0
    collisions = resolved = used_pilots = 0

    for slot in range(warmup_slots + num_slots):
        access_round, state = run_access_slot(
            population, config, sucre_config, state, rng, mode, coded_pilots
        )
        if slot < warmup_slots:
            continue

        admitted_now = int(np.count_nonzero(access_round.admitted_mask))
        done = access_round.admitted_mask | np.isin(
            access_round.devices, access_round.denied
        )
        attempts_total += int(np.sum(access_round.attempt_numbers[done]))
        admitted += admitted_now
        denied += len(access_round.denied)
        finished += admitted_now + len(access_round.denied)

        collision_pilots = access_round.collision_pilots()
        collisions += len(collision_pilots)
        resolved += access_round.resolved_collisions()
        used_pilots += len(np.unique(access_round.pilots))

    logger.info(
        "%s crowd K=%d: %d requests finished, %d admitted, %d denied",
        mode,
        num_devices,
        finished,
        admitted,
        denied,
    )
    if finished == 0:
        nan = float("nan")
        return CrowdStats(nan, nan, nan, nan, 0.0, 0, collisions)

    return CrowdStats(
        mean_attempts=attempts_total / finished,
        admission_fraction=admitted / finished,
        resolution_fraction=resolved / collisions if collisions else float("nan"),
        denied_fraction=denied / finished,
        collision_fraction=collisions / used_pilots if used_pilots else 0.0,
        finished_requests=finished,
        collisions=collisions,
    )
