"""
C-RAPiD: coded random access to pilots and data.

Every active device sends a replica of its packet, with a random pilot, in each
slot of a frame where it is active. The BS combines with MRC on contaminated
estimates, decodes every replica whose SINR clears the rate threshold and
cancels all replicas of decoded devices, repeating until nothing changes.
ALOHA and scheduled Massive MIMO (SMM) are the reference schemes.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, List, Literal, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from channel_core import (
    PilotBook,
    RandomStream,
    SystemConfig,
    complex_gaussian,
    db_to_linear,
    draw_channels,
    pilot_correlate,
    receive_pilots,
)
from erapid import contaminated_mrc_sinr

logger = logging.getLogger(__name__)

Scheme = Literal["crapid", "aloha", "smm"]
SCHEMES = ("crapid", "aloha", "smm")


class CrapidConfig(BaseModel):
    """Frame, rate and power-controlled link parameters."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    num_devices: int = Field(2000, ge=1)
    num_antennas: int = Field(400, ge=1)
    num_pilots: int = Field(10, ge=1)
    frame_length: int = Field(10, ge=1)
    activation_prob: float = Field(0.1, ge=0, le=1)
    code_rate: float = Field(0.5, gt=0)
    snr_db: float = 10.0
    sic_max_iters: int = Field(1000, ge=1)
    cancellation_efficiency: float = Field(1.0, ge=0, le=1)
    num_realizations: int = Field(20, ge=1)
    num_symbols: int = Field(200, ge=1)

    @property
    def noise_power(self) -> float:
        """Power control: p = beta = 1, so sigma^2 = 1 / SNR."""
        return 1.0 / float(db_to_linear(self.snr_db))

    @property
    def decoding_threshold(self) -> float:
        """QPSK at code rate R carries 2R bit/symbol."""
        return 2.0 ** (2.0 * self.code_rate) - 1.0

    def system_config(self) -> SystemConfig:
        return SystemConfig(
            num_antennas=self.num_antennas,
            num_pilots=self.num_pilots,
            slot_length=self.num_pilots,
            ul_power=1.0,
            noise_power=self.noise_power,
        )


@dataclass(frozen=True)
class ReplicaFrame:
    """Activity and pilot choice per (device, slot); pilot is -1 where inactive."""

    active: np.ndarray
    pilots: np.ndarray

    @property
    def num_devices(self) -> int:
        return self.active.shape[0]

    @property
    def frame_length(self) -> int:
        return self.active.shape[1]

    @property
    def replicas(self) -> List[Tuple[int, int, int]]:
        devices, slots = np.nonzero(self.active)
        return [(int(d), int(s), int(self.pilots[d, s])) for d, s in zip(devices, slots)]

    def slot_contenders(self, slot: int) -> Dict[int, List[int]]:
        groups: Dict[int, List[int]] = {}
        for device in np.flatnonzero(self.active[:, slot]):
            groups.setdefault(int(self.pilots[device, slot]), []).append(int(device))
        return groups

    @classmethod
    def from_replicas(
        cls, num_devices: int, frame_length: int, replicas: Sequence[Tuple[int, int, int]]
    ) -> "ReplicaFrame":
        active = np.zeros((num_devices, frame_length), dtype=bool)
        pilots = np.full((num_devices, frame_length), -1)
        for device, slot, pilot in replicas:
            if active[device, slot]:
                raise ValueError(f"device {device} has two replicas in slot {slot}")
            active[device, slot] = True
            pilots[device, slot] = pilot
        return cls(active, pilots)


@dataclass(frozen=True)
class ThroughputResult:
    scheme: str
    decoded_count: int
    throughput: float
    decoded: FrozenSet[int] = field(default_factory=frozenset)
    iterations: int = 0
    converged: bool = True


@dataclass(frozen=True)
class SchemeComparison:
    num_antennas: int
    scheme: str
    code_rate: float
    throughput: float
    num_pilots: int
    activation_prob: float
    frame_length: int


def build_frame(cfg: CrapidConfig, rng: RandomStream) -> ReplicaFrame:
    """Bernoulli(p_a) activity per (device, slot) and a uniform pilot per replica."""
    shape = (cfg.num_devices, cfg.frame_length)
    active = rng.random(shape) < cfg.activation_prob
    pilots = np.where(active, rng.integers(cfg.num_pilots, size=shape), -1)
    return ReplicaFrame(active, pilots)


def _residual_weights(decoded: np.ndarray, cfg: CrapidConfig) -> np.ndarray:
    return np.where(decoded, 1.0 - cfg.cancellation_efficiency, 1.0)


def frame_sinr(frame: ReplicaFrame, decoded, cfg: CrapidConfig) -> np.ndarray:
    """Deterministic-equivalent MRC SINR of every (device, slot), zero where idle."""
    decoded = np.asarray(decoded, dtype=bool)
    weights = _residual_weights(decoded, cfg)
    present = frame.active & (weights > 0)[:, np.newaxis]
    sinr = contaminated_mrc_sinr(
        weights,
        present.T,
        frame.pilots.T,
        cfg.num_antennas,
        cfg.num_pilots,
        1.0,
        cfg.noise_power,
        include_self=False,
    )
    return sinr.T


def slot_sinr(
    frame: ReplicaFrame,
    slot: int,
    device: int,
    decoded,
    cfg: CrapidConfig,
    mode: Literal["asymptotic", "exact"] = "asymptotic",
    rng: Optional[RandomStream] = None,
) -> float:
    """
    Post-MRC SINR of `device`'s replica in `slot` once `decoded` devices are cancelled.

    The exact mode draws channels, forms the contaminated pilot estimate, combines
    `num_symbols` QPSK symbols per realization and measures the empirical ratio of
    signal to everything else, pooled over `num_realizations` realizations.
    """
    if not frame.active[device, slot]:
        raise ValueError(f"device {device} has no replica in slot {slot}")
    decoded_mask = np.zeros(frame.num_devices, dtype=bool)
    decoded_mask[list(decoded)] = True
    decoded_mask[device] = False

    if mode == "asymptotic":
        return float(frame_sinr(frame, decoded_mask, cfg)[device, slot])
    if mode != "exact":
        raise ValueError(f"unknown SINR mode: {mode}")
    if rng is None:
        raise ValueError("exact mode requires a random stream")

    weights = _residual_weights(decoded_mask, cfg)
    users = np.flatnonzero(frame.active[:, slot] & (weights > 0))
    own = int(np.flatnonzero(users == device)[0])
    pilots = frame.pilots[users, slot]
    system = cfg.system_config()
    book = PilotBook.orthogonal(cfg.num_pilots)

    signal_power = distortion_power = 0.0
    for _ in range(cfg.num_realizations):
        channels = draw_channels(weights[users], cfg.num_antennas, rng)
        received_pilots = receive_pilots(channels, pilots, book, system, rng)
        combiner = pilot_correlate(received_pilots, int(pilots[own]), book)

        bits = rng.integers(2, size=(2, len(users), cfg.num_symbols))
        symbols = ((2 * bits[0] - 1) + 1j * (2 * bits[1] - 1)) / np.sqrt(2.0)
        noise = complex_gaussian((cfg.num_antennas, cfg.num_symbols), cfg.noise_power, rng)
        received = channels.T @ symbols + noise
        combined = combiner.conj() @ received
        wanted = (combiner.conj() @ channels[own]) * symbols[own]

        signal_power += float(np.mean(np.abs(wanted) ** 2))
        distortion_power += float(np.mean(np.abs(combined - wanted) ** 2))

    return signal_power / distortion_power


def sic_decode(
    frame: ReplicaFrame,
    cfg: CrapidConfig,
    order_rng: Optional[RandomStream] = None,
) -> ThroughputResult:
    """
    Peeling decoder: mark every device with a replica above the threshold,
    cancel all of its replicas, repeat until nothing new decodes.

    With `order_rng` a single randomly chosen decodable device is marked per step.
    """
    threshold = cfg.decoding_threshold
    decoded = np.zeros(frame.num_devices, dtype=bool)
    iterations = 0
    converged = False

    while iterations < cfg.sic_max_iters:
        sinr = frame_sinr(frame, decoded, cfg)
        decodable = ~decoded & np.any(frame.active & (sinr >= threshold), axis=1)
        if not decodable.any():
            converged = True
            break
        iterations += 1
        if order_rng is None:
            decoded |= decodable
        else:
            decoded[order_rng.choice(np.flatnonzero(decodable))] = True

    if not converged:
        logger.warning("SIC stopped after %d iterations without a fixed point", iterations)

    count = int(np.count_nonzero(decoded))
    return ThroughputResult(
        scheme="crapid",
        decoded_count=count,
        throughput=count / frame.frame_length,
        decoded=frozenset(int(d) for d in np.flatnonzero(decoded)),
        iterations=iterations,
        converged=converged,
    )


def brute_force_decodable(frame: ReplicaFrame, cfg: CrapidConfig) -> FrozenSet[int]:
    """Largest decoded set reachable by any cancellation order (small frames only)."""
    threshold = cfg.decoding_threshold
    best: FrozenSet[int] = frozenset()
    visited = set()
    stack = [frozenset()]

    while stack:
        state = stack.pop()
        if state in visited:
            continue
        visited.add(state)
        mask = np.zeros(frame.num_devices, dtype=bool)
        mask[list(state)] = True
        sinr = frame_sinr(frame, mask, cfg)
        decodable = ~mask & np.any(frame.active & (sinr >= threshold), axis=1)
        if not decodable.any() and len(state) > len(best):
            best = state
        stack.extend(state | {int(d)} for d in np.flatnonzero(decodable))
    return best


def aloha_throughput(cfg: CrapidConfig, rng: RandomStream) -> ThroughputResult:
    """
    One ALOHA frame: an active device sends once, in a uniform slot with a uniform
    pilot, and counts only if alone on its (slot, pilot) and above the threshold.
    """
    k, delta = cfg.num_devices, cfg.frame_length
    active = rng.random(k) < cfg.activation_prob
    slots = rng.integers(delta, size=k)
    pilots = rng.integers(cfg.num_pilots, size=k)

    replicas = np.zeros((k, delta), dtype=bool)
    replicas[np.flatnonzero(active), slots[active]] = True
    frame = ReplicaFrame(replicas, np.where(replicas, pilots[:, np.newaxis], -1))

    resource = slots * cfg.num_pilots + pilots
    occupancy = np.bincount(resource[active], minlength=delta * cfg.num_pilots)
    alone = active & (occupancy[resource] == 1)
    sinr = frame_sinr(frame, np.zeros(k, dtype=bool), cfg)[np.arange(k), slots]
    decoded = alone & (sinr >= cfg.decoding_threshold)

    count = int(np.count_nonzero(decoded))
    return ThroughputResult(
        scheme="aloha",
        decoded_count=count,
        throughput=count / delta,
        decoded=frozenset(int(d) for d in np.flatnonzero(decoded)),
    )


def smm_throughput(cfg: CrapidConfig, backlog: Optional[int] = None) -> ThroughputResult:
    """
    Scheduled Massive MIMO: min(tau_p, backlog) devices per slot on distinct pilots,
    so estimates are clean and the only impairment is multi-user interference.

    The backlog defaults to the traffic the random access schemes see: K p_a
    devices with a packet in every slot.
    """
    if backlog is None:
        backlog = int(round(cfg.num_devices * cfg.activation_prob))
    scheduled = min(cfg.num_pilots, backlog)
    if scheduled == 0:
        return ThroughputResult("smm", 0, 0.0)

    active = np.ones((1, scheduled), dtype=bool)
    pilots = np.arange(scheduled)[np.newaxis, :]
    sinr = contaminated_mrc_sinr(
        np.ones(scheduled),
        active,
        pilots,
        cfg.num_antennas,
        cfg.num_pilots,
        1.0,
        cfg.noise_power,
        include_self=False,
    )
    per_slot = int(np.count_nonzero(sinr >= cfg.decoding_threshold))
    return ThroughputResult(
        scheme="smm",
        decoded_count=per_slot * cfg.frame_length,
        throughput=float(per_slot),
    )


def mean_throughput(
    cfg: CrapidConfig, scheme: Scheme, num_frames: int, rng: RandomStream
) -> float:
    if scheme == "smm":
        return smm_throughput(cfg).throughput
    if scheme == "aloha":
        return float(np.mean([aloha_throughput(cfg, rng).throughput for _ in range(num_frames)]))
    return float(
        np.mean([sic_decode(build_frame(cfg, rng), cfg).throughput for _ in range(num_frames)])
    )


def optimize_scheme(
    cfg: CrapidConfig,
    scheme: Scheme,
    pilot_grid: Sequence[int],
    frame_grid: Sequence[int],
    activation_grid: Sequence[float],
    num_frames: int,
    seed: int,
) -> SchemeComparison:
    """Grid search of (tau_p, Delta, p_a); every point replays the same seed."""
    if not pilot_grid or not frame_grid or not activation_grid:
        raise ValueError("optimization grid is empty")
    if scheme == "smm":
        # frame length does not affect a fully scheduled system
        frame_grid = [cfg.frame_length]

    best: Optional[SchemeComparison] = None
    for num_pilots in sorted(pilot_grid):
        for frame_length in sorted(frame_grid):
            for activation_prob in sorted(activation_grid):
                point = cfg.model_copy(
                    update={
                        "num_pilots": int(num_pilots),
                        "frame_length": int(frame_length),
                        "activation_prob": float(activation_prob),
                    }
                )
                value = mean_throughput(
                    point, scheme, num_frames, np.random.default_rng(seed)
                )
                if best is None or value > best.throughput:
                    best = SchemeComparison(
                        cfg.num_antennas,
                        scheme,
                        cfg.code_rate,
                        value,
                        int(num_pilots),
                        float(activation_prob),
                        int(frame_length),
                    )
    return best


def compare_schemes(
    cfg: CrapidConfig,
    antenna_values: Sequence[int],
    code_rates: Sequence[float],
    pilot_grid: Sequence[int],
    frame_grid: Sequence[int],
    activation_grid: Sequence[float],
    num_frames: int,
    rng: RandomStream,
) -> List[SchemeComparison]:
    """Optimized throughput of every scheme for each (M, R)."""
    seed = int(rng.integers(2**63))
    rows = []
    for num_antennas in antenna_values:
        for code_rate in code_rates:
            point = cfg.model_copy(
                update={"num_antennas": int(num_antennas), "code_rate": float(code_rate)}
            )
            for scheme in SCHEMES:
                rows.append(
                    optimize_scheme(
                        point,
                        scheme,
                        pilot_grid,
                        frame_grid,
                        activation_grid,
                        num_frames,
                        seed,
                    )
                )
                logger.debug("%s M=%d R=%.2f -> %.3f", scheme, num_antennas, code_rate, rows[-1].throughput)
    return rows
