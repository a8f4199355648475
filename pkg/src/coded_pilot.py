"""
Centralized collision detection with on-off coded pilots.

A coded pilot has `num_nulls` silent symbols at random positions; the on-off
pattern identifies the device. The base station counts silent positions: fewer
than `num_nulls` means two or more devices overlapped.
"""

import logging
from dataclasses import dataclass
from enum import Enum
from itertools import combinations
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import comb

from channel_core import RandomStream, complex_gaussian, draw_channels
from config import DETECTOR_THRESHOLD_FACTOR

logger = logging.getLogger(__name__)


class CollisionOutcome(str, Enum):
    COLLISION = "collision"
    NO_COLLISION = "no_collision"
    NO_TRANSMISSION = "no_transmission"


@dataclass(frozen=True)
class CodedPilot:
    """On-off pilot of `length` symbols; `null_positions` is sorted."""

    length: int
    null_positions: Tuple[int, ...]

    @property
    def num_nulls(self) -> int:
        return len(self.null_positions)

    @property
    def useful_positions(self) -> Tuple[int, ...]:
        nulls = set(self.null_positions)
        return tuple(i for i in range(self.length) if i not in nulls)

    @property
    def pattern(self) -> np.ndarray:
        """True where the pilot carries a non-zero symbol."""
        on = np.ones(self.length, dtype=bool)
        on[list(self.null_positions)] = False
        return on


def _check_lengths(length: int, num_nulls: int):
    if not 0 < num_nulls < length:
        raise ValueError(f"need 0 < num_nulls < length, got {num_nulls} and {length}")


def generate_coded_pilot(length: int, num_nulls: int, rng: RandomStream) -> CodedPilot:
    """Draw `num_nulls` distinct null positions uniformly without replacement."""
    _check_lengths(length, num_nulls)
    nulls = rng.choice(length, size=num_nulls, replace=False)
    return CodedPilot(length, tuple(sorted(int(i) for i in nulls)))


def assign_unique_patterns(
    num_devices: int, length: int, num_nulls: int, rng: RandomStream
) -> List[CodedPilot]:
    """Device-unique coded pilots for one simulation."""
    _check_lengths(length, num_nulls)
    capacity = comb(length, num_nulls, exact=True)
    if num_devices > capacity:
        raise ValueError(
            f"{num_devices} devices exceed the {capacity} distinct patterns "
            f"of length {length} with {num_nulls} nulls"
        )

    seen = set()
    pilots = []
    while len(pilots) < num_devices:
        pilot = generate_coded_pilot(length, num_nulls, rng)
        if pilot.null_positions in seen:
            continue
        seen.add(pilot.null_positions)
        pilots.append(pilot)
    return pilots


def classify_silent_count(silent: int, num_nulls: int) -> CollisionOutcome:
    if silent > num_nulls:
        return CollisionOutcome.NO_TRANSMISSION
    if silent < num_nulls:
        return CollisionOutcome.COLLISION
    return CollisionOutcome.NO_COLLISION


def detect_collision(
    received_energy_per_position, num_nulls: int, energy_threshold: float
) -> CollisionOutcome:
    """Count positions below the threshold and compare with `num_nulls`."""
    if energy_threshold <= 0:
        raise ValueError("energy_threshold must be positive")
    energy = np.asarray(received_energy_per_position, dtype=float)
    silent = int(np.count_nonzero(energy < energy_threshold))
    return classify_silent_count(silent, num_nulls)


def noiseless_energy(pilots: Sequence[CodedPilot], powers=None) -> np.ndarray:
    """Per-position energy without fading or noise: sum of received powers."""
    if not pilots:
        raise ValueError("need at least one coded pilot")
    patterns = np.array([p.pattern for p in pilots], dtype=float)
    powers = np.ones(len(pilots)) if powers is None else np.asarray(powers, dtype=float)
    return powers @ patterns


def received_energy(
    pilots: Sequence[CodedPilot],
    snrs,
    num_antennas: int,
    noise_power: float,
    rng: RandomStream,
) -> np.ndarray:
    """
    Per-position received energy averaged over the M antennas.

    Each device keeps one Rayleigh channel over the whole pilot; every symbol
    position adds CN(0, noise_power) noise per antenna.
    """
    if not pilots:
        raise ValueError("need at least one coded pilot")
    length = pilots[0].length
    snrs = np.asarray(snrs, dtype=float)
    channels = draw_channels(snrs * noise_power, num_antennas, rng)
    patterns = np.array([p.pattern for p in pilots], dtype=float)

    # position x antenna
    received = patterns.T @ channels
    received = received + complex_gaussian((length, num_antennas), noise_power, rng)
    return np.mean(np.abs(received) ** 2, axis=1)


def detection_threshold(noise_power: float) -> float:
    return DETECTOR_THRESHOLD_FACTOR * noise_power


def missed_detection_probability(length: int, num_nulls: int) -> float:
    """
    Probability that two independent uniform patterns go undetected, by
    exhaustive enumeration of every ordered pair of null sets.
    """
    _check_lengths(length, num_nulls)
    null_sets = list(combinations(range(length), num_nulls))
    indicators = np.zeros((len(null_sets), length), dtype=np.int64)
    for row, nulls in enumerate(null_sets):
        indicators[row, list(nulls)] = 1

    # a position is silent iff both devices are null there
    silent_counts = indicators @ indicators.T
    missed = sum(
        int(np.count_nonzero(silent_counts == silent))
        for silent in np.unique(silent_counts)
        if classify_silent_count(int(silent), num_nulls) is CollisionOutcome.NO_COLLISION
    )
    return missed / silent_counts.size


def resolve_centralized(
    pilots,
    coded_pilots: Sequence[CodedPilot],
    num_pilots: int,
    rng: RandomStream,
    redraw_pilots: Optional[int] = None,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Centralized resolution for one access slot.

    Phase 1 pilots with a detected single user are admitted. Contenders on pilots
    flagged as collisions redraw a pilot (from a book of `redraw_pilots`, the same
    book by default) and are admitted iff alone in that retransmission. A missed
    detection admits nobody: the pilot is contaminated.

    Returns (admitted mask, Phase 3 pilot per contender or -1).
    """
    pilots = np.asarray(pilots, dtype=int)
    admitted = np.zeros(len(pilots), dtype=bool)
    collided = np.zeros(len(pilots), dtype=bool)

    for pilot in np.unique(pilots):
        members = np.flatnonzero(pilots == pilot)
        energy = noiseless_energy([coded_pilots[i] for i in members])
        outcome = detect_collision(energy, coded_pilots[members[0]].num_nulls, 0.5)
        if outcome is CollisionOutcome.COLLISION:
            collided[members] = True
        elif outcome is CollisionOutcome.NO_COLLISION and len(members) == 1:
            admitted[members] = True
        elif outcome is CollisionOutcome.NO_COLLISION:
            logger.debug("Missed collision on pilot %d (%d users)", pilot, len(members))

    book_size = redraw_pilots or num_pilots
    retry_pilots = np.full(len(pilots), -1)
    retrying = np.flatnonzero(collided)
    retry_pilots[retrying] = rng.integers(book_size, size=len(retrying))
    counts = np.bincount(retry_pilots[retrying], minlength=book_size)
    admitted[retrying[counts[retry_pilots[retrying]] == 1]] = True
    return admitted, retry_pilots
