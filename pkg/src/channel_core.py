"""
Physical substrate shared by every protocol.

Hexagonal cell geometry, large-scale path gains, Rayleigh block fading,
orthogonal pilot books and the pilot correlation performed at the base station.
"""

import logging
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy.linalg import dft

from config import DEFAULT_PATHLOSS_EXPONENT, MIN_DISTANCE_M

logger = logging.getLogger(__name__)

# Every random operation takes an explicit numpy Generator
RandomStream = np.random.Generator

# Length-M complex fading vector (or a stack of them, one row per device)
ChannelVector = np.ndarray

SQRT3 = np.sqrt(3.0)


def db_to_linear(value_db):
    """Convert dB to a linear power ratio (scalars or arrays)."""
    return 10.0 ** (np.asarray(value_db, dtype=float) / 10.0)


def complex_gaussian(shape, variance: float, rng: RandomStream) -> np.ndarray:
    """Circularly-symmetric complex Gaussian samples with the given variance."""
    scale = np.sqrt(variance / 2.0)
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


class SystemConfig(BaseModel):
    """Antennas, pilots, powers and cell geometry of one Massive MIMO cell."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    num_antennas: int = Field(100, ge=1)
    num_pilots: int = Field(10, ge=1)
    slot_length: int = Field(100, ge=1)
    cell_radius: float = Field(250.0, gt=0)
    pathloss_exponent: float = Field(DEFAULT_PATHLOSS_EXPONENT, gt=0)
    edge_snr_db: float = 0.0
    ul_power: float = Field(1.0, gt=0)
    noise_power: float = Field(1.0, gt=0)
    shadowing_std_db: float = Field(0.0, ge=0)

    @model_validator(mode="after")
    def _pilots_fit_in_slot(self):
        if self.num_pilots > self.slot_length:
            raise ValueError("num_pilots must not exceed slot_length")
        return self

    @property
    def gain_constant(self) -> float:
        """C in beta = C * d^-alpha, chosen so the cell edge sees edge_snr_db."""
        edge_snr = float(db_to_linear(self.edge_snr_db))
        return (
            edge_snr
            * self.noise_power
            / self.ul_power
            * self.cell_radius**self.pathloss_exponent
        )


@dataclass(frozen=True)
class Population:
    """Device positions (meters, BS at the origin) and their path gains."""

    positions: np.ndarray
    path_gains: np.ndarray
    activation_prob: float

    def __post_init__(self):
        if len(self.positions) != len(self.path_gains):
            raise ValueError("positions and path_gains differ in length")
        if not 0.0 <= self.activation_prob <= 1.0:
            raise ValueError(f"activation_prob out of range: {self.activation_prob}")
        if np.any(self.path_gains <= 0):
            raise ValueError("path gains must be positive")

    @property
    def num_devices(self) -> int:
        return len(self.path_gains)


@dataclass(frozen=True)
class PilotBook:
    """Orthogonal unit-norm pilots; column t of `sequences` is pilot t."""

    sequences: np.ndarray

    @classmethod
    def orthogonal(cls, num_pilots: int) -> "PilotBook":
        """Columns of the unitary DFT matrix of size num_pilots."""
        if num_pilots < 1:
            raise ValueError("num_pilots must be positive")
        return cls(dft(num_pilots, scale="sqrtn"))

    @property
    def num_pilots(self) -> int:
        return self.sequences.shape[1]

    @property
    def length(self) -> int:
        return self.sequences.shape[0]

    def sequence(self, index: int) -> np.ndarray:
        return self.sequences[:, index]


def inside_hexagon(points, radius: float) -> np.ndarray:
    """Containment test for the flat-top hexagon of circumradius `radius`."""
    points = np.asarray(points, dtype=float)
    x = np.abs(points[..., 0])
    y = np.abs(points[..., 1])
    slack = 1e-9 * radius
    return (y <= SQRT3 / 2.0 * radius + slack) & (
        SQRT3 * x + y <= SQRT3 * radius + slack
    )


def sample_hexagon_points(count: int, radius: float, rng: RandomStream) -> np.ndarray:
    """Uniform points in the hexagon by rejection from the bounding box."""
    low = [-radius, -SQRT3 / 2.0 * radius]
    high = [radius, SQRT3 / 2.0 * radius]
    accepted = np.empty((0, 2))
    while len(accepted) < count:
        # hexagon covers 3/4 of its bounding box
        batch = int((count - len(accepted)) / 0.75) + 16
        candidates = rng.uniform(low, high, size=(batch, 2))
        accepted = np.vstack([accepted, candidates[inside_hexagon(candidates, radius)]])
    return accepted[:count]


def mean_distance_in_hexagon(radius: float) -> float:
    """Mean distance from the center for a uniform point in the hexagon."""
    return radius * (1.0 / 3.0 + np.log(3.0) / 4.0)


def path_gain(
    position, config: SystemConfig, rng: Optional[RandomStream] = None
) -> Union[float, np.ndarray]:
    """
    Large-scale gain beta = C * d^-alpha * 10^(X/10), X ~ N(0, shadowing_std_db^2).

    Accepts one position (shape (2,)) or a stack of them (shape (n, 2)).
    Distances below MIN_DISTANCE_M are clamped.
    """
    position = np.asarray(position, dtype=float)
    distance = np.maximum(np.linalg.norm(position, axis=-1), MIN_DISTANCE_M)
    gain = config.gain_constant * distance ** (-config.pathloss_exponent)

    if config.shadowing_std_db > 0:
        if rng is None:
            raise ValueError("shadowing requires a random stream")
        shadowing_db = rng.normal(0.0, config.shadowing_std_db, size=np.shape(distance))
        gain = gain * db_to_linear(shadowing_db)

    return gain if np.ndim(gain) else float(gain)


def sample_population(
    config: SystemConfig,
    num_devices: int,
    activation_prob: float,
    rng: RandomStream,
) -> Population:
    """Drop `num_devices` devices uniformly in the cell and compute their gains."""
    if num_devices < 1:
        raise ValueError("num_devices must be at least 1")

    positions = sample_hexagon_points(num_devices, config.cell_radius, rng)
    gains = np.atleast_1d(path_gain(positions, config, rng))
    logger.debug(
        "Sampled %d devices, median gain %.3e", num_devices, float(np.median(gains))
    )
    return Population(positions, gains, activation_prob)


def draw_channels(betas, num_antennas: int, rng: RandomStream) -> ChannelVector:
    """One independent Rayleigh vector per gain; result shape betas.shape + (M,)."""
    betas = np.asarray(betas, dtype=float)
    if np.any(betas <= 0):
        raise ValueError("path gains must be positive")
    shape = betas.shape + (num_antennas,)
    unit = complex_gaussian(shape, 1.0, rng)
    return np.sqrt(betas)[..., np.newaxis] * unit


def draw_channel(beta: float, num_antennas: int, rng: RandomStream) -> ChannelVector:
    """Entries i.i.d. CN(0, beta)."""
    return draw_channels(beta, num_antennas, rng)


def receive_pilots(
    channels: np.ndarray,
    pilot_indices,
    book: PilotBook,
    config: SystemConfig,
    rng: Optional[RandomStream] = None,
    noise: bool = True,
) -> np.ndarray:
    """
    Superposed pilot reception, a tau_p x M matrix.

    Device k sends sqrt(p * tau_p) * s_{t_k}, so its per-symbol power is p.
    """
    channels = np.asarray(channels, dtype=complex).reshape(-1, config.num_antennas)
    pilot_indices = np.asarray(pilot_indices, dtype=int)
    amplitude = np.sqrt(config.ul_power * book.length)
    received = amplitude * book.sequences[:, pilot_indices] @ channels

    if noise:
        if rng is None:
            raise ValueError("noisy reception requires a random stream")
        received = received + complex_gaussian(received.shape, config.noise_power, rng)
    return received


def pilot_correlate(superposed_rx, pilot_index: int, book: PilotBook) -> np.ndarray:
    """Project the received pilot matrix onto pilot `pilot_index` (length-M result)."""
    superposed_rx = np.asarray(superposed_rx)
    if superposed_rx.ndim != 2 or superposed_rx.shape[0] != book.length:
        raise ValueError(
            f"received matrix shape {superposed_rx.shape} does not match "
            f"a pilot book of length {book.length}"
        )
    if not 0 <= pilot_index < book.num_pilots:
        raise ValueError(f"pilot index {pilot_index} outside [0, {book.num_pilots})")
    return book.sequence(pilot_index).conj() @ superposed_rx


def correlate_all(superposed_rx, book: PilotBook) -> np.ndarray:
    """All pilot correlations at once; row t equals pilot_correlate(rx, t, book)."""
    superposed_rx = np.asarray(superposed_rx)
    if superposed_rx.ndim != 2 or superposed_rx.shape[0] != book.length:
        raise ValueError(
            f"received matrix shape {superposed_rx.shape} does not match "
            f"a pilot book of length {book.length}"
        )
    return book.sequences.conj().T @ superposed_rx
