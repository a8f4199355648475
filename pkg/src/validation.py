"""
Self-test suite: invariants and closed-form oracles of every protocol model.

Each check gets its own derived stream, so the suite is reproducible for a given
master seed and checks never share random numbers.
"""

import logging
from dataclasses import dataclass
from typing import Callable, List, Tuple

import numpy as np
from scipy.special import comb

from channel_core import (
    PilotBook,
    Population,
    RandomStream,
    SystemConfig,
    inside_hexagon,
    mean_distance_in_hexagon,
    sample_hexagon_points,
)
from coded_pilot import missed_detection_probability
from config import EXPERIMENT_IDS
from crapid import (
    CrapidConfig,
    ReplicaFrame,
    aloha_throughput,
    brute_force_decodable,
    build_frame,
    frame_sinr,
    sic_decode,
    slot_sinr,
)
from erapid import ErapidConfig, ergodic_sum_rate
from streams import derive_stream
from sucre_protocol import AccessState, SucreConfig, run_access_slot, sucre_decision

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def check_hexagon_sampling(rng: RandomStream) -> Tuple[bool, str]:
    points = sample_hexagon_points(20000, 250.0, rng)
    inside = bool(np.all(inside_hexagon(points, 250.0)))
    mean = float(np.mean(np.linalg.norm(points, axis=1)))
    expected = mean_distance_in_hexagon(250.0)
    error = abs(mean - expected) / expected
    return inside and error < 0.02, f"all inside={inside}, mean distance error {error:.4f}"


def check_pilot_orthogonality(rng: RandomStream) -> Tuple[bool, str]:
    book = PilotBook.orthogonal(10)
    gram = book.sequences.conj().T @ book.sequences
    error = float(np.max(np.abs(gram - np.eye(10))))
    return error < 1e-9, f"max |S^H S - I| = {error:.2e}"


def check_sucre_strongest_wins(rng: RandomStream) -> Tuple[bool, str]:
    population = Population(np.zeros((2, 2)), np.array([3.0, 1.0]), 1.0)
    config = SystemConfig(num_pilots=1, slot_length=1)
    access_round, _ = run_access_slot(
        population, config, SucreConfig(), AccessState.idle(2), rng
    )
    admitted = access_round.admitted
    return admitted == {0}, f"admitted {sorted(admitted)}"


def check_sucre_decision_rule(rng: RandomStream) -> Tuple[bool, str]:
    cases = [((3.0, 4.0), True), ((1.0, 4.0), False), ((2.0, 4.0), False)]
    wrong = [case for case, expected in cases if sucre_decision(*case) != expected]
    return not wrong, f"wrong decisions: {wrong}"


def check_single_user_rate_bound(rng: RandomStream) -> Tuple[bool, str]:
    cfg = ErapidConfig(
        num_devices=1, activation_prob=1.0, gain_spread=0.0, num_pilots=10, mc_slots=10
    )
    bound = ergodic_sum_rate(cfg, rng)
    p, beta, sigma2 = cfg.ul_power, cfg.mean_gain, cfg.noise_power
    gamma = beta + sigma2 / (p * cfg.num_pilots)
    sinr = cfg.num_antennas * p * beta**2 / (gamma * (p * beta + sigma2))
    expected = cfg.prelog * np.log2(1.0 + sinr)
    error = abs(bound.sum_rate - expected) / expected
    return error < 1e-9, f"bound {bound.sum_rate:.6f} vs closed form {expected:.6f}"


def check_zero_activity(rng: RandomStream) -> Tuple[bool, str]:
    bound = ergodic_sum_rate(ErapidConfig(activation_prob=0.0, mc_slots=10), rng)
    return bound.sum_rate == 0.0, f"sum rate {bound.sum_rate}"


def check_missed_detection(rng: RandomStream) -> Tuple[bool, str]:
    details = []
    passed = True
    for length in (6, 8, 10, 12):
        nulls = length // 2
        rate = missed_detection_probability(length, nulls)
        expected = 1.0 / comb(length, nulls, exact=True)
        passed &= bool(np.isclose(rate, expected, rtol=1e-12))
        details.append(f"tau={length}: {rate:.3e}")
    return passed, ", ".join(details)


def check_singleton_sinr(rng: RandomStream) -> Tuple[bool, str]:
    cfg = CrapidConfig(num_devices=1, num_antennas=100, frame_length=1)
    frame = ReplicaFrame.from_replicas(1, 1, [(0, 0, 0)])
    sinr = float(frame_sinr(frame, [False], cfg)[0, 0])
    rho = 1.0 / cfg.noise_power
    expected = cfg.num_antennas * rho * cfg.num_pilots * rho / (cfg.num_pilots * rho + 1)
    return bool(np.isclose(sinr, expected)), f"{sinr:.4f} vs {expected:.4f}"


def check_sic_matches_brute_force(rng: RandomStream) -> Tuple[bool, str]:
    cfg = CrapidConfig(
        num_devices=6,
        num_antennas=64,
        num_pilots=2,
        frame_length=3,
        activation_prob=0.5,
        code_rate=1.0,
    )
    frames = mismatches = 0
    while frames < 200:
        frame = build_frame(cfg, rng)
        if np.count_nonzero(frame.active) > 12:
            continue
        frames += 1
        if sic_decode(frame, cfg).decoded != brute_force_decodable(frame, cfg):
            mismatches += 1
    return mismatches == 0, f"{mismatches} mismatches over {frames} frames"


def check_asymptotic_sinr(rng: RandomStream) -> Tuple[bool, str]:
    replicas = [(0, 0, 0), (1, 0, 0), (2, 0, 1)]
    worst = 0.0
    for num_antennas in (100, 400):
        cfg = CrapidConfig(
            num_devices=3,
            num_antennas=num_antennas,
            num_pilots=4,
            frame_length=1,
            num_realizations=2000,
            num_symbols=20,
        )
        frame = ReplicaFrame.from_replicas(3, 1, replicas)
        for device in (0, 2):
            asymptotic = slot_sinr(frame, 0, device, [], cfg)
            exact = slot_sinr(frame, 0, device, [], cfg, mode="exact", rng=rng)
            worst = max(worst, abs(exact - asymptotic) / asymptotic)
    return worst < 0.10, f"worst relative error {worst:.3f}"


def check_aloha_binomial(rng: RandomStream) -> Tuple[bool, str]:
    cfg = CrapidConfig(
        num_devices=1000,
        num_antennas=4096,
        num_pilots=10,
        frame_length=10,
        activation_prob=0.1,
    )
    resources = cfg.frame_length * cfg.num_pilots
    expected = (
        cfg.num_devices
        * cfg.activation_prob
        * (1.0 - cfg.activation_prob / resources) ** (cfg.num_devices - 1)
        / cfg.frame_length
    )
    measured = float(np.mean([aloha_throughput(cfg, rng).throughput for _ in range(200)]))
    error = abs(measured - expected) / expected
    return error < 0.05, f"{measured:.3f} vs binomial {expected:.3f}"


def check_stream_independence(rng: RandomStream) -> Tuple[bool, str]:
    first = derive_stream(0, 0, 0, 0).random(1000)
    again = derive_stream(0, 0, 0, 0).random(1000)
    a = derive_stream(0, 0, 0, 0).random(100000)
    b = derive_stream(0, 0, 0, 1).random(100000)
    correlation = float(np.corrcoef(a, b)[0, 1])
    same = bool(np.array_equal(first, again))
    return same and abs(correlation) < 0.01, f"repeatable={same}, correlation {correlation:.4f}"


CHECKS: List[Tuple[str, Callable[[RandomStream], Tuple[bool, str]]]] = [
    ("hexagon_sampling", check_hexagon_sampling),
    ("pilot_orthogonality", check_pilot_orthogonality),
    ("sucre_strongest_wins", check_sucre_strongest_wins),
    ("sucre_decision_rule", check_sucre_decision_rule),
    ("single_user_rate_bound", check_single_user_rate_bound),
    ("zero_activity", check_zero_activity),
    ("missed_detection", check_missed_detection),
    ("singleton_sinr", check_singleton_sinr),
    ("sic_matches_brute_force", check_sic_matches_brute_force),
    ("asymptotic_sinr", check_asymptotic_sinr),
    ("aloha_binomial", check_aloha_binomial),
    ("stream_independence", check_stream_independence),
]


def run_validation(master_seed: int = 0, trial_index: int = 0) -> List[CheckResult]:
    """Run every check on its own stream; exceptions count as failures."""
    results = []
    for index, (name, check) in enumerate(CHECKS):
        rng = derive_stream(master_seed, EXPERIMENT_IDS["validate"], index, trial_index)
        try:
            passed, detail = check(rng)
        except Exception as e:
            logger.exception("Check %s raised", name)
            passed, detail = False, f"{type(e).__name__}: {e}"
        results.append(CheckResult(name, bool(passed), detail))
        logger.debug("%s: %s (%s)", name, "ok" if passed else "FAILED", detail)
    return results
