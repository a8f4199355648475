"""Independent random streams per (master seed, experiment, sweep point, trial)."""

import numpy as np

from channel_core import RandomStream

MAX_SEED = 2**64 - 1


def stream_seed(
    master_seed: int, experiment_id: int, sweep_index: int, trial_index: int
) -> np.random.SeedSequence:
    """
    Seed sequence for one trial.

    The index tuple becomes the SeedSequence spawn key, so distinct tuples hash to
    unrelated PCG64 states and a trial never depends on how many others ran.
    """
    indices = (master_seed, experiment_id, sweep_index, trial_index)
    if any(int(i) < 0 for i in indices):
        raise ValueError(f"stream indices must be nonnegative, got {indices}")
    if master_seed > MAX_SEED:
        raise ValueError(f"master seed does not fit in 64 bits: {master_seed}")
    return np.random.SeedSequence(
        entropy=int(master_seed),
        spawn_key=(int(experiment_id), int(sweep_index), int(trial_index)),
    )


def derive_stream(
    master_seed: int, experiment_id: int, sweep_index: int, trial_index: int
) -> RandomStream:
    seed = stream_seed(master_seed, experiment_id, sweep_index, trial_index)
    return np.random.Generator(np.random.PCG64(seed))
