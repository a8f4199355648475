"""Configuration constants for the random access simulator."""

# Output locations
RESULTS_DIR = "results"
SPECS_DIR = "specs"

# File templates (formatted with the experiment kind)
RESULTS_CSV_TEMPLATE = "{kind}.csv"
MANIFEST_JSON_TEMPLATE = "{kind}_manifest.json"

# CSV schema, fixed column order
CSV_FIELDNAMES = [
    "experiment",
    "sweep_name",
    "sweep_value",
    "mode",
    "metric",
    "mean",
    "stderr",
    "trials",
    "seed",
]

# Experiment kinds and the numeric ids used for stream derivation
EXPERIMENT_IDS = {
    "sucre_fig3": 3,
    "erapid_fig4": 4,
    "crapid_fig5": 5,
    "validate": 9,
}

EXPERIMENT_DESCRIPTIONS = {
    "sucre_fig3": "Crowd access: SUCRe vs retry-only baseline vs coded-pilot detection",
    "erapid_fig4": "E-RAPiD sum-rate bound, optimized over p_a and tau_p",
    "crapid_fig5": "C-RAPiD vs ALOHA vs scheduled Massive MIMO throughput",
    "validate": "Invariant and oracle self-test suite",
}

# Geometry and propagation
MIN_DISTANCE_M = 10.0
DEFAULT_PATHLOSS_EXPONENT = 3.76

# Crowd scenario
WARMUP_SLOTS = 200

# Coded-pilot energy detector: threshold as a multiple of per-symbol noise energy
DETECTOR_THRESHOLD_FACTOR = 5.0
