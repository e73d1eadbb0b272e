import logging
from pathlib import Path

# --- Titles and Labels ---
MAIN_TITLE = "Photonic Protocols"
VERSION = "1.0.0"
RNG_FAMILY = "Philox4x64-10"

# --- Paths and Directories ---
logging.info("Setting up paths and directories.")
ROOT = Path(__file__).parent
DATA_DIRECTORY = ROOT / "data"
LOG_FILE_PATH = Path("PhotonicProtocols.log")
JSON_LOG_FILE_PATH = Path("PhotonicProtocols.jsonl")

# --- Tolerances ---
PRUNE_THRESHOLD = 1e-14
UNITARITY_TOL = 1e-10
NORMALIZATION_TOL = 1e-9
MIN_OUTCOME_PROBABILITY = 1e-12
BELL_FIDELITY_TOL = 1e-9
EIGEN_GAP_TOL = 1e-8
HERMITIAN_TOL = 1e-10
OPERATOR_NORM_SLACK = 1e-9
POWER_ITERATION_TOL = 1e-10
POWER_ITERATION_MAX_STEPS = 100_000
CHSH_DERIVATION_SLACK = 1e-6

# --- Limits ---
MAX_OCCUPATION = 255
MAX_EXACT_PERMANENT_SIZE = 20
MAX_BRUTEFORCE_PERMANENT_SIZE = 8
GURVITS_HOEFFDING_CONSTANT = 2.0
SIGMA_STAR_TERM_LIMIT = 10**7
FAUX_CHECK_MAX_PHOTONS = 3
FAUX_CHECK_MAX_MODES = 4
CROSSCHECK_MAX_PHOTONS = 3
CROSSCHECK_MAX_PARTIES = 8

# --- Data and Files ---
SAMPLE_MATRIX_PATH = DATA_DIRECTORY / "ones4.json"
SAMPLE_CONFIG_PATH = DATA_DIRECTORY / "bell_run.json"
SAMPLE_SCHEDULE_PATH = DATA_DIRECTORY / "beamsplitter_schedule.json"
