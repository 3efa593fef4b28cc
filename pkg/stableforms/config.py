import os

from .errors import ConfigError

# Numerical tolerances
# Relative tolerance for exact algebraic identities
IDENTITY_RTOL = 1e-10
# Forms with |phi| below this multiple of ||rho||^(n/p) are reported not stable
STABILITY_FLOOR = 1e-12
# Base step for central finite differences, scaled by (1 + ||rho||_inf)
FD_BASE_STEP = 1e-5
# Tolerance used when validating su(3) matrices (skew-hermitian, traceless)
SU3_TOLERANCE = 1e-10
# Largest supported ambient dimension
MAX_DIMENSION = 8

# Integrator settings
# Default method, one of "rk4" or "rkf45"
DEFAULT_METHOD = "rkf45"
# Absolute and relative local error tolerances for rkf45
DEFAULT_ATOL = 1e-10
DEFAULT_RTOL = 1e-10
# Largest step rkf45 may take
MAX_STEP = 1e-2
# Fixed step size for rk4 (also the first trial step for rkf45)
RK4_STEP = 1e-3
# Steps smaller than this count as underflow near a singularity
MIN_STEP = 1e-14
# Hard cap on accepted steps per trajectory
MAX_STEPS = 1_000_000

# Output settings
# Significant digits for floats written to trajectory CSV files
CSV_DIGITS = 17
# Version tag written as the "schema" key of every JSON report
SCHEMA_VERSION = "1"

# Seeding
# Seed used by randomized suites when nothing else is given
DEFAULT_SEED = 42
# Environment variable that overrides DEFAULT_SEED
SEED_ENV_VAR = "STABLEFORMS_SEED"

# Packaged normal-form literals (JSON files under stableforms/forms)
FORMS_DIR = os.path.join(os.path.dirname(__file__), "forms")


def seed_from_env() -> int:
    """Return the seed from STABLEFORMS_SEED, or DEFAULT_SEED when unset."""
    raw = os.environ.get(SEED_ENV_VAR)
    if raw is None or raw.strip() == "":
        return DEFAULT_SEED
    try:
        return int(raw)
    except ValueError as e:
        raise ConfigError(
            f"{SEED_ENV_VAR} must be an integer, got {raw!r}"
        ) from e
