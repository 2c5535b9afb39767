import os
from dotenv import load_dotenv

# Load environment variables
load_dotenv()


def _flag(name: str, default: bool) -> bool:
    value = os.getenv(name)
    if value is None:
        return default
    return value.strip().lower() in ("1", "true", "yes", "on")


# Logging
LOG_LEVEL = os.getenv("SOSAT_LOG_LEVEL", "INFO")

# L-machine parameters
TARGET_WIDTH = int(os.getenv("SOSAT_TARGET_WIDTH", "32"))  # verification width W
INITIAL_WIDTH = int(os.getenv("SOSAT_INITIAL_WIDTH", "4"))  # first synthesis width w
MAX_WORD_WIDTH = 64
FLOAT_WIDTH = 32  # fadd/fsub/fmul/fdiv only exist here
ENABLE_SHL = _flag("SOSAT_ENABLE_SHL", False)
ENABLE_FLOAT = _flag("SOSAT_ENABLE_FLOAT", False)

# Solver run
TIMEOUT = float(os.getenv("SOSAT_TIMEOUT", "60"))  # seconds
PARALLELISM = int(os.getenv("SOSAT_PARALLELISM", "3"))
DEFAULT_SEED = int(os.getenv("SOSAT_SEED", "0"))

# SAT backend
SAT_BACKEND = os.getenv("SOSAT_SAT_BACKEND", "builtin")  # "builtin" or path to a DIMACS solver
SAT_SOLVER_NAME = os.getenv("SOSAT_SAT_SOLVER_NAME", "g4")  # pysat solver name
SAT_EXTERNAL_TIMEOUT = float(os.getenv("SOSAT_SAT_EXTERNAL_TIMEOUT", "120"))
CLAUSE_CEILING = int(os.getenv("SOSAT_CLAUSE_CEILING", "2000000"))
DIV_WIDTH_THRESHOLD = int(os.getenv("SOSAT_DIV_WIDTH_THRESHOLD", "16"))
DISABLE_WIDE_DIV = _flag("SOSAT_DISABLE_WIDE_DIV", False)

# Counterexample search
EXPLICIT_VERIFY_MAX_BITS = int(os.getenv("SOSAT_EXPLICIT_VERIFY_MAX_BITS", "20"))
RANDOM_PROBES = int(os.getenv("SOSAT_RANDOM_PROBES", "256"))
EXPLICIT_FALLBACK_MAX_BITS = int(os.getenv("SOSAT_EXPLICIT_FALLBACK_MAX_BITS", "24"))  # explicit sweep after a symbolic failure
GENERALIZE_TRIAL_CAP = int(os.getenv("SOSAT_GENERALIZE_TRIAL_CAP", "512"))

# Genetic programming
GP_POPULATION = int(os.getenv("SOSAT_GP_POPULATION", "200"))
GP_TOURNAMENT = int(os.getenv("SOSAT_GP_TOURNAMENT", "4"))
GP_CROSSOVER = float(os.getenv("SOSAT_GP_CROSSOVER", "0.9"))
GP_MUTATION = float(os.getenv("SOSAT_GP_MUTATION", "0.05"))
GP_ELITE = int(os.getenv("SOSAT_GP_ELITE", "2"))
GP_GENERATIONS_PER_TURN = int(os.getenv("SOSAT_GP_GENERATIONS", "5"))
GP_LENGTH_SLACK = int(os.getenv("SOSAT_GP_SLACK", "2"))

# Deterministic round-robin budgets (per strategy turn)
EXPLICIT_TURN_BUDGET = 2000  # programs examined
SYMBOLIC_TURN_BUDGET = 5000  # SAT conflicts
GP_TURN_BUDGET = 1  # generations

# Benchmarks
BENCH_TIMEOUT = float(os.getenv("SOSAT_BENCH_TIMEOUT", "60"))
