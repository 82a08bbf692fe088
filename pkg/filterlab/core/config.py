from pathlib import Path
from pydantic_settings import BaseSettings, SettingsConfigDict

BASE_DIR = Path(__file__).resolve().parent.parent.parent

class Settings(BaseSettings):
    # Application
    APP_NAME: str = "Filterlab"
    APP_VERSION: str = "1.0.0"
    DEBUG: bool = False
    LOG_JSON: bool = True

    # API
    API_HOST: str = "127.0.0.1"
    API_PORT: int = 8000

    # Size caps
    MAX_SITES: int = 20
    DENSE_MAX_SITES: int = 12  # dense fallbacks / dense eigensolves
    CROSSCHECK_MAX_SITES: int = 10  # harness dense cross-checks
    EXPLICIT_PARENT_MAX_SITES: int = 14  # above: matrix-free parent Hamiltonian

    # Krylov propagator
    KRYLOV_MAX_DIM: int = 64
    EXPM_TOL: float = 1e-9

    # Shifted solves
    SOLVER_TOL: float = 1e-10
    FILTER_SOLVE_TOL: float = 1e-13
    SOLVER_RESTART: int = 100
    SOLVER_MAX_ITER: int = 200
    SOLVER_MAX_REFINEMENTS: int = 4

    # Eigensolvers
    EIG_RESIDUAL_TOL: float = 1e-8
    EIG_MAX_ITER: int = 20000
    GAP_TOL: float = 1e-8
    PARENT_RESIDUAL_TOL: float = 1e-8  # ||H Phi|| for the filtered state
    PARENT_ENERGY_TOL: float = 1e-9
    ZERO_EIGENVALUE_TOL: float = 1e-6
    DENSE_EIG_MAX_SITES: int = 10  # full dense eigh below, Lanczos above

    # Algebra / observables
    PRUNE_REL_TOL: float = 1e-12
    ENTROPY_CUTOFF: float = 1e-12
    VARIANCE_CLIP: float = 1e-12
    E_F_WARN_TOL: float = 1e-6

    # Harness
    OUTPUT_DIR: str = str(BASE_DIR / "results")
    DEFAULT_THREADS: int = 1
    DEFAULT_SEED: int = 1234
    CHECKPOINT_COUNT: int = 20

    model_config = SettingsConfigDict(env_file=".env", case_sensitive=True, extra="ignore")

settings = Settings()
