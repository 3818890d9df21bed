import os
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    BASE_DIR: str = os.path.abspath(os.path.join(os.path.dirname(__file__), '..'))
    CAP: int = 50_000_000
    WORKERS: int = 1
    PROBE_COUNT: int = 64
    VERTEX_LIMIT: int = 6561
    TREE_ROOT_LIMIT: int = 4096
    TREE_ROOT_SAMPLES: int = 256
    ROW_SUM_TOL: float = 1e-12
    WEIGHT_SUM_TOL: float = 1e-10
    PRUNE_BELOW: float = 1e-15
    DECOUPLING_PROBES: int = 16
    EXACT_PATH_LIMIT: int = 1_000_000
    EXCHANGEABILITY_GUARD: int = 10_000_000
    CSV_DIGITS: int = 17
    LOG_LEVEL: str = "INFO"
    ERROR_MESSAGES: dict = {
        "cap": "{space}: {formula} = {value} exceeds cap {cap}",
        "symbol": "{path}: symbol {symbol!r} is not in alphabet {alphabet}",
        "alphabet_empty": "{path}: alphabet is empty",
        "alphabet_duplicate": "{path}: duplicate symbol {symbol!r}",
        "cost": "cost at t={t} is {value} for D={dist}",
        "horizon_finite": "{operation} requires a finite horizon",
        "horizon_discounted": "{operation} requires a discounted model",
        "functional": "sub-population {k} has no functional dynamics; use joint_transition instead",
        "decoupling": "decoupling probe failed for k={k}, x={x}, u={u}, perturbation={probe}",
        "beta_h3": "beta*H3 = {value} >= 1 (beta={beta}, H3={h3})",
        "uncovered": "strategy does not cover t={t}, key={key}",
        "exists": "output {path} exists; pass --force to overwrite",
    }
    model_config = SettingsConfigDict(env_file=f"{BASE_DIR}/.env", env_prefix="DEEPTEAM_", extra="ignore")


# Параметры окружения: переменные DEEPTEAM_* и файл .env
settings = Settings()
