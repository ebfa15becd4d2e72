import os
from dotenv import load_dotenv

load_dotenv()


def _int_env(name: str, default: int) -> int:
    raw = os.getenv(name)
    return int(raw) if raw not in (None, "") else default


class Settings:
    PATTERN_VERTEX_LIMIT: int = _int_env("WORKBENCH_PATTERN_VERTEX_LIMIT", 8)
    BLOWUP_VERTEX_LIMIT: int = _int_env("WORKBENCH_BLOWUP_VERTEX_LIMIT", 1 << 20)
    EXACT_SOURCE_LIMIT: int = _int_env("WORKBENCH_EXACT_SOURCE_LIMIT", 14)
    TARGET_VERTEX_LIMIT: int = _int_env("WORKBENCH_TARGET_VERTEX_LIMIT", 7)
    REMOVAL_EXACT_EDGE_LIMIT: int = _int_env("WORKBENCH_REMOVAL_EXACT_EDGE_LIMIT", 30)
    FPN_SIZE_LIMIT: int = _int_env("WORKBENCH_FPN_SIZE_LIMIT", 1 << 20)
    ARITH_EXACT_LIMIT: int = _int_env("WORKBENCH_ARITH_EXACT_LIMIT", 64)
    ROUNDTRIP_EXACT_LIMIT: int = _int_env("WORKBENCH_ROUNDTRIP_EXACT_LIMIT", 16)
    TRICOLOR_EXHAUSTIVE_LIMIT: int = _int_env("WORKBENCH_TRICOLOR_EXHAUSTIVE_LIMIT", 9)
    DEFAULT_SEED: int = _int_env("WORKBENCH_SEED", 0)
    LOG_LEVEL: str = os.getenv("WORKBENCH_LOG_LEVEL", "INFO")
    REPORT_SCHEMA_VERSION: int = 1


settings = Settings()
