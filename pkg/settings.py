"""
Environment configuration, loaded once from the process environment and an optional .env file
"""
import os
from typing import Optional

from dotenv import load_dotenv

from errors import ConfigError

load_dotenv()

BASE_DIR = os.path.dirname(os.path.abspath(__file__))

LOG_LEVEL = os.getenv("VQSD_LOG_LEVEL", "INFO").upper()
DATA_PATH = os.getenv("VQSD_DATA_PATH", os.path.join(BASE_DIR, "data", "iris.csv"))
OUTPUT_DIR = os.getenv("VQSD_OUTPUT_DIR", "results")
RESULT_SCHEMA_PATH = os.path.join(BASE_DIR, "data", "result.schema.json")

ARTIFACT_VERSION = "1.0.0"


def seed_override() -> Optional[int]:
    """Seed forced through VQSD_SEED, read at call time so tests can monkeypatch the environment"""
    raw = os.getenv("VQSD_SEED")
    if raw is None or not raw.strip():
        return None
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"VQSD_SEED must be an integer, got {raw!r}")
