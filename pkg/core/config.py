from dataclasses import dataclass
import os
from pathlib import Path
from typing import Optional

from dotenv import load_dotenv

from core.errors import ConfigError

OUTPUT_FORMATS = ("json", "csv")


@dataclass(frozen=True)
class TailsConfig:
    log_dir: Path
    default_chunks: int
    workers: int
    seed_override: Optional[int]
    output_format: str


def _positive_int(name: str, raw: Optional[str], default: int) -> int:
    if raw is None or not raw.strip():
        return default
    try:
        value = int(raw.strip())
    except ValueError as exc:
        raise ConfigError(f"{name} must be an integer, got {raw!r}.") from exc
    if value < 1:
        raise ConfigError(f"{name} must be at least 1, got {value}.")
    return value


def load_config() -> TailsConfig:
    """Load run settings from the environment and an optional .env file."""
    load_dotenv()

    log_dir = Path(os.getenv("TAILS_LOG_DIR", "logs")).expanduser().resolve()
    log_dir.mkdir(parents=True, exist_ok=True)

    parallelism = os.cpu_count() or 1
    default_chunks = _positive_int("TAILS_CHUNKS", os.getenv("TAILS_CHUNKS"), parallelism)
    workers = _positive_int("TAILS_WORKERS", os.getenv("TAILS_WORKERS"), parallelism)

    seed_value = os.getenv("TAILS_SEED")
    seed_override: Optional[int] = None
    if seed_value is not None and seed_value.strip():
        try:
            seed_override = int(seed_value.strip())
        except ValueError as exc:
            raise ConfigError(f"TAILS_SEED must be an integer, got {seed_value!r}.") from exc
        if not 0 <= seed_override < 2**64:
            raise ConfigError("TAILS_SEED must fit in an unsigned 64-bit integer.")

    output_format = os.getenv("TAILS_FORMAT", "json").strip().lower() or "json"
    if output_format not in OUTPUT_FORMATS:
        raise ConfigError(
            f"TAILS_FORMAT must be one of {', '.join(OUTPUT_FORMATS)}, got {output_format!r}."
        )

    return TailsConfig(
        log_dir=log_dir,
        default_chunks=default_chunks,
        workers=workers,
        seed_override=seed_override,
        output_format=output_format,
    )
