from functools import lru_cache
from pathlib import Path

from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Centralized application configuration loaded from environment."""

    log_level: str = "INFO"
    log_dir: Path = Path("logs")
    log_to_file: bool = True

    # Default fabric for every command that does not get --fabric.
    fabric_file: Path | None = None
    platforms_file: Path | None = None

    sweep_workers: int = 1
    default_dims: str = "256,256,64"
    default_seed: int = 42

    model_config = SettingsConfigDict(
        env_prefix="STENCIL_FABRIC_", env_file=".env", env_file_encoding="utf-8", extra="ignore"
    )

    def validate_paths(self) -> None:
        """Ensure configured data files exist before any command reads them."""
        for label, path in (("fabric_file", self.fabric_file), ("platforms_file", self.platforms_file)):
            if path is not None and not path.is_file():
                msg = f"STENCIL_FABRIC_{label.upper()} points to a missing file: {path}"
                raise ValueError(msg)
        if self.sweep_workers < 1:
            raise ValueError("STENCIL_FABRIC_SWEEP_WORKERS must be at least 1")


@lru_cache
def get_settings() -> Settings:
    """Return cached settings instance."""
    settings = Settings()
    settings.validate_paths()
    return settings
