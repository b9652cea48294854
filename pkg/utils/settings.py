import sys

from dotenv import load_dotenv
from loguru import logger
from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict

load_dotenv()


class Settings(BaseSettings):
    """Process-level defaults; scenario values and CLI flags take precedence in that order."""

    model_config = SettingsConfigDict(env_prefix="DELTASOLITON_", extra="ignore")

    log_level: str = Field(default="INFO", description="loguru level for the stderr sink")
    threads: int = Field(default=1, ge=1, description="Worker count for sweep parallelism")
    out_dir: str = Field(default="results", description="Output directory when neither flag nor scenario sets one")
    strict_compat: bool = Field(default=False, description="Fail on mode-B corner incompatibility")


def get_settings() -> Settings:
    return Settings()


def configure_logging(level: str = "INFO") -> None:
    logger.remove()
    logger.add(sys.stderr, level=level.upper(), format="{time:HH:mm:ss} | {level: <7} | {name}:{function} - {message}")
