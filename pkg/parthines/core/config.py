# parthines/core/config.py
from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    # ---------------------- #
    #  Sweep Parallelism     #
    # ---------------------- #
    # Independent sweep points run on this many worker threads.
    threads: int = Field(1, ge=1)

    # ---------------------- #
    #  Pydantic Config       #
    # ---------------------- #
    model_config = SettingsConfigDict(
        # No .env file: the environment is the only source
        env_file=None,
        # PARTHINES_THREADS -> threads
        env_prefix="PARTHINES_",
        # Case-insensitive keys (parthines_threads == PARTHINES_THREADS)
        case_sensitive=False,
        # Ignore any extra environment variables
        extra="ignore",
    )


# Instantiate settings once for global use
settings = Settings()
