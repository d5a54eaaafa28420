from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Application settings with environment variable support."""

    model_config = SettingsConfigDict(
        env_file=".env",
        case_sensitive=False,
        extra="ignore",  # Ignore extra environment variables
    )

    # API Configuration
    api_v1_prefix: str = "/api/v1"
    project_name: str = "Fuzzy Route Assignment"
    version: str = "1.0.0"
    description: str = (
        "Hierarchical interval type-2 fuzzy route assignment tuned by particle swarm "
        "optimization, with a mesoscopic traffic simulator and a shortest-path baseline"
    )
    api_host: str = "0.0.0.0"
    api_port: int = 5050

    # Simulation defaults
    default_seed: int = 1
    default_horizon: int = 3600
    km_resolution: int = 201
    output_dir: str = "out"

    # Logging Configuration
    log_level: str = "INFO"
    log_dir: str = "logs"
    log_file_name: str = "fuzzy_routing.log"
    log_to_file: bool = True
    log_max_file_size_mb: int = 5
    log_backup_count: int = 3
    log_cleanup_days: int = 7


settings = Settings()
