"""
Configuration centralisée pour la plateforme de distillation sans données.
Utilise pydantic-settings pour la gestion des variables d'environnement.

Les hyperparamètres d'une exécution (pertes, calendrier, backend) ne vivent
pas ici : ils sont décrits par ``harness.run_config.RunConfig``.
"""
from pathlib import Path
from typing import Literal
from pydantic_settings import BaseSettings, SettingsConfigDict
from pydantic import Field, field_validator


class Settings(BaseSettings):
    """Configuration principale de l'application."""

    # Informations Générales
    APP_NAME: str = "DDA Distillation Platform"
    APP_VERSION: str = "1.0.0"
    ENVIRONMENT: Literal["development", "staging", "production"] = "development"
    DEBUG: bool = False

    # Chemins
    BASE_DIR: Path = Path(__file__).resolve().parent
    DATA_DIR: Path = BASE_DIR / "data"
    OUTPUT_DIR: Path = BASE_DIR / "outputs"
    LOG_DIR: Path = BASE_DIR / "logs"
    CHECKPOINT_DIR: Path = BASE_DIR / "checkpoints"

    # Racine des jeux de données (surcharge via DDA_DATASET_ROOT)
    DATASET_ROOT: Path | None = Field(default=None, alias="DDA_DATASET_ROOT")

    # Calcul
    DEVICE: str = "cpu"
    TORCH_THREADS: int = 0  # 0 = valeur par défaut de torch
    DETERMINISTIC: bool = True

    # Logging Configuration
    LOG_LEVEL: Literal["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"] = "INFO"
    LOG_FORMAT: str = (
        "%(asctime)s - %(name)s - %(levelname)s - "
        "%(filename)s:%(lineno)d - %(message)s"
    )
    LOG_FILE_MAX_BYTES: int = 10 * 1024 * 1024  # 10 MB
    LOG_FILE_BACKUP_COUNT: int = 5

    # Client du backend de diffusion distant
    REMOTE_TIMEOUT_SECONDS: float = 30.0
    REMOTE_MAX_ATTEMPTS: int = 3
    REMOTE_BACKOFF_SECONDS: float = 0.5
    REMOTE_MAX_IN_FLIGHT: int = 4

    # Service de diffusion (api/main.py)
    API_HOST: str = "0.0.0.0"
    API_PORT: int = 8000
    API_PREFIX: str = "/api/v1"
    RATE_LIMIT: str = "600/minute"
    API_BACKEND_DIR: Path | None = None  # checkpoint de l'autoencodeur servi
    API_BACKEND_INTENSITY: float = 0.3

    # Visualization Configuration
    CHART_THEME: str = "plotly_white"
    CHART_WIDTH: int = 1000
    CHART_HEIGHT: int = 600
    CHART_DPI: int = 100  # Pour Matplotlib

    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=True,
        extra="ignore",
        populate_by_name=True,
    )

    @field_validator("TORCH_THREADS")
    @classmethod
    def check_threads(cls, v: int) -> int:
        """Refuse un nombre de threads négatif."""
        if v < 0:
            raise ValueError("TORCH_THREADS doit être >= 0")
        return v

    def __init__(self, **kwargs):
        """Initialise les settings et crée les répertoires nécessaires."""
        super().__init__(**kwargs)
        self._create_directories()

    def _create_directories(self):
        """Crée les répertoires nécessaires s'ils n'existent pas."""
        for directory in (self.DATA_DIR, self.OUTPUT_DIR, self.LOG_DIR, self.CHECKPOINT_DIR):
            directory.mkdir(parents=True, exist_ok=True)

    @property
    def dataset_root(self) -> Path:
        """Racine effective des jeux de données (variable d'env prioritaire)."""
        return self.DATASET_ROOT or self.DATA_DIR

    @property
    def is_production(self) -> bool:
        """Vérifie si l'environnement est production."""
        return self.ENVIRONMENT == "production"


# Instance globale des settings (Singleton pattern)
settings = Settings()


# Configuration spécifique pour les tests
class TestSettings(Settings):
    """Configuration pour l'environnement de test."""

    DEBUG: bool = True
    LOG_LEVEL: Literal["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"] = "DEBUG"
    REMOTE_BACKOFF_SECONDS: float = 0.0

    model_config = SettingsConfigDict(
        env_file=".env.test",
        env_file_encoding="utf-8",
        case_sensitive=True,
        extra="ignore",
        populate_by_name=True,
    )


def get_settings() -> Settings:
    """
    Factory function pour obtenir les settings.
    Utile pour l'injection de dépendances dans FastAPI.

    Returns:
        Settings: Instance de configuration
    """
    return settings
