"""
Module de logging avec rotation de fichiers.
Un Singleton garantit une configuration unique des loggers de la plateforme,
et chaque exécution peut en plus écrire son propre journal dans son répertoire.
"""
import logging
import sys
import time
from functools import wraps
from logging.handlers import RotatingFileHandler
from pathlib import Path
from typing import Optional
from config import settings


class LoggerManager:
    """
    Gestionnaire de logging Singleton.
    Centralise la configuration des loggers pour toute l'application.
    """

    _instance: Optional["LoggerManager"] = None
    _loggers: dict[str, logging.Logger] = {}
    _run_handler: Optional[logging.Handler] = None

    def __new__(cls):
        """Implémentation du pattern Singleton."""
        if cls._instance is None:
            cls._instance = super().__new__(cls)
            cls._instance._initialized = False
        return cls._instance

    def __init__(self):
        """Initialise le gestionnaire de logging."""
        if self._initialized:
            return

        self._initialized = True
        self._formatter = logging.Formatter(
            settings.LOG_FORMAT,
            datefmt="%Y-%m-%d %H:%M:%S"
        )
        root_logger = logging.getLogger()
        root_logger.setLevel(settings.LOG_LEVEL)

    def _rotating_handler(self, file_path: Path) -> RotatingFileHandler:
        handler = RotatingFileHandler(
            file_path,
            maxBytes=settings.LOG_FILE_MAX_BYTES,
            backupCount=settings.LOG_FILE_BACKUP_COUNT,
            encoding="utf-8"
        )
        handler.setLevel(settings.LOG_LEVEL)
        handler.setFormatter(self._formatter)
        return handler

    def get_logger(
        self,
        name: str,
        log_file: Optional[str] = None,
        console: bool = True
    ) -> logging.Logger:
        """
        Récupère ou crée un logger configuré.

        Args:
            name: Nom du logger (généralement __name__ du module)
            log_file: Nom du fichier de log (défaut: dda.log)
            console: Active la sortie console

        Returns:
            logging.Logger: Logger configuré

        Example:
            >>> logger = LoggerManager().get_logger(__name__)
            >>> logger.info("Round de synthèse terminé")
        """
        if name in self._loggers:
            return self._loggers[name]

        logger = logging.getLogger(name)
        logger.setLevel(settings.LOG_LEVEL)
        logger.propagate = False

        if console:
            console_handler = logging.StreamHandler(sys.stdout)
            console_handler.setLevel(settings.LOG_LEVEL)
            console_handler.setFormatter(self._formatter)
            logger.addHandler(console_handler)

        logger.addHandler(
            self._rotating_handler(settings.LOG_DIR / (log_file or "dda.log"))
        )
        if self._run_handler is not None:
            logger.addHandler(self._run_handler)

        self._loggers[name] = logger
        return logger

    def attach_run_directory(self, run_dir: Path) -> Path:
        """
        Duplique tous les logs dans ``run_dir/run.log`` le temps d'une exécution.

        Args:
            run_dir: Répertoire de l'exécution courante

        Returns:
            Path: Chemin du journal de l'exécution
        """
        self.detach_run_directory()
        log_path = Path(run_dir) / "run.log"
        handler = logging.FileHandler(log_path, encoding="utf-8")
        handler.setLevel(settings.LOG_LEVEL)
        handler.setFormatter(self._formatter)
        self._run_handler = handler
        for logger in self._loggers.values():
            logger.addHandler(handler)
        return log_path

    def detach_run_directory(self):
        """Retire le handler de l'exécution courante."""
        if self._run_handler is None:
            return
        for logger in self._loggers.values():
            logger.removeHandler(self._run_handler)
        self._run_handler.close()
        self._run_handler = None


class PerformanceLogger:
    """
    Context manager pour logger la durée d'une étape du pipeline.

    Example:
        >>> with PerformanceLogger(logger, "synthesis_round(3)") as perf:
        ...     batch = run_synthesis_round(...)
        >>> perf.elapsed
    """

    def __init__(self, logger: logging.Logger, operation: str):
        """
        Initialise le performance logger.

        Args:
            logger: Logger à utiliser
            operation: Nom de l'opération à tracer
        """
        self.logger = logger
        self.operation = operation
        self.start_time: Optional[float] = None
        self.elapsed: float = 0.0

    def __enter__(self):
        """Démarre le chronomètre."""
        self.start_time = time.perf_counter()
        self.logger.debug(f"Début de l'opération: {self.operation}")
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        """Arrête le chronomètre et log le temps écoulé."""
        self.elapsed = time.perf_counter() - self.start_time

        if exc_type is not None:
            self.logger.error(
                f"Échec de l'opération '{self.operation}' après {self.elapsed:.2f}s: "
                f"{exc_val}"
            )
        else:
            self.logger.info(
                f"Fin de l'opération '{self.operation}' en {self.elapsed:.2f}s"
            )

        return False  # Ne pas supprimer l'exception


def log_function_call(logger: logging.Logger):
    """
    Décorateur pour tracer les appels des points d'entrée publics.

    Les tenseurs ne sont pas affichés en entier, seulement leur forme.

    Args:
        logger: Logger à utiliser
    """
    def _short(value):
        shape = getattr(value, "shape", None)
        if shape is not None:
            return f"<{type(value).__name__} {tuple(shape)}>"
        return repr(value)

    def decorator(func):
        @wraps(func)
        def wrapper(*args, **kwargs):
            logger.debug(
                f"Appel de {func.__name__} avec args={[ _short(a) for a in args ]}, "
                f"kwargs={ {k: _short(v) for k, v in kwargs.items()} }"
            )
            try:
                result = func(*args, **kwargs)
                logger.debug(f"{func.__name__} terminé avec succès")
                return result
            except Exception as e:
                logger.error(f"Erreur dans {func.__name__}: {e}")
                raise

        return wrapper
    return decorator


# Instance globale pour faciliter l'utilisation
logger_manager = LoggerManager()


def get_logger(name: str) -> logging.Logger:
    """
    Fonction helper pour obtenir rapidement un logger.

    Args:
        name: Nom du logger (utilisez __name__)

    Returns:
        logging.Logger: Logger configuré

    Example:
        >>> from utils.logger import get_logger
        >>> logger = get_logger(__name__)
    """
    return logger_manager.get_logger(name)
