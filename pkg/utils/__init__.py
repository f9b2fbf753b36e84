"""
Module utils - Utilitaires partagés.

Ce module contient les outils transverses utilisés par tous les autres modules.

Composants:
    - Logger: Système de logging avec rotation et journal par exécution
    - PerformanceLogger: Context manager pour mesurer la durée des étapes
    - PipelineException: Racine de la hiérarchie d'exceptions
    - RoundCache: Cache disque des rounds (PNG + manifeste, écritures atomiques)

Usage:
    >>> from utils.logger import get_logger, PerformanceLogger
    >>>
    >>> logger = get_logger(__name__)
    >>> with PerformanceLogger(logger, "synthesis_round(0)"):
    ...     run_synthesis_round(...)
"""

__version__ = "1.0.0"
__author__ = "Data Analysis Team"

from utils.logger import (
    get_logger,
    LoggerManager,
    PerformanceLogger,
    log_function_call
)
from utils.exceptions import PipelineException

__all__ = [
    "get_logger",
    "LoggerManager",
    "PerformanceLogger",
    "log_function_call",
    "PipelineException",
]
