"""
Module data_loader - Chargement et validation des jeux d'images.

Classes principales:
    - DatasetSplit: Jeu chargé, découpé en entraînement / test
    - DataValidator: Validation de lots d'images (réels ou synthétiques)

Usage:
    >>> from data_loader import load_dataset, DataValidator
    >>> split = load_dataset("digits", seed=0)
    >>> result = DataValidator().validate(split.train, label_count=split.label_count)
"""

__version__ = "1.0.0"

from data_loader.datasets import DatasetSplit, load_dataset, read_folder_index, read_image_set, SUPPORTED
from data_loader.data_validator import DataValidator, ValidationResult
from data_loader.exceptions import (
    DataLoaderException,
    DatasetNotFoundError,
    CorruptedDatasetError,
    UnsupportedDatasetError,
    InsufficientDataError,
)

__all__ = [
    "DatasetSplit",
    "load_dataset",
    "read_folder_index",
    "read_image_set",
    "SUPPORTED",
    "DataValidator",
    "ValidationResult",
    "DataLoaderException",
    "DatasetNotFoundError",
    "CorruptedDatasetError",
    "UnsupportedDatasetError",
    "InsufficientDataError",
]
