"""
Module evaluation - Précision, FID multi-profondeur et profils de similarité.

Usage:
    >>> from evaluation import accuracy, fid_by_depth, similarity_profile
    >>> acc = accuracy(student, test)
    >>> scores = fid_by_depth(teacher, augmented, real)
"""

from evaluation.metrics import accuracy, agreement, per_class_accuracy, predictions
from evaluation.fid import (
    FEATURE_DEPTHS,
    FeatureSetSummary,
    extract_features,
    fid,
    fid_by_depth,
)
from evaluation.similarity import SimilarityProfile, intensity_sweep, similarity_profile

__all__ = [
    "accuracy",
    "agreement",
    "per_class_accuracy",
    "predictions",
    "FEATURE_DEPTHS",
    "FeatureSetSummary",
    "extract_features",
    "fid",
    "fid_by_depth",
    "SimilarityProfile",
    "intensity_sweep",
    "similarity_profile",
]
