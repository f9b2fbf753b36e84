"""
Distance de Fréchet entre ensembles de caractéristiques.

FID(a, b) = ‖μ_a − μ_b‖² + Tr(Σ_a + Σ_b − 2 (Σ_a Σ_b)^{1/2})

La racine du produit est calculée sous forme symétrique,
Tr((Σ_a Σ_b)^{1/2}) = Tr((√Σ_a Σ_b √Σ_a)^{1/2}), par décomposition propre
(``scipy.linalg.eigh``) : le résultat est symétrique en (a, b) et les valeurs
propres négatives dues à l'arrondi sont ramenées à 0.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np
import torch
from scipy import linalg

from models.contracts import ImageBatch
from utils.exceptions import EmptyDatasetError, FeatureDimensionError, MatrixSqrtError
from utils.logger import get_logger, PerformanceLogger


logger = get_logger(__name__)

FeatureDepth = Literal["first-pool", "second-pool", "final-pool"]
FEATURE_DEPTHS: tuple[str, ...] = ("first-pool", "second-pool", "final-pool")

EIGENVALUE_TOLERANCE = 1e-6


@dataclass
class FeatureSetSummary:
    """
    Moyenne et covariance (estimateur non biaisé) d'un ensemble de caractéristiques.

    Attributes:
        depth: Profondeur d'extraction (first-pool | second-pool | final-pool)
        mean: Vecteur μ (d)
        cov: Matrice Σ (d×d, symétrique semi-définie positive)
        count: Nombre d'échantillons
    """
    depth: str
    mean: np.ndarray
    cov: np.ndarray
    count: int

    @property
    def dim(self) -> int:
        return self.mean.shape[0]

    @property
    def low_rank(self) -> bool:
        """Vrai si count < d + 1 (estimation de rang incomplet)."""
        return self.count < self.dim + 1

    @classmethod
    def from_features(cls, features: np.ndarray | torch.Tensor, depth: str = "final-pool") -> "FeatureSetSummary":
        """
        Résume une matrice N×d de caractéristiques.

        Raises:
            EmptyDatasetError: Moins de 2 échantillons
        """
        if isinstance(features, torch.Tensor):
            features = features.detach().cpu().numpy()
        features = np.asarray(features, dtype=np.float64)
        if features.ndim == 1:
            features = features[:, None]
        if features.shape[0] < 2:
            raise EmptyDatasetError("au moins 2 échantillons requis pour une covariance",
                                    stage="evaluation")
        cov = np.atleast_2d(np.cov(features, rowvar=False, ddof=1))
        summary = cls(depth, features.mean(axis=0), (cov + cov.T) / 2, features.shape[0])
        if summary.low_rank:
            logger.warning(
                f"Résumé '{depth}' de rang incomplet: {summary.count} échantillons pour d={summary.dim}"
            )
        return summary

    @classmethod
    def gaussian(cls, mean, cov, count: int = 0, depth: str = "final-pool") -> "FeatureSetSummary":
        """Résumé construit directement à partir de (μ, Σ)."""
        mean = np.atleast_1d(np.asarray(mean, dtype=np.float64))
        cov = np.atleast_2d(np.asarray(cov, dtype=np.float64))
        return cls(depth, mean, cov, count)


def _sqrt_psd(matrix: np.ndarray) -> np.ndarray:
    eigenvalues, eigenvectors = linalg.eigh((matrix + matrix.T) / 2)
    scale = max(float(np.abs(eigenvalues).max(initial=0.0)), 1.0)
    if eigenvalues.min(initial=0.0) < -EIGENVALUE_TOLERANCE * scale:
        raise MatrixSqrtError(float(eigenvalues.min()), _condition(eigenvalues))
    eigenvalues = np.clip(eigenvalues, 0.0, None)
    return (eigenvectors * np.sqrt(eigenvalues)) @ eigenvectors.T


def _condition(eigenvalues: np.ndarray) -> float:
    magnitudes = np.abs(eigenvalues)
    smallest = magnitudes.min(initial=np.inf)
    return float(magnitudes.max(initial=0.0) / smallest) if smallest > 0 else float("inf")


def fid(a: FeatureSetSummary, b: FeatureSetSummary) -> float:
    """
    Distance de Fréchet entre deux résumés gaussiens (>= 0).

    Raises:
        FeatureDimensionError: Dimensions différentes
        MatrixSqrtError: Valeur propre négative au-delà de la tolérance
    """
    if a.dim != b.dim:
        raise FeatureDimensionError(a.dim, b.dim)
    diff = a.mean - b.mean
    root_a = _sqrt_psd(a.cov)
    inner = root_a @ b.cov @ root_a
    trace_sqrt = np.trace(_sqrt_psd(inner))
    value = float(diff @ diff + np.trace(a.cov) + np.trace(b.cov) - 2 * trace_sqrt)
    return max(value, 0.0)


def extract_features(
    teacher: torch.nn.Module,
    data: ImageBatch | torch.Tensor,
    batch_size: int = 256,
) -> dict[str, np.ndarray]:
    """Caractéristiques poolées de l'enseignant aux trois profondeurs."""
    images = data.images if isinstance(data, ImageBatch) else data
    was_training = teacher.training
    teacher.eval()
    collected: dict[str, list[np.ndarray]] = {depth: [] for depth in FEATURE_DEPTHS}
    try:
        with torch.no_grad():
            for start in range(0, images.shape[0], batch_size):
                pooled = teacher.pooled_features(images[start:start + batch_size])
                for depth in FEATURE_DEPTHS:
                    collected[depth].append(pooled[depth].cpu().numpy())
    finally:
        teacher.train(was_training)
    return {depth: np.concatenate(chunks) for depth, chunks in collected.items()}


def fid_by_depth(
    teacher: torch.nn.Module,
    a: ImageBatch | torch.Tensor,
    b: ImageBatch | torch.Tensor,
) -> dict[str, float]:
    """
    FID entre deux ensembles d'images aux trois profondeurs de l'enseignant.

    Returns:
        dict: {profondeur: FID}
    """
    with PerformanceLogger(logger, "fid_by_depth"):
        features_a = extract_features(teacher, a)
        features_b = extract_features(teacher, b)
        scores = {
            depth: fid(
                FeatureSetSummary.from_features(features_a[depth], depth),
                FeatureSetSummary.from_features(features_b[depth], depth),
            )
            for depth in FEATURE_DEPTHS
        }
    logger.info("FID par profondeur: " + ", ".join(f"{k}={v:.4f}" for k, v in scores.items()))
    return scores
