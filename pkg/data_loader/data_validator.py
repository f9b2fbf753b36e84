"""
Module de validation des lots d'images.
Vérifie la qualité et la conformité des données (réelles ou synthétiques)
avant entraînement ou distillation.
"""
from typing import Any, Dict, List, Optional
from dataclasses import dataclass

import numpy as np
import torch

from models.contracts import ImageBatch
from utils.logger import get_logger, PerformanceLogger


logger = get_logger(__name__)


@dataclass
class ValidationResult:
    """
    Résultat de validation d'un lot d'images.

    Attributes:
        is_valid: True si toutes les validations passent
        errors: Liste des erreurs rencontrées
        warnings: Liste des avertissements
        metrics: Métriques de qualité des données
    """
    is_valid: bool
    errors: List[str]
    warnings: List[str]
    metrics: Dict[str, Any]

    def __str__(self):
        """Représentation textuelle du résultat."""
        status = "✓ VALIDE" if self.is_valid else "✗ INVALIDE"
        error_msg = f"\nErreurs ({len(self.errors)}):\n  " + "\n  ".join(self.errors) if self.errors else ""
        warning_msg = f"\nAvertissements ({len(self.warnings)}):\n  " + "\n  ".join(self.warnings) if self.warnings else ""
        return f"{status}{error_msg}{warning_msg}"


class DataValidator:
    """
    Classe pour valider un lot d'images étiquetées.

    Validations disponibles:
    - Forme des images
    - Plage des pixels ([0, 1]) et valeurs finies
    - Plage des étiquettes
    - Équilibre des classes
    - Taille du lot

    Example:
        >>> validator = DataValidator()
        >>> result = validator.validate(batch, label_count=10, image_shape=(1, 16, 16))
        >>> if not result.is_valid:
        ...     print(result.errors)
    """

    def __init__(self, strict_mode: bool = False, imbalance_ratio: float = 2.0):
        """
        Initialise le validateur.

        Args:
            strict_mode: Si True, les warnings deviennent des erreurs
            imbalance_ratio: Ratio max/min des effectifs de classe toléré
        """
        self.strict_mode = strict_mode
        self.imbalance_ratio = imbalance_ratio
        logger.info(f"DataValidator initialisé (strict_mode={strict_mode})")

    def validate(
        self,
        batch: ImageBatch,
        label_count: Optional[int] = None,
        image_shape: Optional[tuple] = None,
        check_balance: bool = True,
        min_items: Optional[int] = None,
    ) -> ValidationResult:
        """
        Valide un lot selon plusieurs critères.

        Args:
            batch: Lot à valider
            label_count: Nombre de classes attendu
            image_shape: Forme C×H×W attendue
            check_balance: Vérifier l'équilibre des classes
            min_items: Nombre minimum d'images requises

        Returns:
            ValidationResult: Résultat de la validation
        """
        with PerformanceLogger(logger, "validate_batch"):
            errors: List[str] = []
            warnings: List[str] = []
            metrics = self._calculate_metrics(batch)

            logger.info(f"Validation d'un lot: {len(batch)} images de forme {batch.image_shape}")

            # Validation 1: Forme
            if image_shape is not None and tuple(batch.image_shape) != tuple(image_shape):
                errors.append(f"Forme d'image {batch.image_shape} au lieu de {tuple(image_shape)}")

            # Validation 2: Pixels
            errors.extend(self._validate_pixels(batch))

            # Validation 3: Étiquettes
            if label_count is not None:
                errors.extend(self._validate_labels(batch, label_count))

            # Validation 4: Équilibre des classes
            if check_balance and len(batch):
                imbalance = self._check_balance(batch, label_count)
                if imbalance:
                    (errors if self.strict_mode else warnings).append(imbalance)
                    logger.warning(imbalance)

            # Validation 5: Taille
            if min_items and len(batch) < min_items:
                errors.append(f"Données insuffisantes: {len(batch)} images (minimum requis: {min_items})")

            is_valid = len(errors) == 0
            result = ValidationResult(is_valid=is_valid, errors=errors, warnings=warnings, metrics=metrics)

            if is_valid:
                logger.info("Validation réussie")
            else:
                logger.error(f"Validation échouée: {len(errors)} erreur(s)")

            return result

    def _validate_pixels(self, batch: ImageBatch) -> List[str]:
        errors = []
        images = batch.images
        non_finite = int((~torch.isfinite(images)).sum())
        if non_finite:
            errors.append(f"{non_finite} pixels non finis")
        out_of_range = int(((images < 0) | (images > 1)).sum())
        if out_of_range:
            errors.append(f"{out_of_range} pixels hors de [0, 1]")
        return errors

    def _validate_labels(self, batch: ImageBatch, label_count: int) -> List[str]:
        invalid = int(((batch.labels < 0) | (batch.labels >= label_count)).sum())
        if invalid:
            return [f"{invalid} étiquettes hors de [0, {label_count})"]
        return []

    def _check_balance(self, batch: ImageBatch, label_count: Optional[int]) -> Optional[str]:
        labels = batch.labels.cpu().numpy()
        counts = np.bincount(labels[labels >= 0], minlength=label_count or 0)
        if label_count:
            counts = counts[:label_count]
        present = counts[counts > 0]
        if counts.min(initial=0) == 0 and label_count:
            return f"{int((counts == 0).sum())} classe(s) absente(s) du lot"
        if present.size and present.max() / present.min() > self.imbalance_ratio:
            return (
                f"Classes déséquilibrées: effectifs de {int(present.min())} à {int(present.max())} "
                f"(ratio toléré {self.imbalance_ratio})"
            )
        return None

    def _calculate_metrics(self, batch: ImageBatch) -> Dict[str, Any]:
        """
        Calcule des métriques de qualité sur le lot.

        Returns:
            Dict: Métriques (taille, forme, statistiques des pixels, effectifs)
        """
        images = batch.images.detach().float()
        empty = len(batch) == 0
        return {
            "n_items": len(batch),
            "image_shape": list(batch.image_shape),
            "pixel_min": None if empty else float(images.min()),
            "pixel_max": None if empty else float(images.max()),
            "pixel_mean": None if empty else float(images.mean()),
            "class_counts": {
                int(label): int(count)
                for label, count in zip(*np.unique(batch.labels.cpu().numpy(), return_counts=True))
            },
        }
