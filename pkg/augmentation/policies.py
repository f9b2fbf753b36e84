"""
Politiques d'intensité d'augmentation.

La politique adaptative règle l'intensité du round suivant, classe par
classe, sur la compréhension de l'élève : facteur =
clamp(perte auto-supervisée moyenne des variantes retenues / ln(C), 0.5, 2).
"""
from __future__ import annotations

import math
from collections import defaultdict
from typing import TYPE_CHECKING, Protocol, Sequence, runtime_checkable

from utils.logger import get_logger

if TYPE_CHECKING:
    from augmentation.pipeline import AugmentationRecord


logger = get_logger(__name__)


@runtime_checkable
class IntensityPolicy(Protocol):
    def intensity(self, label: int) -> float: ...

    def update(self, records: Sequence["AugmentationRecord"]) -> None: ...


class ConstantIntensityPolicy:
    """Intensité fixe, indépendante de l'élève."""

    def __init__(self, base: float = 0.3):
        self.base = base

    def intensity(self, label: int) -> float:
        return self.base

    def update(self, records: Sequence["AugmentationRecord"]) -> None:
        return None

    def state(self) -> dict[str, float]:
        return {"base": self.base}


class AdaptiveIntensityPolicy:
    """
    Intensité par classe guidée par la perte auto-supervisée de l'élève.

    Une classe mal comprise (perte élevée) reçoit des variantes plus
    agressives ; une classe maîtrisée, des variantes plus douces. Une classe
    sans variante retenue garde son facteur précédent.
    """

    def __init__(self, base: float, label_count: int, low: float = 0.5, high: float = 2.0):
        if not 0 < low <= 1 <= high:
            raise ValueError(f"Bornes invalides: low={low}, high={high}")
        self.base = base
        self.label_count = label_count
        self.low = low
        self.high = high
        self.reference = math.log(label_count) if label_count > 1 else 1.0
        self.factors: dict[int, float] = {}

    def intensity(self, label: int) -> float:
        return self.base * self.factors.get(int(label), 1.0)

    def update(self, records: Sequence["AugmentationRecord"]) -> None:
        per_label: dict[int, list[float]] = defaultdict(list)
        for record in records:
            per_label[record.label].extend(
                loss for loss, kept in zip(record.self_losses, record.mask) if kept
            )
        for label, losses in per_label.items():
            if not losses:
                continue
            mean = sum(losses) / len(losses)
            self.factors[label] = min(max(mean / self.reference, self.low), self.high)
        logger.debug(f"Facteurs d'intensité mis à jour: {self.state()}")

    def state(self) -> dict[str, float]:
        return {str(label): round(factor, 4) for label, factor in sorted(self.factors.items())}


def build_intensity_policy(kind: str, base: float, label_count: int) -> IntensityPolicy:
    """``kind`` ∈ {"adaptive", "constant"}."""
    if kind == "adaptive":
        return AdaptiveIntensityPolicy(base, label_count)
    if kind == "constant":
        return ConstantIntensityPolicy(base)
    raise ValueError(f"Politique d'intensité inconnue: {kind}")
