"""
Pertes de la synthèse par inversion de modèle.

- ``class_prior_loss``      : entropie croisée enseignant / étiquettes prédéfinies
- ``bn_regularization_loss``: écart aux statistiques BN courantes de l'enseignant
- ``inversion_loss``        : α·cls + β·bn
- ``synthesis_objective``   : α′·L_in + β′·L_c (contraste avec la banque mémoire)

Toutes sont différentiables par rapport à leurs entrées tensorielles.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import torch
import torch.nn.functional as F

from models.contracts import BNStats, BNStatisticsRecorder, ImageBatch, running_bn_statistics
from memory_bank.bank import MemoryBank
from memory_bank.contrastive import contrastive_loss
from memory_bank.views import AugmentationPolicy
from synthesis.hyperparams import HyperParams
from utils.exceptions import EmptyBatchError, InvalidLabelError, StatisticsMismatchError


def check_labels(targets: torch.Tensor, label_count: int):
    """Vérifie que toutes les étiquettes sont dans [0, label_count)."""
    invalid = targets[(targets < 0) | (targets >= label_count)]
    if invalid.numel():
        raise InvalidLabelError(invalid.tolist(), label_count)


def class_prior_loss(teacher_logits: torch.Tensor, targets: torch.Tensor) -> torch.Tensor:
    """
    Entropie croisée moyenne des prédictions de l'enseignant contre les
    étiquettes cibles.

    Raises:
        InvalidLabelError: Étiquette hors de [0, C)
    """
    check_labels(targets, teacher_logits.shape[1])
    return F.cross_entropy(teacher_logits, targets.long())


def bn_regularization_loss(batch_stats: BNStats, running: BNStats) -> torch.Tensor:
    """
    Σ_l ( ‖μ_l(x) − μ_l‖₂ + ‖σ_l²(x) − σ_l²‖₂ ), normes euclidiennes non élevées au carré.

    Vaut 0 si et seulement si toutes les statistiques coïncident exactement ;
    0 aussi pour un modèle sans couche BN (listes vides).

    Raises:
        StatisticsMismatchError: Nombre de couches ou largeurs différents
    """
    if len(batch_stats) != len(running):
        raise StatisticsMismatchError(-1, len(batch_stats), len(running))
    if len(batch_stats) == 0:
        return torch.zeros(())
    terms = []
    for layer, ((mu_x, var_x), (mu, var)) in enumerate(zip(batch_stats, running)):
        if mu_x.shape != mu.shape or var_x.shape != var.shape:
            raise StatisticsMismatchError(layer, mu_x.numel(), mu.numel())
        mu = mu.to(mu_x)
        var = var.to(var_x)
        terms.append(
            torch.linalg.vector_norm(mu_x - mu) + torch.linalg.vector_norm(var_x - var)
        )
    return torch.stack(terms).sum()


def inversion_loss(cls: torch.Tensor | float, bn: torch.Tensor | float, hp: HyperParams):
    """Perte d'inversion unifiée α·cls + β·bn (linéaire en (cls, bn))."""
    return hp.alpha * cls + hp.beta * bn


@dataclass
class SynthesisLoss:
    """Objectif de synthèse et ses composantes (valeurs détachées pour le suivi)."""
    total: torch.Tensor
    cls: float
    bn: float
    inversion: float
    contrastive: float

    def components(self) -> dict[str, float]:
        return {
            "objective": float(self.total.detach()),
            "cls": self.cls,
            "bn": self.bn,
            "inversion": self.inversion,
            "contrastive": self.contrastive,
        }


def synthesis_objective(
    generated: ImageBatch,
    bank: Optional[MemoryBank],
    teacher: torch.nn.Module,
    projector: Callable[[torch.Tensor], torch.Tensor],
    hp: HyperParams,
    *,
    running: Optional[BNStats] = None,
    policy: Optional[AugmentationPolicy] = None,
    generator: Optional[torch.Generator] = None,
    max_negatives: int = 64,
    include_positive: bool = False,
) -> SynthesisLoss:
    """
    α′·L_in(generated) + β′·L_c(generated ∪ banque).

    Différentiable par rapport aux pixels générés, donc à (f_ini, θ_w) et aux
    poids du discriminateur (via ``projector``). Avec β′ = 0 le terme
    contrastif n'est pas calculé et l'objectif vaut exactement α′·L_in.

    Args:
        generated: Lot généré (étiquettes = cibles de la classe a priori)
        bank: Banque mémoire (vide ou None au round 0 : négatifs intra-lot)
        teacher: Enseignant gelé (mode eval)
        projector: images -> projections du discriminateur
        hp: Hyperparamètres
        running: Statistiques BN courantes (relues sur l'enseignant sinon)

    Raises:
        EmptyBatchError: Lot généré vide
    """
    if len(generated) == 0:
        raise EmptyBatchError("lot généré")
    running = running if running is not None else running_bn_statistics(teacher)

    with BNStatisticsRecorder(teacher) as recorder:
        logits = teacher(generated.images)
    cls = class_prior_loss(logits, generated.labels)
    bn = bn_regularization_loss(recorder.statistics(), running)
    inversion = inversion_loss(cls, bn, hp)
    total = hp.alpha_prime * inversion

    contrastive_value = 0.0
    if hp.beta_prime > 0:
        contrastive = contrastive_loss(
            generated.images,
            bank,
            projector,
            hp.tp,
            policy=policy,
            generator=generator,
            max_negatives=max_negatives,
            include_positive=include_positive,
        )
        total = total + hp.beta_prime * contrastive
        contrastive_value = float(contrastive.detach())

    return SynthesisLoss(
        total=total,
        cls=float(cls.detach()),
        bn=float(bn.detach()),
        inversion=float(inversion.detach()),
        contrastive=contrastive_value,
    )
