"""
Perte contrastive de diversité.

Pour chaque ancre x_i, avec z = projection du discriminateur::

    ℓ_i = −log( exp(cos(z_i, z_i⁺)/tp) / Σ_p exp(cos(z_i, z_p⁻)/tp) )

Le dénominateur ne contient que les négatifs ; ``include_positive=True``
donne la variante InfoNCE où la paire positive y figure aussi.
"""
from __future__ import annotations

from typing import Callable, Optional

import torch

from models.contracts import ImageBatch
from memory_bank.bank import MemoryBank
from memory_bank.views import AugmentationPolicy, make_positive_views
from utils.exceptions import EmptyBatchError, InvalidTemperatureError, NoNegativesError
from utils.logger import get_logger


logger = get_logger(__name__)

COSINE_EPS = 1e-8


def cosine_matrix(u: torch.Tensor, v: torch.Tensor, eps: float = COSINE_EPS) -> torch.Tensor:
    """cos(u_i, v_j) = ⟨u_i, v_j⟩ / (‖u_i‖·‖v_j‖ + ε), matrice N×M."""
    dots = u @ v.T
    norms = u.norm(dim=1, keepdim=True) * v.norm(dim=1, keepdim=True).T
    return dots / (norms + eps)


def pairwise_cosine(u: torch.Tensor, v: torch.Tensor, eps: float = COSINE_EPS) -> torch.Tensor:
    """cos(u_i, v_i) ligne à ligne, vecteur de longueur N."""
    return (u * v).sum(dim=1) / (u.norm(dim=1) * v.norm(dim=1) + eps)


def contrastive_loss(
    anchors: ImageBatch | torch.Tensor,
    bank: Optional[MemoryBank],
    embed: Callable[[torch.Tensor], torch.Tensor],
    tp: float,
    *,
    positives: Optional[torch.Tensor] = None,
    negatives: Optional[torch.Tensor] = None,
    policy: Optional[AugmentationPolicy] = None,
    generator: Optional[torch.Generator] = None,
    max_negatives: int = 64,
    include_positive: bool = False,
) -> torch.Tensor:
    """
    Perte contrastive moyenne sur les ancres.

    Les négatifs sont un ensemble partagé de ``min(max_negatives, taille)``
    images tirées de la banque. Banque vide : chaque ancre utilise les autres
    éléments du lot comme négatifs.

    Args:
        anchors: Images ancres (différentiables)
        bank: Banque mémoire (None ou vide autorisé)
        embed: Projection images -> vecteurs (discriminateur)
        tp: Température (> 0)
        positives: Vues positives imposées (sinon ``make_positive_views``)
        negatives: Négatifs imposés (court-circuite la banque)

    Raises:
        InvalidTemperatureError: tp <= 0
        NoNegativesError: Aucun négatif disponible
    """
    if tp <= 0:
        raise InvalidTemperatureError("tp", tp)
    images = anchors.images if isinstance(anchors, ImageBatch) else anchors
    count = images.shape[0]
    if count == 0:
        raise EmptyBatchError("ancres de la perte contrastive")

    if positives is None:
        positives = make_positive_views(images, policy, generator)

    if negatives is None and bank is not None and not bank.is_empty():
        negatives = bank.sample(max_negatives, generator)
    intra_batch = negatives is None or negatives.shape[0] == 0

    z_anchor = embed(images)
    z_positive = embed(positives.to(images))
    positive_logits = pairwise_cosine(z_anchor, z_positive) / tp

    if intra_batch:
        if count < 2:
            raise NoNegativesError(count, 0 if bank is None else bank.size)
        logger.debug("Banque vide: négatifs tirés du lot courant")
        negative_logits = cosine_matrix(z_anchor, z_anchor) / tp
        self_mask = torch.eye(count, dtype=torch.bool, device=negative_logits.device)
        negative_logits = negative_logits.masked_fill(self_mask, float("-inf"))
    else:
        z_negative = embed(negatives.to(images))
        negative_logits = cosine_matrix(z_anchor, z_negative) / tp

    if include_positive:
        negative_logits = torch.cat([positive_logits.unsqueeze(1), negative_logits], dim=1)

    losses = -positive_logits + torch.logsumexp(negative_logits, dim=1)
    return losses.mean()
