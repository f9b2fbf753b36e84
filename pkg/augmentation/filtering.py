"""
Score de compréhension de l'élève et filtre de similarité cosinus.

- ``self_supervised_loss`` : CE(étiquette source, élève(variante))
- ``similarity``           : cosinus des plongements (enseignant par défaut)
- ``filter_mask``          : M_k = (s_k > ω), inégalité stricte
"""
from __future__ import annotations

from typing import Callable, Literal, Optional

import torch
import torch.nn.functional as F

from models.contracts import forward_logits, penultimate_embedding
from models.networks import make_projector
from synthesis.losses import check_labels
from utils.exceptions import InvalidThresholdError, ShapeMismatchError
from utils.logger import get_logger


logger = get_logger(__name__)

EmbeddingMode = Literal["teacher", "discriminator"]


def self_supervised_loss(
    student: torch.nn.Module,
    variant: torch.Tensor,
    source_label: int | torch.Tensor,
    reduction: str = "mean",
) -> torch.Tensor:
    """
    Entropie croisée de la prédiction de l'élève sur la (ou les) variante(s)
    contre l'étiquette d'avant augmentation.

    Args:
        student: Élève (contrat ``Classifier``)
        variant: Image C×H×W ou lot K×C×H×W
        source_label: Étiquette de la source (scalaire ou vecteur de longueur K)
        reduction: "mean" ou "none" (une perte par variante)

    Raises:
        InvalidLabelError: Étiquette hors de [0, C)
    """
    images = variant.unsqueeze(0) if variant.dim() == 3 else variant
    labels = torch.as_tensor(source_label, dtype=torch.long, device=images.device)
    if labels.dim() == 0:
        labels = labels.expand(images.shape[0])
    check_labels(labels, student.label_count)
    logits = forward_logits(student, images)
    return F.cross_entropy(logits, labels, reduction=reduction)


def make_embedder(
    mode: EmbeddingMode,
    teacher: torch.nn.Module,
    disc: Optional[torch.nn.Module] = None,
) -> Callable[[torch.Tensor], torch.Tensor]:
    """
    Fonction de plongement utilisée par le filtre.

    ``teacher`` : plongement avant-dernière couche de l'enseignant gelé ;
    ``discriminator`` : projection du discriminateur.
    """
    if mode == "teacher":
        return lambda images: penultimate_embedding(teacher, images)
    if disc is None:
        raise ValueError("Le mode 'discriminator' requiert une tête de discriminateur")
    return make_projector(disc, teacher)


@torch.no_grad()
def similarities(
    embed: Callable[[torch.Tensor], torch.Tensor],
    reference: torch.Tensor,
    others: torch.Tensor,
) -> torch.Tensor:
    """
    Cosinus entre une image de référence et chaque image de ``others``.

    Un plongement de norme nulle donne 0 (avec avertissement).
    """
    if reference.dim() == 4:
        reference = reference[0]
    if tuple(others.shape[1:]) != tuple(reference.shape):
        raise ShapeMismatchError(tuple(reference.shape), tuple(others.shape[1:]))
    embedded = embed(torch.cat([reference.unsqueeze(0), others])).flatten(1).double()
    u, v = embedded[:1], embedded[1:]
    norms = u.norm(dim=1) * v.norm(dim=1)
    degenerate = norms == 0
    if bool(degenerate.any()):
        logger.warning(f"Plongement de norme nulle: similarité fixée à 0 ({int(degenerate.sum())} cas)")
    cosine = (v @ u[0]) / torch.where(degenerate, torch.ones_like(norms), norms)
    return cosine.masked_fill(degenerate, 0.0).clamp(-1, 1).float()


def similarity(
    embedder: Callable[[torch.Tensor], torch.Tensor] | torch.nn.Module,
    a: torch.Tensor,
    b: torch.Tensor,
) -> float:
    """
    Cosinus des plongements de deux images de même forme, dans [-1, 1].

    Args:
        embedder: Fonction de plongement, ou classifieur (plongement avant-dernière couche)
    """
    if a.shape != b.shape:
        raise ShapeMismatchError(tuple(a.shape), tuple(b.shape))
    if isinstance(embedder, torch.nn.Module):
        model = embedder
        embedder = lambda images: penultimate_embedding(model, images)  # noqa: E731
    return float(similarities(embedder, a, b.unsqueeze(0) if b.dim() == 3 else b)[0])


def filter_mask(values: torch.Tensor | list[float], omega: float) -> torch.Tensor:
    """
    Masque booléen (s_k > ω), inégalité stricte.

    Raises:
        InvalidThresholdError: ω hors de [-1, 1]
    """
    if not -1.0 <= omega <= 1.0:
        raise InvalidThresholdError(omega)
    return torch.as_tensor(values, dtype=torch.float64) > omega
