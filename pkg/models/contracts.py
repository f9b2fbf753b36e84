"""
Contrats comportementaux des modèles manipulés par le pipeline.

Les modules de synthèse, d'augmentation et de distillation ne dépendent que
de ces contrats (protocoles + fonctions d'accès), jamais d'une architecture
concrète. Les architectures de référence sont dans ``models.networks``.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Any, Iterator, Optional, Protocol, Sequence, runtime_checkable

import torch
from torch import nn

from utils.exceptions import (
    ShapeMismatchError,
    NonFiniteOutputError,
    InsufficientBatchError,
    EmptyBatchError,
)


@dataclass
class ImageBatch:
    """
    Lot d'images étiquetées, unité qui circule entre toutes les étapes.

    Attributes:
        images: Tenseur B×C×H×W, pixels dans [0, 1]
        labels: Tenseur d'entiers de longueur B
    """
    images: torch.Tensor
    labels: torch.Tensor

    def __post_init__(self):
        if self.images.dim() != 4:
            raise ShapeMismatchError(("B", "C", "H", "W"), tuple(self.images.shape))
        if self.labels.shape != (self.images.shape[0],):
            raise ShapeMismatchError(
                (self.images.shape[0],), tuple(self.labels.shape), what="labels"
            )

    def __len__(self) -> int:
        return self.images.shape[0]

    @property
    def image_shape(self) -> tuple[int, int, int]:
        """Forme C×H×W d'une image."""
        return tuple(self.images.shape[1:])

    def to(self, device: torch.device | str) -> "ImageBatch":
        return ImageBatch(self.images.to(device), self.labels.to(device))

    def detach(self) -> "ImageBatch":
        """Copie détachée du graphe, sur CPU."""
        return ImageBatch(self.images.detach().cpu().clone(), self.labels.detach().cpu().clone())

    def subset(self, index: torch.Tensor | Sequence[int]) -> "ImageBatch":
        index = torch.as_tensor(index, dtype=torch.long)
        return ImageBatch(self.images[index], self.labels[index])

    @staticmethod
    def concat(batches: Sequence["ImageBatch"]) -> "ImageBatch":
        """Concatène plusieurs lots (au moins un)."""
        if not batches:
            raise EmptyBatchError("concaténation sans lot")
        return ImageBatch(
            torch.cat([b.images for b in batches]),
            torch.cat([b.labels for b in batches]),
        )


@dataclass
class BNStats:
    """
    Statistiques de normalisation par couche BN, dans l'ordre des modules.

    Attributes:
        means: μ_l par couche (un vecteur par canal)
        variances: σ_l² par couche (composantes >= 0)
    """
    means: list[torch.Tensor] = field(default_factory=list)
    variances: list[torch.Tensor] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.means)

    def __iter__(self) -> Iterator[tuple[torch.Tensor, torch.Tensor]]:
        return iter(zip(self.means, self.variances))

    def equals(self, other: "BNStats") -> bool:
        """Égalité exacte (bit à bit) de deux instantanés."""
        return len(self) == len(other) and all(
            torch.equal(m1, m2) and torch.equal(v1, v2)
            for (m1, v1), (m2, v2) in zip(self, other)
        )


@runtime_checkable
class Classifier(Protocol):
    """
    Contrat d'un classifieur (enseignant ou élève).

    ``forward(x) == head(embed(x))`` doit être vrai exactement : les deux
    passent par le même chemin de calcul.
    """
    label_count: int
    feature_dim: int
    input_shape: tuple[int, int, int]
    head: nn.Module

    def __call__(self, images: torch.Tensor) -> torch.Tensor: ...

    def embed(self, images: torch.Tensor) -> torch.Tensor: ...

    def pooled_features(self, images: torch.Tensor) -> dict[str, torch.Tensor]: ...


@runtime_checkable
class DiffusionBackend(Protocol):
    """
    Contrat d'un backend de diffusion (substitut local ou service distant).

    ``generate`` produit une variante par graine, de même forme que la source.
    """
    kind: str
    steps: int
    guidance_scale: float

    def generate(
        self,
        latent: torch.Tensor,
        source: torch.Tensor,
        seeds: Sequence[int],
        intensity: float,
    ) -> torch.Tensor: ...

    def generate_many(
        self,
        requests: Sequence[tuple[torch.Tensor, torch.Tensor, Sequence[int], float]],
    ) -> list[torch.Tensor]: ...


def bn_layers(model: nn.Module) -> list[nn.modules.batchnorm._BatchNorm]:
    """Couches BN du modèle, dans l'ordre stable de ``named_modules``."""
    return [m for m in model.modules() if isinstance(m, nn.modules.batchnorm._BatchNorm)]


def bn_layer_count(model: nn.Module) -> int:
    return len(bn_layers(model))


def _check_input(model: Any, images: torch.Tensor):
    expected = tuple(model.input_shape)
    if images.dim() != 4 or tuple(images.shape[1:]) != expected:
        raise ShapeMismatchError(("B",) + expected, tuple(images.shape))
    if images.shape[0] == 0:
        raise EmptyBatchError("lot d'images vide")


def _check_finite(model: Any, output: torch.Tensor) -> torch.Tensor:
    finite = torch.isfinite(output)
    if not bool(finite.all()):
        raise NonFiniteOutputError(type(model).__name__, int((~finite).sum()))
    return output


def _as_images(batch: ImageBatch | torch.Tensor) -> torch.Tensor:
    return batch.images if isinstance(batch, ImageBatch) else batch


def forward_logits(model: Classifier, batch: ImageBatch | torch.Tensor) -> torch.Tensor:
    """
    Logits B×label_count du modèle sur le lot.

    Différentiable par rapport aux pixels quand le mode gradient est actif.

    Raises:
        ShapeMismatchError: Forme d'image différente de ``model.input_shape``
        NonFiniteOutputError: Logits NaN/inf
    """
    images = _as_images(batch)
    _check_input(model, images)
    return _check_finite(model, model(images))


def penultimate_embedding(model: Classifier, batch: ImageBatch | torch.Tensor) -> torch.Tensor:
    """
    Plongement avant-dernière couche Φ(x), matrice B×d.

    ``model.head(penultimate_embedding(model, x))`` reproduit exactement
    ``forward_logits(model, x)``.
    """
    images = _as_images(batch)
    _check_input(model, images)
    return _check_finite(model, model.embed(images))


class BNStatisticsRecorder:
    """
    Context manager qui enregistre, pendant un forward, la moyenne et la
    variance (biaisée) par canal des activations d'entrée de chaque couche BN.

    Les tenseurs enregistrés restent dans le graphe : la perte de
    régularisation BN peut être rétropropagée jusqu'aux pixels.

    Example:
        >>> with BNStatisticsRecorder(teacher) as recorder:
        ...     logits = teacher(images)
        >>> stats = recorder.statistics()
    """

    def __init__(self, model: nn.Module):
        self.model = model
        self._handles: list = []
        self._records: dict[int, tuple[torch.Tensor, torch.Tensor]] = {}

    def _hook(self, index: int):
        def hook(module, inputs, output):
            x = inputs[0]
            dims = [0] + list(range(2, x.dim()))
            self._records[index] = (
                x.mean(dim=dims),
                x.var(dim=dims, unbiased=False),
            )
        return hook

    def __enter__(self) -> "BNStatisticsRecorder":
        self._records.clear()
        self._handles = [
            layer.register_forward_hook(self._hook(i))
            for i, layer in enumerate(bn_layers(self.model))
        ]
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        for handle in self._handles:
            handle.remove()
        self._handles = []
        return False

    def statistics(self) -> BNStats:
        """Statistiques du dernier forward, dans l'ordre des couches."""
        ordered = [self._records[i] for i in sorted(self._records)]
        return BNStats(
            means=[m for m, _ in ordered],
            variances=[v for _, v in ordered],
        )


def batch_bn_statistics(model: Classifier, batch: ImageBatch | torch.Tensor) -> BNStats:
    """
    Moyenne/variance par canal des activations pré-normalisation du lot,
    pour chaque couche BN (liste vide si le modèle n'en a pas).

    Raises:
        InsufficientBatchError: Lot de moins de 2 images
    """
    images = _as_images(batch)
    if images.shape[0] < 2:
        raise InsufficientBatchError(images.shape[0])
    _check_input(model, images)
    with BNStatisticsRecorder(model) as recorder:
        model(images)
    return recorder.statistics()


def running_bn_statistics(model: nn.Module) -> BNStats:
    """
    Instantané en lecture seule des statistiques courantes (running) des BN.

    Les tenseurs sont clonés : modifier l'instantané n'affecte pas le modèle.
    """
    layers = bn_layers(model)
    return BNStats(
        means=[layer.running_mean.detach().clone() for layer in layers],
        variances=[layer.running_var.detach().clone() for layer in layers],
    )


def freeze(model: nn.Module) -> nn.Module:
    """Gèle un modèle (mode eval, aucun gradient sur ses paramètres)."""
    model.eval()
    for parameter in model.parameters():
        parameter.requires_grad_(False)
    return model


def parameter_checksum(model: nn.Module) -> str:
    """
    Somme de contrôle SHA-256 des paramètres et buffers d'un modèle.

    Sert à vérifier que l'enseignant n'est jamais modifié.
    """
    digest = hashlib.sha256()
    for name, tensor in sorted(model.state_dict().items()):
        digest.update(name.encode())
        digest.update(tensor.detach().cpu().contiguous().numpy().tobytes())
    return digest.hexdigest()


def model_device(model: nn.Module) -> torch.device:
    """Device des paramètres du modèle (CPU si aucun paramètre)."""
    parameter: Optional[torch.Tensor] = next(iter(model.parameters()), None)
    return parameter.device if parameter is not None else torch.device("cpu")
