"""
Construction des vues positives par augmentation aléatoire.

La politique par défaut applique, image par image : retournement horizontal
(p=0.5), padding de 4 pixels puis recadrage aléatoire, variation de
luminosité multiplicative dans [1−0.1, 1+0.1]. Le résultat est borné à [0, 1]
et reste différentiable par rapport aux pixels d'entrée.
"""
from __future__ import annotations

from typing import Optional

import torch
import torch.nn.functional as F
from pydantic import BaseModel, ConfigDict, Field


class AugmentationPolicy(BaseModel):
    """
    Paramètres de l'augmentation des vues positives.

    Attributes:
        flip_p: Probabilité de retournement horizontal
        pad: Padding (pixels) avant recadrage aléatoire ; 0 désactive
        jitter: Amplitude de la variation de luminosité ; 0 désactive
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    flip_p: float = Field(0.5, ge=0, le=1)
    pad: int = Field(4, ge=0)
    jitter: float = Field(0.1, ge=0, lt=1)

    @classmethod
    def identity(cls) -> "AugmentationPolicy":
        return cls(flip_p=0.0, pad=0, jitter=0.0)

    @property
    def is_identity(self) -> bool:
        return self.flip_p == 0 and self.pad == 0 and self.jitter == 0


def _uniform(count: int, generator: Optional[torch.Generator]) -> torch.Tensor:
    return torch.rand(count, generator=generator)


def make_positive_views(
    images: torch.Tensor,
    policy: Optional[AugmentationPolicy] = None,
    generator: Optional[torch.Generator] = None,
) -> torch.Tensor:
    """
    Vues positives d'un lot B×C×H×W.

    Les tirages aléatoires sont faits sur CPU avec ``generator`` : à graine
    fixe, la sortie est identique d'une exécution à l'autre.
    """
    policy = policy or AugmentationPolicy()
    if policy.is_identity or images.shape[0] == 0:
        return images
    count, _, height, width = images.shape
    views = images

    flips = _uniform(count, generator) < policy.flip_p
    if bool(flips.any()):
        mask = flips.to(images.device).view(-1, 1, 1, 1)
        views = torch.where(mask, views.flip(-1), views)

    if policy.pad > 0:
        padded = F.pad(views, (policy.pad,) * 4)
        span = 2 * policy.pad + 1
        offsets_y = torch.randint(0, span, (count,), generator=generator).tolist()
        offsets_x = torch.randint(0, span, (count,), generator=generator).tolist()
        views = torch.stack([
            padded[i, :, oy:oy + height, ox:ox + width]
            for i, (oy, ox) in enumerate(zip(offsets_y, offsets_x))
        ])

    if policy.jitter > 0:
        factors = 1 + (2 * _uniform(count, generator) - 1) * policy.jitter
        views = views * factors.to(views).view(-1, 1, 1, 1)

    return views.clamp(0, 1)


def make_positive_view(
    image: torch.Tensor,
    policy: Optional[AugmentationPolicy] = None,
    generator: Optional[torch.Generator] = None,
) -> torch.Tensor:
    """Vue positive d'une seule image C×H×W (même forme, pixels dans [0, 1])."""
    return make_positive_views(image.unsqueeze(0), policy, generator)[0]
