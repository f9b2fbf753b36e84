"""
Encodeur d'images vers le latent f_syn consommé par le backend de diffusion.

Deux variantes :
- ``autoencoder`` : encodeur/décodeur d'un ``ConvAutoencoder`` entraîné
- ``identity``    : latent = pixels aplatis (aucun modèle requis)
"""
from __future__ import annotations

from typing import Optional

import torch

from models.networks import ConvAutoencoder
from utils.exceptions import ShapeMismatchError
from utils.logger import get_logger


logger = get_logger(__name__)


class ImageEncoder:
    """
    Encodeur déterministe image -> latent (et décodeur inverse).

    Example:
        >>> encoder = ImageEncoder((1, 16, 16), autoencoder)
        >>> latent = encoder.encode(images)      # B×d
        >>> images = encoder.decode(latent)      # B×C×H×W
    """

    def __init__(self, image_shape: tuple[int, int, int],
                 autoencoder: Optional[ConvAutoencoder] = None):
        """
        Args:
            image_shape: Forme C×H×W des images acceptées
            autoencoder: Autoencodeur entraîné (None -> encodeur identité)
        """
        self.image_shape = tuple(image_shape)
        self.autoencoder = autoencoder
        if autoencoder is not None:
            if tuple(autoencoder.input_shape) != self.image_shape:
                raise ShapeMismatchError(self.image_shape, autoencoder.input_shape, what="autoencoder")
            autoencoder.eval()
            for parameter in autoencoder.parameters():
                parameter.requires_grad_(False)
        logger.debug(f"ImageEncoder initialisé ({self.kind}, {self.image_shape})")

    @property
    def kind(self) -> str:
        return "identity" if self.autoencoder is None else "autoencoder"

    @property
    def latent_dim(self) -> int:
        if self.autoencoder is None:
            channels, height, width = self.image_shape
            return channels * height * width
        return self.autoencoder.latent_dim

    def _check(self, images: torch.Tensor) -> torch.Tensor:
        if images.dim() == 3:
            images = images.unsqueeze(0)
        if images.dim() != 4 or tuple(images.shape[1:]) != self.image_shape:
            raise ShapeMismatchError(("B",) + self.image_shape, tuple(images.shape))
        return images

    @torch.no_grad()
    def encode(self, images: torch.Tensor) -> torch.Tensor:
        """Latents B×d d'images C×H×W ou B×C×H×W."""
        images = self._check(images)
        if self.autoencoder is None:
            return images.flatten(1).clone()
        return self.autoencoder.encode(images)

    @torch.no_grad()
    def decode(self, latent: torch.Tensor) -> torch.Tensor:
        """Images B×C×H×W dans [0, 1] à partir de latents B×d."""
        if latent.dim() == 1:
            latent = latent.unsqueeze(0)
        if self.autoencoder is None:
            return latent.view(latent.shape[0], *self.image_shape).clamp(0, 1)
        return self.autoencoder.decode(latent)


def encode_latent(encoder: ImageEncoder, image: torch.Tensor) -> torch.Tensor:
    """
    Latent f_syn d'une image (C×H×W -> vecteur d) ou d'un lot (B×C×H×W -> B×d).

    Deux appels sur la même image donnent le même latent.

    Raises:
        ShapeMismatchError: Forme différente de celle déclarée par l'encodeur
    """
    latent = encoder.encode(image)
    return latent[0] if image.dim() == 3 else latent
