"""
Architectures de référence à l'échelle « bureau ».

- ``ConvClassifier`` : petit CNN avec BN (blocs conv-BN-ReLU-pool), utilisé
  comme enseignant (largeur 32) et comme élève (demi-largeur 16).
- ``LinearClassifier`` : classifieur linéaire, sans BN par défaut ; sert de
  cas jouet (plongement identité, enseignant linéaire).
- ``Generator`` : latent -> pile de déconvolutions, pixels dans [0, 1].
- ``DiscriminatorHead`` : perceptron à 2 couches sur
  (plongement avant-dernière couche ⊕ pooling global des caractéristiques
  intermédiaires de l'enseignant).
- ``ConvAutoencoder`` : encodeur/décodeur du substitut de diffusion.

Toutes les images d'entrée sont dans [0, 1] ; la normalisation du jeu de
données est une transformation affine fixe appliquée en tête de réseau.
"""
from __future__ import annotations

from typing import Callable, Sequence

import torch
from torch import nn
import torch.nn.functional as F


class Normalize(nn.Module):
    """Transformation affine fixe (x - mean) / std par canal."""

    def __init__(self, mean: Sequence[float], std: Sequence[float]):
        super().__init__()
        self.register_buffer("mean", torch.tensor(mean, dtype=torch.float32).view(1, -1, 1, 1))
        self.register_buffer("std", torch.tensor(std, dtype=torch.float32).view(1, -1, 1, 1))

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return (x - self.mean) / self.std


class ConvClassifier(nn.Module):
    """
    CNN à ``blocks`` blocs conv3×3-BN-ReLU-maxpool puis pooling global.

    Le plongement Φ(x) est la sortie du pooling global final (dimension
    ``width * 2**(blocks-1)``) ; ψ est une couche linéaire.
    """

    architecture = "cnn"

    def __init__(
        self,
        in_channels: int = 1,
        image_size: int = 16,
        label_count: int = 10,
        width: int = 32,
        blocks: int = 3,
        mean: Sequence[float] = (0.5,),
        std: Sequence[float] = (0.5,),
    ):
        super().__init__()
        if blocks < 2:
            raise ValueError("ConvClassifier requiert au moins 2 blocs")
        self.label_count = label_count
        self.input_shape = (in_channels, image_size, image_size)
        self.width = width
        self.blocks = blocks
        self.normalize = Normalize(mean, std)

        stages = []
        channels = in_channels
        for i in range(blocks):
            out_channels = width * 2 ** i
            stages.append(nn.Sequential(
                nn.Conv2d(channels, out_channels, 3, padding=1, bias=False),
                nn.BatchNorm2d(out_channels),
                nn.ReLU(inplace=True),
                nn.MaxPool2d(2) if image_size // 2 ** (i + 1) >= 1 else nn.Identity(),
            ))
            channels = out_channels
        self.stages = nn.ModuleList(stages)
        self.feature_dim = channels
        self.head = nn.Linear(channels, label_count)

    def _stage_outputs(self, images: torch.Tensor) -> list[torch.Tensor]:
        x = self.normalize(images)
        outputs = []
        for stage in self.stages:
            x = stage(x)
            outputs.append(x)
        return outputs

    def embed(self, images: torch.Tensor) -> torch.Tensor:
        return F.adaptive_avg_pool2d(self._stage_outputs(images)[-1], 1).flatten(1)

    def forward(self, images: torch.Tensor) -> torch.Tensor:
        return self.head(self.embed(images))

    def pooled_features(self, images: torch.Tensor) -> dict[str, torch.Tensor]:
        """Pooling global aux profondeurs premier / deuxième / dernier bloc."""
        outputs = self._stage_outputs(images)
        pooled = [F.adaptive_avg_pool2d(o, 1).flatten(1) for o in outputs]
        return {
            "first-pool": pooled[0],
            "second-pool": pooled[1],
            "final-pool": pooled[-1],
        }

    def config(self) -> dict:
        return {
            "in_channels": self.input_shape[0],
            "image_size": self.input_shape[1],
            "label_count": self.label_count,
            "width": self.width,
            "blocks": self.blocks,
            "mean": self.normalize.mean.flatten().tolist(),
            "std": self.normalize.std.flatten().tolist(),
        }


class LinearClassifier(nn.Module):
    """
    Classifieur linéaire : Φ = aplatissement (ou couche cachée), ψ = linéaire.

    Avec ``hidden=None`` le plongement est exactement l'entrée aplatie.
    """

    architecture = "linear"

    def __init__(
        self,
        in_channels: int = 1,
        image_size: int = 8,
        label_count: int = 10,
        hidden: int | None = None,
        batch_norm: bool = False,
    ):
        super().__init__()
        self.label_count = label_count
        self.input_shape = (in_channels, image_size, image_size)
        self.hidden = hidden
        self.batch_norm = batch_norm
        flat = in_channels * image_size * image_size
        layers: list[nn.Module] = [nn.Flatten()]
        if hidden is not None:
            layers.append(nn.Linear(flat, hidden))
            if batch_norm:
                layers.append(nn.BatchNorm1d(hidden))
            layers.append(nn.ReLU())
        self.features = nn.Sequential(*layers)
        self.feature_dim = hidden if hidden is not None else flat
        self.head = nn.Linear(self.feature_dim, label_count)

    def embed(self, images: torch.Tensor) -> torch.Tensor:
        return self.features(images)

    def forward(self, images: torch.Tensor) -> torch.Tensor:
        return self.head(self.embed(images))

    def pooled_features(self, images: torch.Tensor) -> dict[str, torch.Tensor]:
        flat = images.flatten(1)
        embedding = self.embed(images)
        return {"first-pool": flat, "second-pool": flat, "final-pool": embedding}

    def config(self) -> dict:
        return {
            "in_channels": self.input_shape[0],
            "image_size": self.input_shape[1],
            "label_count": self.label_count,
            "hidden": self.hidden,
            "batch_norm": self.batch_norm,
        }


class Generator(nn.Module):
    """
    Générateur latent -> image (poids partagés θ_w), sortie sigmoïde dans [0, 1].

    La taille d'image doit être divisible par 4.
    """

    def __init__(
        self,
        latent_dim: int = 64,
        image_shape: tuple[int, int, int] = (1, 16, 16),
        base_channels: int = 32,
    ):
        super().__init__()
        channels, height, width = image_shape
        if height % 4 or width % 4:
            raise ValueError(f"Taille d'image non divisible par 4: {image_shape}")
        self.latent_dim = latent_dim
        self.image_shape = tuple(image_shape)
        self.base_channels = base_channels
        self.init_size = (height // 4, width // 4)
        self.project = nn.Sequential(
            nn.Linear(latent_dim, 2 * base_channels * self.init_size[0] * self.init_size[1]),
        )
        self.decode = nn.Sequential(
            nn.BatchNorm2d(2 * base_channels),
            nn.Upsample(scale_factor=2),
            nn.Conv2d(2 * base_channels, 2 * base_channels, 3, padding=1, bias=False),
            nn.BatchNorm2d(2 * base_channels),
            nn.LeakyReLU(0.2, inplace=True),
            nn.Upsample(scale_factor=2),
            nn.Conv2d(2 * base_channels, base_channels, 3, padding=1, bias=False),
            nn.BatchNorm2d(base_channels),
            nn.LeakyReLU(0.2, inplace=True),
            nn.Conv2d(base_channels, channels, 3, padding=1),
            nn.Sigmoid(),
        )

    def forward(self, latent: torch.Tensor) -> torch.Tensor:
        x = self.project(latent)
        x = x.view(latent.shape[0], 2 * self.base_channels, *self.init_size)
        return self.decode(x)

    def config(self) -> dict:
        return {
            "latent_dim": self.latent_dim,
            "image_shape": list(self.image_shape),
            "base_channels": self.base_channels,
        }


class DiscriminatorHead(nn.Module):
    """Perceptron 2 couches produisant un vecteur de projection."""

    def __init__(self, in_dim: int, hidden_dim: int = 128, projection_dim: int = 64):
        super().__init__()
        self.in_dim = in_dim
        self.hidden_dim = hidden_dim
        self.projection_dim = projection_dim
        self.net = nn.Sequential(
            nn.Linear(in_dim, hidden_dim),
            nn.ReLU(inplace=True),
            nn.Linear(hidden_dim, projection_dim),
        )

    def forward(self, features: torch.Tensor) -> torch.Tensor:
        return self.net(features)

    def config(self) -> dict:
        return {
            "in_dim": self.in_dim,
            "hidden_dim": self.hidden_dim,
            "projection_dim": self.projection_dim,
        }


def discriminator_input(teacher: nn.Module, images: torch.Tensor) -> torch.Tensor:
    """Concaténation (pooling des blocs intermédiaires ⊕ plongement final)."""
    pooled = teacher.pooled_features(images)
    return torch.cat(
        [pooled["first-pool"], pooled["second-pool"], pooled["final-pool"]], dim=1
    )


def discriminator_input_dim(teacher: nn.Module) -> int:
    sample = torch.zeros(2, *teacher.input_shape)
    was_training = teacher.training
    teacher.eval()
    with torch.no_grad():
        dim = discriminator_input(teacher, sample).shape[1]
    teacher.train(was_training)
    return dim


def make_projector(
    disc: DiscriminatorHead,
    teacher: nn.Module,
) -> Callable[[torch.Tensor], torch.Tensor]:
    """
    Fonction images -> projections z = disc(features_enseignant(images)).

    L'enseignant n'est pas un sous-module du discriminateur : ses paramètres
    ne sont jamais vus par l'optimiseur de la synthèse.
    """
    def project(images: torch.Tensor) -> torch.Tensor:
        return disc(discriminator_input(teacher, images))
    return project


class ConvAutoencoder(nn.Module):
    """
    Autoencodeur convolutif du substitut de diffusion.

    ``encode`` donne le latent f_syn (vecteur), ``decode`` revient dans [0, 1].
    """

    def __init__(
        self,
        in_channels: int = 1,
        image_size: int = 16,
        latent_dim: int = 32,
        base_channels: int = 16,
    ):
        super().__init__()
        if image_size % 4:
            raise ValueError(f"Taille d'image non divisible par 4: {image_size}")
        self.input_shape = (in_channels, image_size, image_size)
        self.latent_dim = latent_dim
        self.base_channels = base_channels
        reduced = image_size // 4
        self.encoder = nn.Sequential(
            nn.Conv2d(in_channels, base_channels, 3, stride=2, padding=1),
            nn.ReLU(inplace=True),
            nn.Conv2d(base_channels, 2 * base_channels, 3, stride=2, padding=1),
            nn.ReLU(inplace=True),
            nn.Flatten(),
            nn.Linear(2 * base_channels * reduced * reduced, latent_dim),
        )
        self.decoder_input = nn.Linear(latent_dim, 2 * base_channels * reduced * reduced)
        self.decoder = nn.Sequential(
            nn.ReLU(inplace=True),
            nn.ConvTranspose2d(2 * base_channels, base_channels, 4, stride=2, padding=1),
            nn.ReLU(inplace=True),
            nn.ConvTranspose2d(base_channels, in_channels, 4, stride=2, padding=1),
            nn.Sigmoid(),
        )
        self._reduced = reduced

    def encode(self, images: torch.Tensor) -> torch.Tensor:
        return self.encoder(images)

    def decode(self, latent: torch.Tensor) -> torch.Tensor:
        x = self.decoder_input(latent)
        x = x.view(latent.shape[0], 2 * self.base_channels, self._reduced, self._reduced)
        return self.decoder(x)

    def forward(self, images: torch.Tensor) -> torch.Tensor:
        return self.decode(self.encode(images))

    def config(self) -> dict:
        return {
            "in_channels": self.input_shape[0],
            "image_size": self.input_shape[1],
            "latent_dim": self.latent_dim,
            "base_channels": self.base_channels,
        }


ARCHITECTURES: dict[str, type[nn.Module]] = {
    "cnn": ConvClassifier,
    "linear": LinearClassifier,
}


def build_classifier(architecture: str, **kwargs) -> nn.Module:
    """
    Construit un classifieur à partir de son identifiant d'architecture.

    Example:
        >>> teacher = build_classifier("cnn", width=32, label_count=10)
    """
    try:
        cls = ARCHITECTURES[architecture]
    except KeyError:
        raise ValueError(
            f"Architecture inconnue '{architecture}' (connues: {sorted(ARCHITECTURES)})"
        ) from None
    return cls(**kwargs)
