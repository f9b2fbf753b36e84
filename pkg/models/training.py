"""
Entraînement supervisé des modèles de référence.

- ``fit_classifier`` : entraîne l'enseignant (ou l'élève « from scratch »)
  sur des données étiquetées ; c'est la seule étape qui voit les vraies données.
- ``fit_autoencoder`` : prépare l'autoencodeur du substitut de diffusion.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import torch
from torch import nn
import torch.nn.functional as F
from torch.utils.data import DataLoader, TensorDataset
from tqdm import tqdm

from models.contracts import ImageBatch
from evaluation.metrics import accuracy
from utils.logger import get_logger, PerformanceLogger


logger = get_logger(__name__)


@dataclass
class TrainingHistory:
    """Historique par époque d'un entraînement supervisé."""
    losses: list[float] = field(default_factory=list)
    test_accuracy: list[float] = field(default_factory=list)

    @property
    def final_accuracy(self) -> float:
        return self.test_accuracy[-1] if self.test_accuracy else float("nan")


def _loader(batch: ImageBatch, batch_size: int, seed: int) -> DataLoader:
    generator = torch.Generator().manual_seed(seed)
    return DataLoader(
        TensorDataset(batch.images, batch.labels),
        batch_size=batch_size,
        shuffle=True,
        generator=generator,
    )


def fit_classifier(
    model: nn.Module,
    train: ImageBatch,
    test: ImageBatch,
    epochs: int = 30,
    lr: float = 1e-3,
    batch_size: int = 64,
    seed: int = 0,
    progress: bool = False,
) -> TrainingHistory:
    """
    Entraîne un classifieur par entropie croisée (Adam + cosinus).

    Args:
        model: Classifieur respectant le contrat ``Classifier``
        train: Données d'entraînement étiquetées
        test: Données de test pour le suivi de précision
        epochs: Nombre d'époques
        lr: Taux d'apprentissage initial
        batch_size: Taille de lot
        seed: Graine du mélange des lots

    Returns:
        TrainingHistory: Pertes et précisions par époque
    """
    optimizer = torch.optim.Adam(model.parameters(), lr=lr)
    scheduler = torch.optim.lr_scheduler.CosineAnnealingLR(optimizer, T_max=max(epochs, 1))
    loader = _loader(train, batch_size, seed)
    history = TrainingHistory()

    with PerformanceLogger(logger, f"fit_classifier({type(model).__name__}, {epochs} époques)"):
        for epoch in tqdm(range(epochs), desc="classifier", disable=not progress):
            model.train()
            total, count = 0.0, 0
            for images, labels in loader:
                optimizer.zero_grad()
                loss = F.cross_entropy(model(images), labels)
                loss.backward()
                optimizer.step()
                total += loss.item() * len(labels)
                count += len(labels)
            scheduler.step()
            history.losses.append(total / count)
            history.test_accuracy.append(accuracy(model, test))
            logger.debug(
                f"Époque {epoch + 1}/{epochs} - perte={history.losses[-1]:.4f} "
                f"précision={history.test_accuracy[-1]:.4f}"
            )

    model.eval()
    logger.info(f"Précision finale de test: {history.final_accuracy:.4f}")
    return history


def fit_autoencoder(
    autoencoder: nn.Module,
    images: torch.Tensor,
    epochs: int = 20,
    lr: float = 2e-3,
    batch_size: int = 64,
    seed: int = 0,
    progress: bool = False,
) -> list[float]:
    """
    Entraîne l'autoencodeur du substitut par reconstruction (BCE).

    Returns:
        list[float]: Perte moyenne par époque
    """
    optimizer = torch.optim.Adam(autoencoder.parameters(), lr=lr)
    generator = torch.Generator().manual_seed(seed)
    loader = DataLoader(TensorDataset(images), batch_size=batch_size, shuffle=True,
                        generator=generator)
    losses = []
    with PerformanceLogger(logger, f"fit_autoencoder({epochs} époques)"):
        for _ in tqdm(range(epochs), desc="autoencoder", disable=not progress):
            autoencoder.train()
            total, count = 0.0, 0
            for (batch,) in loader:
                optimizer.zero_grad()
                loss = F.binary_cross_entropy(autoencoder(batch), batch)
                loss.backward()
                optimizer.step()
                total += loss.item() * len(batch)
                count += len(batch)
            losses.append(total / count)
    autoencoder.eval()
    logger.info(f"Autoencodeur entraîné - perte de reconstruction finale {losses[-1]:.4f}")
    return losses
