"""
Banque mémoire bornée des échantillons synthétiques.

Stocke des instantanés détachés (image, étiquette, round d'insertion) avec
éviction strictement FIFO. Sert de réservoir de négatifs pour la perte
contrastive de diversité.
"""
from __future__ import annotations

import io
import pickle
from collections import deque
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Optional

import torch

from models.contracts import ImageBatch
from utils.cache import atomic_write_bytes
from utils.exceptions import CheckpointFormatError, ShapeMismatchError, MemoryBankError
from utils.logger import get_logger


logger = get_logger(__name__)

BANK_FORMAT = "dda-memory-bank"
BANK_VERSION = 1


@dataclass(frozen=True)
class BankEntry:
    image: torch.Tensor
    label: int
    round: int


class MemoryBank:
    """
    Banque FIFO de capacité fixe.

    Example:
        >>> bank = MemoryBank(capacity=8, image_shape=(1, 8, 8))
        >>> bank.push(batch, round_index=0)
        >>> negatives = bank.sample(64, generator=g)
    """

    def __init__(self, capacity: int = 4096, image_shape: Optional[tuple[int, int, int]] = None):
        """
        Args:
            capacity: Nombre maximal d'entrées (> 0)
            image_shape: Forme C×H×W attendue (fixée au premier push si None)
        """
        if capacity < 1:
            raise MemoryBankError(
                "La capacité de la banque doit être positive", {"capacity": capacity}
            )
        self.capacity = capacity
        self.image_shape = tuple(image_shape) if image_shape is not None else None
        self._entries: deque[BankEntry] = deque(maxlen=capacity)
        logger.debug(f"MemoryBank initialisée (capacité {capacity})")

    def __len__(self) -> int:
        return len(self._entries)

    def __iter__(self) -> Iterator[BankEntry]:
        return iter(self._entries)

    @property
    def size(self) -> int:
        return len(self._entries)

    def is_empty(self) -> bool:
        return not self._entries

    def push(self, batch: ImageBatch, round_index: int) -> "MemoryBank":
        """
        Ajoute tous les éléments du lot ; les plus anciens sont évincés au-delà
        de la capacité.

        Raises:
            ShapeMismatchError: Forme d'image différente de celle de la banque
        """
        if len(batch) == 0:
            return self
        if self.image_shape is None:
            self.image_shape = batch.image_shape
        elif batch.image_shape != self.image_shape:
            raise ShapeMismatchError(self.image_shape, batch.image_shape, what="memory bank image")

        snapshot = batch.detach()
        for image, label in zip(snapshot.images, snapshot.labels.tolist()):
            self._entries.append(BankEntry(image.clone(), int(label), round_index))
        logger.debug(f"Banque: +{len(batch)} éléments (round {round_index}), taille {self.size}")
        return self

    def images(self) -> torch.Tensor:
        """Toutes les images stockées (N×C×H×W), dans l'ordre d'insertion."""
        if self.is_empty():
            shape = self.image_shape or (0, 0, 0)
            return torch.empty((0, *shape))
        return torch.stack([entry.image for entry in self._entries])

    def labels(self) -> torch.Tensor:
        return torch.tensor([entry.label for entry in self._entries], dtype=torch.long)

    def snapshot(self) -> ImageBatch:
        """Copie des entrées courantes sous forme de lot."""
        return ImageBatch(self.images().clone(), self.labels())

    def sample(self, count: int, generator: Optional[torch.Generator] = None) -> torch.Tensor:
        """
        Tire ``min(count, size)`` images uniformément sans remise.
        """
        count = min(count, self.size)
        if count == 0:
            return self.images()
        index = torch.randperm(self.size, generator=generator)[:count]
        return self.images()[index]

    def save(self, path: Path):
        """Enregistre la banque (en-tête versionné + entrées) de façon atomique."""
        payload = {
            "format": BANK_FORMAT,
            "version": BANK_VERSION,
            "capacity": self.capacity,
            "image_shape": list(self.image_shape) if self.image_shape else None,
            "images": self.images(),
            "labels": self.labels(),
            "rounds": torch.tensor([entry.round for entry in self._entries], dtype=torch.long),
        }
        buffer = io.BytesIO()
        torch.save(payload, buffer)
        atomic_write_bytes(Path(path), buffer.getvalue())

    @classmethod
    def load(cls, path: Path) -> "MemoryBank":
        """
        Recharge une banque enregistrée par :meth:`save`.

        Raises:
            CheckpointFormatError: En-tête absent ou version non supportée
        """
        try:
            payload = torch.load(Path(path), map_location="cpu", weights_only=True)
        except (RuntimeError, EOFError, pickle.UnpicklingError) as e:
            raise CheckpointFormatError(str(path), f"banque illisible: {e}") from e
        if not isinstance(payload, dict) or payload.get("format") != BANK_FORMAT:
            raise CheckpointFormatError(str(path), "en-tête de banque mémoire absent")
        if payload.get("version") != BANK_VERSION:
            raise CheckpointFormatError(str(path), f"version {payload.get('version')} non supportée")
        shape = payload["image_shape"]
        bank = cls(payload["capacity"], tuple(shape) if shape else None)
        for image, label, round_index in zip(
            payload["images"], payload["labels"].tolist(), payload["rounds"].tolist()
        ):
            bank._entries.append(BankEntry(image.clone(), int(label), int(round_index)))
        logger.info(f"Banque mémoire rechargée: {bank.size} éléments depuis {path}")
        return bank
