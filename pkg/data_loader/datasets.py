"""
Chargement des jeux de données étiquetés (entraînement de l'enseignant,
référence d'évaluation et de FID).

Jeux supportés :
- ``digits``   : chiffres 8×8 de scikit-learn (inclus, aucun téléchargement),
                 redimensionnés en ``image_size`` (16 par défaut)
- ``mnist``, ``cifar10``, ``cifar100`` : layouts torchvision sous la racine
- ``folder``   : ``<racine>/index.csv`` (colonnes ``path,label``), chemins
                 relatifs à la racine, une image par ligne

La racine est ``DDA_DATASET_ROOT`` si défini, sinon ``settings.DATA_DIR``.
Toutes les images sont des tenseurs float dans [0, 1].
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Any, Optional

import numpy as np
import pandas as pd
import torch
import torch.nn.functional as F
from sklearn.datasets import load_digits
from sklearn.model_selection import train_test_split
from torchvision.io import ImageReadMode, read_image

from config import settings
from data_loader.exceptions import (
    CorruptedDatasetError,
    DatasetNotFoundError,
    InsufficientDataError,
    UnsupportedDatasetError,
)
from models.contracts import ImageBatch
from utils.cache import RoundCache
from utils.logger import get_logger, PerformanceLogger


logger = get_logger(__name__)

NORMALIZATION: dict[str, tuple[tuple[float, ...], tuple[float, ...]]] = {
    "digits": ((0.5,), (0.5,)),
    "mnist": ((0.1307,), (0.3081,)),
    "cifar10": ((0.4914, 0.4822, 0.4465), (0.2470, 0.2435, 0.2616)),
    "cifar100": ((0.5071, 0.4865, 0.4409), (0.2673, 0.2564, 0.2762)),
}

LAYOUTS: dict[str, str] = {
    "mnist": "<racine>/MNIST/raw/{train,t10k}-{images-idx3,labels-idx1}-ubyte",
    "cifar10": "<racine>/cifar-10-batches-py/{data_batch_1..5,test_batch,batches.meta}",
    "cifar100": "<racine>/cifar-100-python/{train,test,meta}",
    "folder": "<racine>/index.csv (colonnes path,label) + images référencées, un dossier par classe",
}

SUPPORTED = ("digits", "mnist", "cifar10", "cifar100", "folder")


@dataclass
class DatasetSplit:
    """
    Jeu de données chargé et découpé.

    Attributes:
        name: Identifiant du jeu
        train, test: Lots étiquetés
        label_count: Nombre de classes
        mean, std: Normalisation conseillée pour les classifieurs
    """
    name: str
    train: ImageBatch
    test: ImageBatch
    label_count: int
    mean: tuple[float, ...]
    std: tuple[float, ...]

    @property
    def image_shape(self) -> tuple[int, int, int]:
        return self.train.image_shape

    def summary(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "train": len(self.train),
            "test": len(self.test),
            "label_count": self.label_count,
            "image_shape": list(self.image_shape),
        }


def _resize(images: torch.Tensor, image_size: Optional[int]) -> torch.Tensor:
    if image_size is None or images.shape[-1] == image_size:
        return images
    resized = F.interpolate(images, size=(image_size, image_size), mode="bilinear",
                            align_corners=False)
    return resized.clamp(0, 1)


def _stratified_split(
    images: torch.Tensor, labels: torch.Tensor, test_fraction: float, seed: int
) -> tuple[ImageBatch, ImageBatch]:
    index = np.arange(len(labels))
    train_index, test_index = train_test_split(
        index, test_size=test_fraction, random_state=seed, stratify=labels.numpy()
    )
    train_index = torch.as_tensor(train_index)
    test_index = torch.as_tensor(test_index)
    return (
        ImageBatch(images[train_index], labels[train_index]),
        ImageBatch(images[test_index], labels[test_index]),
    )


def _load_digits(image_size: int, test_fraction: float, seed: int) -> tuple[ImageBatch, ImageBatch]:
    digits = load_digits()
    images = torch.tensor(digits.images, dtype=torch.float32).unsqueeze(1) / 16.0
    labels = torch.tensor(digits.target, dtype=torch.long)
    return _stratified_split(_resize(images, image_size), labels, test_fraction, seed)


def _torchvision_split(name: str, root: Path, train: bool):
    from torchvision import datasets

    factory = {"mnist": datasets.MNIST, "cifar10": datasets.CIFAR10,
               "cifar100": datasets.CIFAR100}[name]
    try:
        return factory(str(root), train=train, download=False)
    except RuntimeError as e:
        raise DatasetNotFoundError(name, str(root), LAYOUTS[name]) from e


def _to_batch(dataset, image_size: Optional[int], limit: Optional[int]) -> ImageBatch:
    data = torch.as_tensor(np.asarray(dataset.data))
    labels = torch.as_tensor(np.asarray(dataset.targets), dtype=torch.long)
    if limit is not None:
        data, labels = data[:limit], labels[:limit]
    if data.dim() == 3:
        images = data.unsqueeze(1).float() / 255.0
    else:
        images = data.permute(0, 3, 1, 2).float() / 255.0
    return ImageBatch(_resize(images, image_size), labels)


def read_folder_index(root: Path, channels: Optional[int] = None) -> ImageBatch:
    """
    Charge un jeu ``folder`` décrit par ``<root>/index.csv``.

    Raises:
        DatasetNotFoundError: index.csv absent
        CorruptedDatasetError: Colonnes manquantes, image illisible ou formes hétérogènes
    """
    root = Path(root)
    index_path = root / "index.csv"
    if not index_path.exists():
        raise DatasetNotFoundError("folder", str(root), LAYOUTS["folder"])
    try:
        index = pd.read_csv(index_path)
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as e:
        raise CorruptedDatasetError(str(index_path), str(e)) from e
    missing = {"path", "label"} - set(index.columns)
    if missing:
        raise CorruptedDatasetError(str(index_path), f"colonnes manquantes: {sorted(missing)}")

    mode = {None: ImageReadMode.UNCHANGED, 1: ImageReadMode.GRAY, 3: ImageReadMode.RGB}[channels]
    images = []
    for relative in index["path"]:
        path = root / str(relative)
        try:
            images.append(read_image(str(path), mode=mode).float() / 255.0)
        except (RuntimeError, OSError) as e:
            raise CorruptedDatasetError(str(path), str(e)) from e
    if not images:
        raise InsufficientDataError(0, 1)
    shapes = {tuple(image.shape) for image in images}
    if len(shapes) != 1:
        raise CorruptedDatasetError(str(index_path), f"formes d'images hétérogènes: {sorted(shapes)}")
    return ImageBatch(torch.stack(images), torch.tensor(index["label"].to_numpy(), dtype=torch.long))


def load_dataset(
    name: str,
    root: Optional[Path] = None,
    image_size: Optional[int] = None,
    seed: int = 0,
    test_fraction: float = 0.25,
    limit: Optional[int] = None,
) -> DatasetSplit:
    """
    Charge un jeu de données étiqueté et le découpe en entraînement / test.

    Args:
        name: ``digits``, ``mnist``, ``cifar10``, ``cifar100`` ou ``folder``
        root: Racine (``settings.dataset_root`` si None)
        image_size: Côté des images après redimensionnement (16 pour digits)
        seed: Graine du découpage stratifié
        test_fraction: Fraction de test (digits et folder)
        limit: Nombre maximal d'images par split (jeux torchvision)

    Raises:
        UnsupportedDatasetError: Identifiant inconnu
        DatasetNotFoundError: Fichiers absents (le message décrit le layout attendu)
    """
    if name not in SUPPORTED:
        raise UnsupportedDatasetError(name, list(SUPPORTED))
    root = Path(root) if root is not None else settings.dataset_root

    with PerformanceLogger(logger, f"load_dataset({name})"):
        if name == "digits":
            train, test = _load_digits(image_size or 16, test_fraction, seed)
            label_count = 10
        elif name == "folder":
            batch = read_folder_index(root)
            train, test = _stratified_split(
                _resize(batch.images, image_size), batch.labels, test_fraction, seed
            )
            label_count = int(batch.labels.max()) + 1
        else:
            train = _to_batch(_torchvision_split(name, root, True), image_size, limit)
            test = _to_batch(_torchvision_split(name, root, False), image_size, limit)
            label_count = 100 if name == "cifar100" else 10

    channels = train.image_shape[0]
    mean, std = NORMALIZATION.get(name, ((0.5,) * channels, (0.5,) * channels))
    split = DatasetSplit(name, train, test, label_count, mean, std)
    logger.info(f"Jeu de données chargé: {split.summary()}")
    return split


def _manifest_labels(manifest: dict[str, Any]) -> dict[str, Optional[int]]:
    """{nom d'image: étiquette} pour un manifeste de synthèse ou d'augmentation (None = filtrée)."""
    if "labels" in manifest:
        return {f"{i:06d}": int(label) for i, label in enumerate(manifest["labels"])}
    return {
        f"{item['source_id']:06d}_k{item['variant']}": (int(item["label"]) if item.get("mask", True) else None)
        for item in manifest.get("items", [])
    }


def read_image_set(path: Path, channels: int = 1) -> ImageBatch:
    """
    Charge un ensemble d'images référencé par un manifeste.

    ``path`` est soit un jeu ``folder`` (``index.csv``), soit un répertoire de
    round d'un cache (``synth_cache/round_0003``, ``aug_cache/round_0003``) ;
    pour un round d'augmentation, seules les variantes retenues sont gardées.

    Raises:
        DatasetNotFoundError: Ni index.csv ni manifest.json
        InsufficientDataError: Aucune image
    """
    path = Path(path)
    if (path / "index.csv").exists():
        return read_folder_index(path, channels)
    if not (path / RoundCache.MANIFEST).exists() or not path.name.startswith("round_"):
        raise DatasetNotFoundError("manifest", str(path), "index.csv, ou round_XXXX/manifest.json")

    images, manifest = RoundCache(path.parent).read_round(int(path.name.split("_")[1]), channels)
    labels = _manifest_labels(manifest)
    kept = [name for name in sorted(images) if labels.get(name) is not None]
    if not kept:
        raise InsufficientDataError(0, 1)
    logger.info(f"Ensemble d'images chargé: {len(kept)} images depuis {path}")
    return ImageBatch(
        torch.stack([images[name] for name in kept]),
        torch.tensor([labels[name] for name in kept], dtype=torch.long),
    )
