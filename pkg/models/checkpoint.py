"""
Persistance des modèles : un répertoire par modèle avec ``weights.pt`` et
``metadata.json`` (format versionné), écrit de façon atomique.

Le gestionnaire ``CheckpointManager`` applique la politique de rétention
« meilleur + dernier » pendant une distillation.
"""
from __future__ import annotations

import json
import pickle
from pathlib import Path
from typing import Any, Literal, Optional

import torch
from torch import nn
from pydantic import BaseModel, ConfigDict, ValidationError

from models.contracts import bn_layer_count
from models.networks import (
    ConvAutoencoder,
    DiscriminatorHead,
    Generator,
    build_classifier,
)
from utils.cache import atomic_directory, atomic_write_json
from utils.exceptions import CheckpointFormatError
from utils.logger import get_logger


logger = get_logger(__name__)

FORMAT_VERSION = 1
WEIGHTS_FILE = "weights.pt"
METADATA_FILE = "metadata.json"

ModelKind = Literal["classifier", "generator", "discriminator", "autoencoder"]


class CheckpointMetadata(BaseModel):
    """Métadonnées d'un checkpoint (enregistrées dans metadata.json)."""

    model_config = ConfigDict(extra="forbid")

    format_version: int = FORMAT_VERSION
    kind: ModelKind
    architecture: str
    init_kwargs: dict[str, Any]
    label_count: Optional[int] = None
    feature_dim: Optional[int] = None
    bn_layer_count: int = 0
    pixel_range: tuple[float, float] = (0.0, 1.0)
    extra: dict[str, Any] = {}


def _describe(model: nn.Module, kind: ModelKind, extra: Optional[dict]) -> CheckpointMetadata:
    if kind == "classifier":
        architecture = model.architecture
    else:
        architecture = type(model).__name__
    return CheckpointMetadata(
        kind=kind,
        architecture=architecture,
        init_kwargs=model.config(),
        label_count=getattr(model, "label_count", None),
        feature_dim=getattr(model, "feature_dim", None),
        bn_layer_count=bn_layer_count(model),
        extra=extra or {},
    )


def save_checkpoint(
    model: nn.Module,
    directory: Path,
    kind: ModelKind = "classifier",
    extra: Optional[dict[str, Any]] = None,
) -> Path:
    """
    Enregistre un modèle (poids + métadonnées) dans ``directory``.

    Args:
        model: Modèle exposant ``config()``
        directory: Répertoire cible (remplacé atomiquement)
        kind: Nature du modèle
        extra: Métadonnées libres (précision, round, ...)

    Returns:
        Path: Répertoire du checkpoint
    """
    metadata = _describe(model, kind, extra)
    directory = Path(directory)
    with atomic_directory(directory) as tmp:
        torch.save(model.state_dict(), tmp / WEIGHTS_FILE)
        (tmp / METADATA_FILE).write_text(
            metadata.model_dump_json(indent=2), encoding="utf-8"
        )
    logger.debug(f"Checkpoint {kind} enregistré: {directory}")
    return directory


def read_metadata(directory: Path) -> CheckpointMetadata:
    """
    Lit et valide les métadonnées d'un checkpoint.

    Raises:
        CheckpointFormatError: Fichier absent, JSON invalide ou version inconnue
    """
    path = Path(directory) / METADATA_FILE
    if not path.exists():
        raise CheckpointFormatError(str(directory), f"{METADATA_FILE} absent")
    try:
        metadata = CheckpointMetadata.model_validate(json.loads(path.read_text(encoding="utf-8")))
    except (json.JSONDecodeError, ValidationError) as e:
        raise CheckpointFormatError(str(directory), f"métadonnées invalides: {e}") from e
    if metadata.format_version != FORMAT_VERSION:
        raise CheckpointFormatError(
            str(directory),
            f"version {metadata.format_version} non supportée (attendu {FORMAT_VERSION})",
        )
    return metadata


def _instantiate(metadata: CheckpointMetadata) -> nn.Module:
    kwargs = dict(metadata.init_kwargs)
    if metadata.kind == "classifier":
        return build_classifier(metadata.architecture, **kwargs)
    if metadata.kind == "generator":
        kwargs["image_shape"] = tuple(kwargs["image_shape"])
        return Generator(**kwargs)
    if metadata.kind == "discriminator":
        return DiscriminatorHead(**kwargs)
    return ConvAutoencoder(**kwargs)


def load_checkpoint(
    directory: Path,
    expected_kind: Optional[ModelKind] = None,
    map_location: str | torch.device = "cpu",
) -> tuple[nn.Module, CheckpointMetadata]:
    """
    Recharge un modèle et ses métadonnées.

    Raises:
        CheckpointFormatError: Checkpoint corrompu, incomplet ou du mauvais type
    """
    directory = Path(directory)
    metadata = read_metadata(directory)
    if expected_kind is not None and metadata.kind != expected_kind:
        raise CheckpointFormatError(
            str(directory), f"type '{metadata.kind}' au lieu de '{expected_kind}'"
        )
    weights = directory / WEIGHTS_FILE
    if not weights.exists():
        raise CheckpointFormatError(str(directory), f"{WEIGHTS_FILE} absent")
    try:
        model = _instantiate(metadata)
        state = torch.load(weights, map_location=map_location, weights_only=True)
        model.load_state_dict(state)
    except (RuntimeError, ValueError, TypeError, KeyError, EOFError, pickle.UnpicklingError) as e:
        raise CheckpointFormatError(str(directory), f"poids illisibles: {e}") from e
    logger.info(f"Checkpoint {metadata.kind} chargé: {directory} ({metadata.architecture})")
    return model, metadata


class CheckpointManager:
    """
    Rétention « meilleur + dernier » des instantanés d'une distillation.

    Layout::

        checkpoints/
            last/{student,generator,discriminator}/ + memory_bank.pt + state.json
            best/...
    """

    def __init__(self, root: Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self.best_score: Optional[float] = None

    def _write(self, slot: str, models: dict[str, tuple[nn.Module, ModelKind]],
               bank: Any, state: dict[str, Any]) -> Path:
        target = self.root / slot
        with atomic_directory(target) as tmp:
            for name, (model, kind) in models.items():
                save_checkpoint(model, tmp / name, kind=kind, extra=state)
            if bank is not None:
                bank.save(tmp / "memory_bank.pt")
            atomic_write_json(tmp / "state.json", state)
        return target

    def save(
        self,
        round_index: int,
        models: dict[str, tuple[nn.Module, ModelKind]],
        bank: Any = None,
        score: Optional[float] = None,
    ) -> dict[str, Path]:
        """
        Enregistre l'instantané ``last`` et, si le score s'améliore, ``best``.

        Returns:
            dict: {"last": chemin, "best": chemin éventuel}
        """
        state = {"round": round_index, "score": score}
        written = {"last": self._write("last", models, bank, state)}
        if score is not None and (self.best_score is None or score > self.best_score):
            self.best_score = score
            written["best"] = self._write("best", models, bank, state)
            logger.info(f"Nouveau meilleur checkpoint au round {round_index}: {score:.4f}")
        return written

    def path(self, slot: str, name: str) -> Path:
        return self.root / slot / name
