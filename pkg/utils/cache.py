"""
Module de cache disque des rounds de synthèse et d'augmentation.

Chaque round produit un répertoire d'images PNG (sans perte) accompagné d'un
``manifest.json``. Toutes les écritures passent par un fichier ou un
répertoire temporaire renommé ensuite, ce qui permet à plusieurs processus de
balayage de partager un cache sans jamais lire un état partiel.
"""
import json
import os
import shutil
import tempfile
from contextlib import contextmanager
from pathlib import Path
from typing import Any, Iterator, Optional

import torch
from torchvision.utils import save_image
from torchvision.io import read_image, ImageReadMode

from utils.logger import get_logger


logger = get_logger(__name__)


def atomic_write_bytes(path: Path, data: bytes):
    """Écrit ``data`` dans ``path`` via un fichier temporaire renommé."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "wb") as handle:
            handle.write(data)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


def atomic_write_text(path: Path, text: str):
    """Version texte (UTF-8) de :func:`atomic_write_bytes`."""
    atomic_write_bytes(path, text.encode("utf-8"))


def atomic_write_json(path: Path, payload: Any):
    """Sérialise ``payload`` en JSON indenté de manière atomique."""
    atomic_write_text(path, json.dumps(payload, indent=2, sort_keys=True, default=str))


@contextmanager
def atomic_directory(target: Path) -> Iterator[Path]:
    """
    Fournit un répertoire temporaire qui remplace ``target`` à la sortie.

    Example:
        >>> with atomic_directory(run_dir / "checkpoints" / "last") as tmp:
        ...     torch.save(state, tmp / "weights.pt")
    """
    target = Path(target)
    target.parent.mkdir(parents=True, exist_ok=True)
    tmp = Path(tempfile.mkdtemp(dir=target.parent, prefix=f".{target.name}."))
    try:
        yield tmp
        if target.exists():
            trash = target.parent / f".{target.name}.old"
            shutil.rmtree(trash, ignore_errors=True)
            os.replace(target, trash)
            os.replace(tmp, target)
            shutil.rmtree(trash, ignore_errors=True)
        else:
            os.replace(tmp, target)
    except BaseException:
        shutil.rmtree(tmp, ignore_errors=True)
        raise


class RoundCache:
    """
    Cache disque d'images par round.

    Layout::

        <root>/round_0003/
            manifest.json
            000012_src.png
            000012_k1.png
            ...

    Example:
        >>> cache = RoundCache(run_dir / "aug_cache")
        >>> cache.write_round(3, {"000012_k1": image}, {"round": 3, "items": [...]})
        >>> images, manifest = cache.read_round(3)
    """

    MANIFEST = "manifest.json"

    def __init__(self, root: Path):
        """
        Args:
            root: Répertoire racine du cache (synth_cache/ ou aug_cache/)
        """
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    def round_dir(self, round_index: int) -> Path:
        """Répertoire d'un round donné."""
        return self.root / f"round_{round_index:04d}"

    def write_round(
        self,
        round_index: int,
        images: dict[str, torch.Tensor],
        manifest: dict[str, Any]
    ) -> Path:
        """
        Écrit les images (C×H×W dans [0,1]) et le manifeste d'un round.

        Args:
            round_index: Index du round
            images: {nom_fichier_sans_extension: image}
            manifest: Métadonnées sérialisables en JSON

        Returns:
            Path: Répertoire du round
        """
        target = self.round_dir(round_index)
        with atomic_directory(target) as tmp:
            for name, image in images.items():
                save_image(image.detach().cpu().clamp(0, 1), tmp / f"{name}.png")
            (tmp / self.MANIFEST).write_text(
                json.dumps(manifest, indent=2, sort_keys=True, default=str),
                encoding="utf-8"
            )
        logger.debug(f"Round {round_index} mis en cache: {len(images)} images -> {target}")
        return target

    def read_manifest(self, round_index: int) -> Optional[dict[str, Any]]:
        """Lit le manifeste d'un round, ou None s'il n'existe pas."""
        path = self.round_dir(round_index) / self.MANIFEST
        if not path.exists():
            return None
        return json.loads(path.read_text(encoding="utf-8"))

    def read_round(
        self,
        round_index: int,
        channels: int = 1
    ) -> tuple[dict[str, torch.Tensor], dict[str, Any]]:
        """
        Relit les images et le manifeste d'un round.

        Args:
            round_index: Index du round
            channels: 1 (niveaux de gris) ou 3 (RGB)

        Returns:
            tuple: ({nom: image float dans [0,1]}, manifeste)
        """
        manifest = self.read_manifest(round_index)
        if manifest is None:
            return {}, {}
        mode = ImageReadMode.GRAY if channels == 1 else ImageReadMode.RGB
        images = {
            path.stem: read_image(str(path), mode=mode).float() / 255.0
            for path in sorted(self.round_dir(round_index).glob("*.png"))
        }
        return images, manifest

    def rounds(self) -> list[int]:
        """Liste les rounds présents dans le cache."""
        return sorted(
            int(p.name.split("_")[1])
            for p in self.root.glob("round_*")
            if (p / self.MANIFEST).exists()
        )
