"""
Configuration déclarative d'une exécution.

Un fichier ``*.cfg`` (INI à sections, une par module) décrit entièrement une
exécution ; les options de la ligne de commande surchargent ses valeurs et la
configuration effective normalisée est recopiée dans chaque répertoire
d'exécution sous ``config.cfg``.

Exemple::

    [hyper]
    omega = 0.75
    augmentations_per_image = 3

    [schedule]
    rounds = 10

    [backend]
    kind = surrogate
"""
from __future__ import annotations

import configparser
from pathlib import Path
from typing import Any, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError

from config import settings
from distillation.orchestrator import Schedule
from synthesis.hyperparams import HyperParams
from utils.cache import atomic_write_text
from utils.exceptions import ConfigurationError, UnknownSweepParameterError
from utils.logger import get_logger


logger = get_logger(__name__)


class DataSection(BaseModel):
    """Jeu de données étiqueté (enseignant, évaluation, FID)."""

    model_config = ConfigDict(extra="forbid")

    dataset: Literal["digits", "mnist", "cifar10", "cifar100", "folder"] = "digits"
    root: Optional[str] = None
    image_size: int = Field(16, ge=4)
    test_fraction: float = Field(0.25, gt=0, lt=1)
    split_seed: int = Field(0, ge=0)
    limit: Optional[int] = Field(None, ge=1)


class ModelsSection(BaseModel):
    """Architectures de l'enseignant, de l'élève, du générateur et du discriminateur."""

    model_config = ConfigDict(extra="forbid")

    teacher_arch: Literal["cnn", "linear"] = "cnn"
    teacher_width: int = Field(32, ge=1)
    teacher_blocks: int = Field(3, ge=2)
    teacher_epochs: int = Field(30, ge=1)
    teacher_lr: float = Field(1e-3, gt=0)
    teacher_checkpoint: Optional[str] = None
    student_arch: Literal["cnn", "linear"] = "cnn"
    student_width: int = Field(16, ge=1)
    student_blocks: int = Field(2, ge=2)
    latent_dim: int = Field(64, ge=1)
    generator_channels: int = Field(32, ge=1)
    disc_hidden: int = Field(128, ge=1)
    disc_projection: int = Field(64, ge=1)
    autoencoder_latent: int = Field(32, ge=1)
    autoencoder_epochs: int = Field(20, ge=1)


class MemorySection(BaseModel):
    """Banque mémoire et vues positives du contraste."""

    model_config = ConfigDict(extra="forbid")

    capacity: int = Field(4096, ge=1)
    flip_p: float = Field(0.5, ge=0, le=1)
    pad: int = Field(4, ge=0)
    jitter: float = Field(0.1, ge=0, lt=1)
    include_positive: bool = False


class AugmentationSection(BaseModel):
    """Augmentation par diffusion et filtrage."""

    model_config = ConfigDict(extra="forbid")

    intensity: float = Field(0.3, ge=0)
    intensity_policy: Literal["adaptive", "constant"] = "adaptive"
    embedding: Literal["teacher", "discriminator"] = "teacher"
    ablate: Literal["none", "no-diffusion", "no-filter", "both"] = "none"


class BackendSection(BaseModel):
    """Sélection du backend de diffusion."""

    model_config = ConfigDict(extra="forbid")

    kind: Literal["surrogate", "remote"] = "surrogate"
    endpoint: Optional[str] = None
    checkpoint: Optional[str] = None
    elastic_alpha: float = Field(1.5, ge=0)
    elastic_sigma: float = Field(2.0, gt=0)
    jitter: float = Field(0.1, ge=0)


class RunSection(BaseModel):
    """Paramètres généraux de l'exécution."""

    model_config = ConfigDict(extra="forbid")

    seed: int = Field(0, ge=0)
    output_dir: str = str(settings.OUTPUT_DIR / "runs")
    write_caches: bool = True
    progress: bool = False


class RunConfig(BaseModel):
    """
    Configuration complète d'une exécution, une section par module.

    Les clés inconnues sont refusées à tous les niveaux.
    """

    model_config = ConfigDict(extra="forbid")

    data: DataSection = DataSection()
    models: ModelsSection = ModelsSection()
    hyper: HyperParams = HyperParams()
    schedule: Schedule = Schedule()
    memory: MemorySection = MemorySection()
    augmentation: AugmentationSection = AugmentationSection()
    backend: BackendSection = BackendSection()
    run: RunSection = RunSection()


SECTIONS: tuple[str, ...] = tuple(RunConfig.model_fields)


def _section_fields() -> dict[str, tuple[str, ...]]:
    return {
        name: tuple(RunConfig.model_fields[name].annotation.model_fields)
        for name in SECTIONS
    }


def _scalar_parameters() -> list[str]:
    dotted = [f"{section}.{key}" for section, keys in _section_fields().items() for key in keys]
    bare: dict[str, int] = {}
    for name in dotted:
        key = name.split(".", 1)[1]
        bare[key] = bare.get(key, 0) + 1
    return dotted + sorted(key for key, count in bare.items() if count == 1)


KNOWN_SWEEP_PARAMETERS: tuple[str, ...] = tuple(_scalar_parameters())


def resolve_parameter(name: str) -> tuple[str, str]:
    """
    Traduit un nom de paramètre (``omega`` ou ``hyper.omega``) en (section, clé).

    Raises:
        UnknownSweepParameterError: Nom inconnu ou ambigu
    """
    if name not in KNOWN_SWEEP_PARAMETERS:
        raise UnknownSweepParameterError(name, list(KNOWN_SWEEP_PARAMETERS))
    if "." in name:
        section, key = name.split(".", 1)
        return section, key
    for section, keys in _section_fields().items():
        if name in keys:
            return section, name
    raise UnknownSweepParameterError(name, list(KNOWN_SWEEP_PARAMETERS))


def _validate(payload: dict[str, Any], source: str) -> RunConfig:
    try:
        return RunConfig.model_validate(payload)
    except ValidationError as e:
        problems = [
            f"{'.'.join(str(part) for part in error['loc'])}: {error['msg']}"
            for error in e.errors()
        ]
        raise ConfigurationError(
            f"Configuration invalide ({source})",
            {"errors": problems}
        ) from e


def _parse_raw(raw: str) -> Optional[str]:
    value = raw.strip()
    return None if value == "" else value


def parse_config_text(text: str, source: str = "<texte>") -> RunConfig:
    """
    Analyse le texte d'un fichier de configuration.

    Raises:
        ConfigurationError: Syntaxe INI invalide, section/clé inconnue ou valeur hors domaine
    """
    parser = configparser.ConfigParser(interpolation=None, default_section="__defaults__")
    try:
        parser.read_string(text, source=source)
    except configparser.Error as e:
        raise ConfigurationError(f"Fichier de configuration illisible ({source})",
                                 {"error": str(e)}) from e

    payload: dict[str, dict[str, Any]] = {}
    for section in parser.sections():
        payload[section] = {key: _parse_raw(raw) for key, raw in parser.items(section)}
    return _validate(payload, source)


def load_config(path: Optional[Path]) -> RunConfig:
    """
    Charge une configuration ; sans fichier, renvoie les valeurs par défaut.

    Raises:
        ConfigurationError: Fichier absent ou invalide
    """
    if path is None:
        logger.info("Aucun fichier de configuration: valeurs par défaut")
        return RunConfig()
    path = Path(path)
    if not path.exists():
        raise ConfigurationError(f"Fichier de configuration introuvable: {path}", {"path": str(path)})
    config = parse_config_text(path.read_text(encoding="utf-8"), source=str(path))
    logger.info(f"Configuration chargée: {path}")
    return config


def _format_value(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def echo_config(config: RunConfig) -> str:
    """
    Forme normalisée (texte INI) d'une configuration.

    Toutes les clés sont écrites dans l'ordre de déclaration ; relire puis
    réécrire une forme normalisée donne exactement le même texte.
    """
    lines: list[str] = []
    for section in SECTIONS:
        lines.append(f"[{section}]")
        values = getattr(config, section).model_dump()
        for key, value in values.items():
            formatted = _format_value(value)
            lines.append(f"{key} = {formatted}" if formatted else f"{key} =")
        lines.append("")
    return "\n".join(lines)


def write_config(config: RunConfig, path: Path) -> Path:
    """Écrit la forme normalisée d'une configuration."""
    atomic_write_text(Path(path), echo_config(config))
    return Path(path)


def with_overrides(config: RunConfig, overrides: dict[str, Any]) -> RunConfig:
    """
    Nouvelle configuration où les paramètres ``overrides`` sont remplacés.

    Les valeurs None sont ignorées (option de ligne de commande absente) ;
    les chaînes sont converties par la validation pydantic.

    Raises:
        UnknownSweepParameterError: Paramètre inconnu
        ConfigurationError: Valeur hors domaine
    """
    payload = config.model_dump()
    for name, value in overrides.items():
        if value is None:
            continue
        section, key = resolve_parameter(name)
        payload[section][key] = value
    return _validate(payload, "surcharges")
