"""
Moteur de synthèse par inversion de modèle.

À chaque round T, les caractéristiques initiales f_ini (redessinées selon
N(0, 1)) et les poids partagés θ_w du générateur sont optimisés conjointement
pour minimiser l'objectif de synthèse ; un seul lot est produit par round.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Optional

import torch

from models.contracts import (
    ImageBatch,
    freeze,
    model_device,
    parameter_checksum,
    running_bn_statistics,
)
from models.networks import DiscriminatorHead, Generator, make_projector
from memory_bank.bank import MemoryBank
from memory_bank.views import AugmentationPolicy
from synthesis.hyperparams import HyperParams
from synthesis.losses import synthesis_objective
from utils.cache import RoundCache
from utils.exceptions import (
    InvalidHyperParameterError,
    SynthesisDivergedError,
    TeacherMutatedError,
)
from utils.logger import get_logger, PerformanceLogger
from utils.seeding import torch_generator


logger = get_logger(__name__)


@dataclass
class SynthesisRound:
    """
    Paramètres d'un round de synthèse.

    Attributes:
        round_index: Index T du round (>= 0)
        batch_size: Nombre d'images B synthétisées
        label_count: Nombre de classes C
        step_count: Nombre de mises à jour de (f_ini, θ_w)
        lr: Taux d'apprentissage de l'optimiseur adaptatif
        seed: Graine du run (combinée avec l'index du round)
        targets: Étiquettes imposées (tirage équilibré sinon)
    """
    round_index: int
    batch_size: int
    label_count: int
    step_count: int = 500
    lr: float = 1e-3
    seed: int = 0
    targets: Optional[torch.Tensor] = None

    def __post_init__(self):
        if self.round_index < 0:
            raise InvalidHyperParameterError("round_index", self.round_index, ">= 0")
        if self.step_count < 1:
            raise InvalidHyperParameterError("step_count", self.step_count, ">= 1")
        if self.batch_size < 2:
            raise InvalidHyperParameterError("batch_size", self.batch_size, ">= 2")
        if self.lr <= 0:
            raise InvalidHyperParameterError("lr", self.lr, "> 0")


@dataclass
class SynthesisResult:
    """Résultat d'un round : meilleur lot rencontré et trajectoire de l'objectif."""
    batch: ImageBatch
    components: dict[str, float]
    best_step: int
    history: list[dict[str, float]] = field(default_factory=list)

    @property
    def initial_objective(self) -> float:
        return self.history[0]["objective"] if self.history else math.nan

    def to_dict(self) -> dict[str, Any]:
        return {
            "size": len(self.batch),
            "labels": self.batch.labels.tolist(),
            "components": self.components,
            "best_step": self.best_step,
            "initial_objective": self.initial_objective,
        }


def balanced_labels(
    batch_size: int,
    label_count: int,
    generator: Optional[torch.Generator] = None,
) -> torch.Tensor:
    """
    Étiquettes équilibrées : chaque classe apparaît ⌊B/C⌋ ou ⌈B/C⌉ fois,
    dans un ordre aléatoire.
    """
    classes = torch.randperm(label_count, generator=generator)
    labels = classes[torch.arange(batch_size) % label_count]
    return labels[torch.randperm(batch_size, generator=generator)]


def _finite(components: dict[str, float]) -> bool:
    return all(math.isfinite(v) for v in components.values())


def run_synthesis_round(
    gen: Generator,
    teacher: torch.nn.Module,
    disc: DiscriminatorHead,
    bank: Optional[MemoryBank],
    hp: HyperParams,
    round_cfg: SynthesisRound,
    *,
    policy: Optional[AugmentationPolicy] = None,
    cache: Optional[RoundCache] = None,
    max_negatives: int = 64,
    include_positive: bool = False,
) -> SynthesisResult:
    """
    Exécute un round de synthèse et renvoie le lot de plus faible objectif.

    L'enseignant est gelé et n'est jamais modifié (vérifié par somme de
    contrôle). θ_w et les poids du discriminateur persistent d'un round à
    l'autre ; f_ini est redessiné à chaque appel.

    Args:
        gen: Générateur (poids partagés θ_w)
        teacher: Enseignant pré-entraîné
        disc: Tête de projection du discriminateur
        bank: Banque mémoire (peut être vide au round 0)
        hp: Hyperparamètres des pertes
        round_cfg: Paramètres du round
        cache: Cache disque où déposer le lot (optionnel)

    Returns:
        SynthesisResult: Lot détaché (CPU), composantes de l'objectif, historique

    Raises:
        SynthesisDivergedError: Objectif non fini à un pas donné
        TeacherMutatedError: Paramètres de l'enseignant modifiés
    """
    freeze(teacher)
    checksum = parameter_checksum(teacher)
    device = model_device(gen)
    rng = torch_generator(round_cfg.seed, round_cfg.round_index)

    targets = round_cfg.targets
    if targets is None:
        targets = balanced_labels(round_cfg.batch_size, round_cfg.label_count, rng)
    targets = targets.to(device)

    latent = torch.randn(round_cfg.batch_size, gen.latent_dim, generator=rng).to(device)
    latent.requires_grad_(True)
    running = running_bn_statistics(teacher)
    projector = make_projector(disc, teacher)
    optimizer = torch.optim.Adam(
        [latent, *gen.parameters(), *disc.parameters()],
        lr=round_cfg.lr,
        betas=(0.5, 0.999),
    )
    gen.train()
    disc.train()

    def evaluate(images: torch.Tensor):
        return synthesis_objective(
            ImageBatch(images, targets), bank, teacher, projector, hp,
            running=running, policy=policy, generator=rng,
            max_negatives=max_negatives, include_positive=include_positive,
        )

    history: list[dict[str, float]] = []
    best_images: Optional[torch.Tensor] = None
    best_components: dict[str, float] = {}
    best_step = -1

    def track(step: int, images: torch.Tensor, components: dict[str, float]):
        nonlocal best_images, best_components, best_step
        if not _finite(components):
            raise SynthesisDivergedError(round_cfg.round_index, step, components)
        history.append(components)
        if best_images is None or components["objective"] < best_components["objective"]:
            best_images = images.detach().cpu().clone()
            best_components = components
            best_step = step

    with PerformanceLogger(logger, f"synthesis_round({round_cfg.round_index})"):
        for step in range(round_cfg.step_count):
            optimizer.zero_grad()
            images = gen(latent)
            loss = evaluate(images)
            track(step, images, loss.components())
            loss.total.backward()
            optimizer.step()

        with torch.no_grad():
            images = gen(latent)
            track(round_cfg.step_count, images, evaluate(images).components())

    after = parameter_checksum(teacher)
    if after != checksum:
        raise TeacherMutatedError(checksum, after)

    batch = ImageBatch(best_images, targets.detach().cpu().clone())
    result = SynthesisResult(batch, best_components, best_step, history)
    logger.info(
        f"Round {round_cfg.round_index}: objectif {result.initial_objective:.4f} -> "
        f"{best_components['objective']:.4f} (pas {best_step}/{round_cfg.step_count})"
    )

    if cache is not None:
        cache.write_round(
            round_cfg.round_index,
            {f"{i:06d}": image for i, image in enumerate(batch.images)},
            {
                "round": round_cfg.round_index,
                "seed": round_cfg.seed,
                "labels": batch.labels.tolist(),
                "components": best_components,
                "best_step": best_step,
            },
        )
    return result
