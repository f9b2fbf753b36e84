"""
Pipeline d'augmentation par diffusion d'un lot synthétique.

Pour chaque image source : encodage en latent, K variantes par le backend,
similarité cosinus source/variante, masque de filtrage, pertes
auto-supervisées de l'élève. Les variantes filtrées ne quittent jamais ce
module ; une source dont toutes les variantes sont filtrées est elle-même
utilisée pour la distillation.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable, Literal, Optional

import torch

from augmentation.encoder import ImageEncoder
from augmentation.filtering import filter_mask, self_supervised_loss, similarities
from augmentation.policies import ConstantIntensityPolicy, IntensityPolicy
from models.contracts import DiffusionBackend, ImageBatch, penultimate_embedding
from synthesis.hyperparams import HyperParams
from utils.cache import RoundCache
from utils.exceptions import BackendUnavailableError, EmptyBatchError, InvalidThresholdError
from utils.logger import get_logger, PerformanceLogger
from utils.seeding import derive_seeds


logger = get_logger(__name__)

Ablation = Literal["none", "no-filter", "no-diffusion", "both"]
ABLATIONS: tuple[str, ...] = ("none", "no-filter", "no-diffusion", "both")


@dataclass
class AugmentationRecord:
    """
    Résultat de l'augmentation d'une image source.

    Attributes:
        source_id: Index de la source dans le lot du round
        source: Image source C×H×W
        label: Étiquette de la source (portée par toutes ses variantes)
        latent: Latent f_syn de la source
        variants: Variantes K×C×H×W (K = 0 sans diffusion)
        seeds: Graine de chaque variante
        similarities: s_k ∈ [-1, 1]
        mask: M_k = (s_k > ω)
        self_losses: Perte auto-supervisée de l'élève sur chaque variante
        intensity: Intensité utilisée par le backend
    """
    source_id: int
    source: torch.Tensor
    label: int
    latent: Optional[torch.Tensor] = None
    variants: Optional[torch.Tensor] = None
    seeds: list[int] = field(default_factory=list)
    similarities: list[float] = field(default_factory=list)
    mask: list[bool] = field(default_factory=list)
    self_losses: list[float] = field(default_factory=list)
    intensity: float = 0.0
    round: int = 0

    @property
    def variant_count(self) -> int:
        return 0 if self.variants is None else self.variants.shape[0]

    @property
    def retained(self) -> torch.Tensor:
        """Variantes retenues (R×C×H×W, R ∈ [0, K])."""
        if self.variants is None or not self.mask:
            return self.source.new_empty((0, *self.source.shape))
        return self.variants[torch.tensor(self.mask, dtype=torch.bool)]

    @property
    def retained_count(self) -> int:
        return sum(self.mask)

    @property
    def used_fallback(self) -> bool:
        return self.retained_count == 0

    def to_dict(self) -> dict[str, Any]:
        return {
            "source_id": self.source_id,
            "label": self.label,
            "round": self.round,
            "intensity": self.intensity,
            "seeds": self.seeds,
            "similarities": self.similarities,
            "mask": self.mask,
            "self_losses": self.self_losses,
        }


def _source_only(batch: ImageBatch, round_index: int) -> list[AugmentationRecord]:
    return [
        AugmentationRecord(i, batch.images[i], int(batch.labels[i]), round=round_index)
        for i in range(len(batch))
    ]


def augment_pipeline(
    synth_batch: ImageBatch,
    student: torch.nn.Module,
    backend: DiffusionBackend,
    hp: HyperParams,
    *,
    encoder: ImageEncoder,
    teacher: Optional[torch.nn.Module] = None,
    embedder: Optional[Callable[[torch.Tensor], torch.Tensor]] = None,
    intensity_policy: Optional[IntensityPolicy] = None,
    round_index: int = 0,
    seed: int = 0,
    ablate: Ablation = "none",
    cache: Optional[RoundCache] = None,
) -> list[AugmentationRecord]:
    """
    Augmente, note et filtre toutes les images d'un lot synthétique.

    Args:
        synth_batch: Lot synthétique du round (non vide)
        student: Élève, utilisé pour les pertes auto-supervisées
        backend: Backend de diffusion (substitut ou distant)
        hp: Hyperparamètres (K, ω)
        encoder: Encodeur image -> latent
        teacher: Enseignant (plongement du filtre si ``embedder`` est None)
        embedder: Fonction de plongement du filtre
        intensity_policy: Intensité par classe (constante 0.3 par défaut)
        round_index, seed: Dérivation des graines des variantes
        ablate: "none", "no-filter" (tout retenir), "no-diffusion" ou "both" (sources seules ;
            ``both`` retire aussi le contraste de la synthèse, voir ``run_dda``)
        cache: Cache disque des variantes et du masque

    Returns:
        list[AugmentationRecord]: Un enregistrement par source, dans l'ordre du lot

    Raises:
        EmptyBatchError: Lot vide
        InvalidThresholdError: ω hors de [-1, 1]
    """
    if len(synth_batch) == 0:
        raise EmptyBatchError("lot synthétique à augmenter")
    if not -1.0 <= hp.omega <= 1.0:
        raise InvalidThresholdError(hp.omega)
    if ablate not in ABLATIONS:
        raise ValueError(f"Ablation inconnue: {ablate} (connues: {ABLATIONS})")
    batch = synth_batch.detach()

    if ablate in ("no-diffusion", "both"):
        logger.info(f"Round {round_index}: diffusion désactivée, sources seules")
        return _source_only(batch, round_index)

    if embedder is None:
        if teacher is None:
            raise ValueError("Un enseignant ou une fonction de plongement est requis")
        embedder = lambda images: penultimate_embedding(teacher, images)  # noqa: E731
    policy = intensity_policy or ConstantIntensityPolicy()
    count = hp.augmentations_per_image

    latents = encoder.encode(batch.images)
    labels = batch.labels.tolist()
    seeds = [derive_seeds(count, seed, round_index, i) for i in range(len(batch))]
    intensities = [policy.intensity(label) for label in labels]
    requests = [
        (latents[i], batch.images[i], seeds[i], intensities[i]) for i in range(len(batch))
    ]

    with PerformanceLogger(logger, f"augment_pipeline(round={round_index}, K={count})"):
        try:
            variant_sets = backend.generate_many(requests)
        except BackendUnavailableError as e:
            logger.warning(f"Backend de diffusion indisponible, round sans augmentation: {e}")
            return _source_only(batch, round_index)

        was_training = student.training
        student.eval()
        records = []
        try:
            with torch.no_grad():
                for i, variants in enumerate(variant_sets):
                    sims = similarities(embedder, batch.images[i], variants)
                    if ablate == "no-filter":
                        mask = [True] * variants.shape[0]
                    else:
                        mask = filter_mask(sims, hp.omega).tolist()
                    losses = self_supervised_loss(student, variants, labels[i], reduction="none")
                    records.append(AugmentationRecord(
                        source_id=i,
                        source=batch.images[i],
                        label=labels[i],
                        latent=latents[i],
                        variants=variants.detach().cpu(),
                        seeds=seeds[i],
                        similarities=sims.tolist(),
                        mask=mask,
                        self_losses=losses.cpu().tolist(),
                        intensity=intensities[i],
                        round=round_index,
                    ))
        finally:
            student.train(was_training)

    retained = sum(r.retained_count for r in records)
    fallbacks = sum(r.used_fallback for r in records)
    logger.info(
        f"Round {round_index}: {retained}/{len(records) * count} variantes retenues (ω={hp.omega}), "
        f"{fallbacks} source(s) sans variante retenue"
    )
    if fallbacks:
        logger.warning(f"{fallbacks} source(s) entièrement filtrée(s): la source est utilisée à la place")

    if cache is not None:
        write_augmentation_cache(cache, round_index, records)
    return records


def write_augmentation_cache(cache: RoundCache, round_index: int,
                             records: list[AugmentationRecord]):
    """
    Écrit les variantes retenues du round.

    Les variantes filtrées ne sont pas écrites : le manifeste n'en garde que
    la similarité et la graine (``rejected``), pour les profils de similarité.
    """
    images: dict[str, torch.Tensor] = {}
    items, rejected = [], []
    for record in records:
        for k in range(record.variant_count):
            entry = {
                "source_id": record.source_id,
                "variant": k,
                "label": record.label,
                "seed": record.seeds[k],
                "similarity": record.similarities[k],
                "self_loss": record.self_losses[k],
            }
            if not record.mask[k]:
                rejected.append(entry)
                continue
            items.append({**entry, "mask": True})
            images[f"{record.source_id:06d}_k{k}"] = record.variants[k]
    cache.write_round(round_index, images, {"round": round_index, "items": items, "rejected": rejected})


def training_batch(
    records: list[AugmentationRecord],
    include_sources: bool = True,
) -> tuple[ImageBatch, torch.Tensor]:
    """
    Lot d'entraînement issu des enregistrements.

    Une source sans variante retenue est toujours incluse.

    Returns:
        tuple: (lot, masque booléen « est une variante »)
    """
    images, labels, is_variant = [], [], []
    for record in records:
        retained = record.retained
        if include_sources or retained.shape[0] == 0:
            images.append(record.source.unsqueeze(0))
            labels.append(record.label)
            is_variant.append(False)
        if retained.shape[0]:
            images.append(retained)
            labels.extend([record.label] * retained.shape[0])
            is_variant.extend([True] * retained.shape[0])
    if not images:
        raise EmptyBatchError("aucun enregistrement d'augmentation")
    return (
        ImageBatch(torch.cat(images), torch.tensor(labels, dtype=torch.long)),
        torch.tensor(is_variant, dtype=torch.bool),
    )
