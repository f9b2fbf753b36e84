"""
Orchestration complète d'une distillation sans données.

Pour chaque round : synthèse d'un lot, stockage dans la banque mémoire,
augmentation par diffusion et filtrage, puis E époques d'entraînement de
l'élève sur l'ensemble cumulé des sources et variantes retenues.
"""
from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass, field
from typing import Any, Callable, Optional

import torch
from pydantic import BaseModel, ConfigDict, Field

from augmentation.encoder import ImageEncoder
from augmentation.pipeline import Ablation, AugmentationRecord, augment_pipeline, training_batch
from augmentation.policies import IntensityPolicy
from distillation.trainer import DistillState, EpochMetrics, make_distill_state, train_student_epoch
from evaluation.metrics import accuracy
from memory_bank.bank import MemoryBank
from memory_bank.views import AugmentationPolicy
from models.checkpoint import CheckpointManager
from models.contracts import DiffusionBackend, ImageBatch, freeze, parameter_checksum
from models.networks import DiscriminatorHead, Generator
from synthesis.hyperparams import HyperParams
from synthesis.synthesizer import SynthesisRound, run_synthesis_round
from utils.cache import RoundCache
from utils.exceptions import PipelineException, TeacherMutatedError
from utils.logger import get_logger, PerformanceLogger
from utils.seeding import torch_generator


logger = get_logger(__name__)

MetricsSink = Callable[[dict[str, Any]], None]


class Schedule(BaseModel):
    """
    Calendrier d'une distillation.

    Attributes:
        rounds: Nombre de rounds T (0 = rien à faire)
        epochs_per_round: Époques E de l'élève après chaque round
        synthesis_steps: Pas d'optimisation de (f_ini, θ_w) par round
        synthetic_batch_size: Images B synthétisées par round
        train_batch_size: Taille des lots d'entraînement de l'élève
        include_sources: Entraîner aussi sur les sources (pas seulement leurs variantes)
        max_negatives: Négatifs tirés de la banque pour la perte contrastive
    """

    model_config = ConfigDict(extra="forbid")

    rounds: int = Field(5, ge=0)
    epochs_per_round: int = Field(5, ge=1)
    synthesis_steps: int = Field(100, ge=1)
    synthetic_batch_size: int = Field(64, ge=2)
    train_batch_size: int = Field(64, ge=1)
    include_sources: bool = True
    max_negatives: int = Field(64, ge=1)

    @property
    def total_epochs(self) -> int:
        return self.rounds * self.epochs_per_round


@dataclass
class RoundMetrics:
    """Métriques d'un round."""
    round: int
    synthesis: dict[str, float]
    retained_fraction: float
    fallback_sources: int
    mean_similarity: float
    pool_size: int
    epochs: list[dict[str, float]] = field(default_factory=list)
    accuracy: Optional[float] = None
    intensity: dict[str, float] = field(default_factory=dict)


@dataclass
class RunReport:
    """
    Rapport d'exécution : trajectoire de précision, fractions retenues,
    courbes de pertes et, en cas de faute, l'étape en cause.
    """
    rounds: list[RoundMetrics] = field(default_factory=list)
    initial_accuracy: Optional[float] = None
    final_accuracy: Optional[float] = None
    best_accuracy: Optional[float] = None
    loss_history: list[dict[str, float]] = field(default_factory=list)
    teacher_checksum: str = ""
    failed_stage: Optional[str] = None
    error: Optional[str] = None
    elapsed_seconds: float = 0.0

    @property
    def succeeded(self) -> bool:
        return self.failed_stage is None

    @property
    def accuracy_trajectory(self) -> list[float]:
        return [r.accuracy for r in self.rounds if r.accuracy is not None]

    @property
    def retained_fractions(self) -> list[float]:
        return [r.retained_fraction for r in self.rounds]

    def to_dict(self) -> dict[str, Any]:
        return {
            "rounds": [asdict(r) for r in self.rounds],
            "initial_accuracy": self.initial_accuracy,
            "final_accuracy": self.final_accuracy,
            "best_accuracy": self.best_accuracy,
            "loss_history": self.loss_history,
            "teacher_checksum": self.teacher_checksum,
            "failed_stage": self.failed_stage,
            "error": self.error,
            "elapsed_seconds": self.elapsed_seconds,
        }


def _round_summary(records: list[AugmentationRecord]) -> tuple[float, int, float]:
    offered = sum(r.variant_count for r in records)
    retained = sum(r.retained_count for r in records)
    sims = [s for r in records for s in r.similarities]
    fraction = retained / offered if offered else 0.0
    fallbacks = sum(r.used_fallback for r in records)
    return fraction, fallbacks, (sum(sims) / len(sims) if sims else math.nan)


def run_dda(
    teacher: torch.nn.Module,
    student: torch.nn.Module,
    gen: Generator,
    disc: DiscriminatorHead,
    bank: MemoryBank,
    backend: DiffusionBackend,
    hp: HyperParams,
    schedule: Schedule,
    *,
    encoder: ImageEncoder,
    eval_data: Optional[ImageBatch] = None,
    seed: int = 0,
    ablate: Ablation = "none",
    intensity_policy: Optional[IntensityPolicy] = None,
    embedder: Optional[Callable[[torch.Tensor], torch.Tensor]] = None,
    view_policy: Optional[AugmentationPolicy] = None,
    include_positive: bool = False,
    checkpoints: Optional[CheckpointManager] = None,
    synth_cache: Optional[RoundCache] = None,
    aug_cache: Optional[RoundCache] = None,
    on_metrics: Optional[MetricsSink] = None,
) -> tuple[torch.nn.Module, RunReport]:
    """
    Exécute la distillation complète.

    Une faute d'étape (``PipelineException``) arrête la boucle : le rapport
    contient les résultats partiels et l'étape en cause, l'élève garde ses
    derniers paramètres finis et les checkpoints déjà écrits sont conservés.

    Ablations : ``no-filter`` retient toutes les variantes, ``no-diffusion``
    n'entraîne que sur les sources, ``both`` retire en plus le terme
    contrastif (similarité cosinus) de la synthèse.

    Returns:
        tuple: (élève, RunReport)
    """
    started = time.perf_counter()
    emit = on_metrics or (lambda row: None)
    freeze(teacher)
    report = RunReport(teacher_checksum=parameter_checksum(teacher))
    synth_hp = hp.model_copy(update={"beta_prime": 0.0}) if ablate == "both" else hp
    label_count = teacher.label_count

    if eval_data is not None:
        report.initial_accuracy = accuracy(student, eval_data)
        emit({"kind": "eval", "round": -1, "accuracy": report.initial_accuracy})
    if schedule.rounds == 0:
        logger.info("Calendrier vide: élève inchangé")
        report.final_accuracy = report.initial_accuracy
        return student, report

    state: DistillState = make_distill_state(student, hp, schedule.total_epochs)
    pool_images: list[torch.Tensor] = []
    pool_labels: list[torch.Tensor] = []
    pool_variant: list[torch.Tensor] = []
    total_steps = 5

    try:
        for round_index in range(schedule.rounds):
            logger.info(f"===== Round {round_index + 1}/{schedule.rounds} =====")

            logger.info(f"[ÉTAPE 1/{total_steps}] Synthèse")
            synthesis = run_synthesis_round(
                gen, teacher, disc, bank, synth_hp,
                SynthesisRound(
                    round_index=round_index,
                    batch_size=schedule.synthetic_batch_size,
                    label_count=label_count,
                    step_count=schedule.synthesis_steps,
                    lr=hp.synthesis_lr,
                    seed=seed,
                ),
                policy=view_policy,
                cache=synth_cache,
                max_negatives=schedule.max_negatives,
                include_positive=include_positive,
            )

            logger.info(f"[ÉTAPE 2/{total_steps}] Stockage dans la banque mémoire")
            bank.push(synthesis.batch, round_index)

            logger.info(f"[ÉTAPE 3/{total_steps}] Augmentation et filtrage")
            records = augment_pipeline(
                synthesis.batch, student, backend, hp,
                encoder=encoder,
                teacher=teacher,
                embedder=embedder,
                intensity_policy=intensity_policy,
                round_index=round_index,
                seed=seed,
                ablate=ablate,
                cache=aug_cache,
            )
            if intensity_policy is not None:
                intensity_policy.update(records)
            fraction, fallbacks, mean_similarity = _round_summary(records)

            round_batch, round_variant = training_batch(records, schedule.include_sources)
            pool_images.append(round_batch.images)
            pool_labels.append(round_batch.labels)
            pool_variant.append(round_variant)
            pool = ImageBatch(torch.cat(pool_images), torch.cat(pool_labels))
            is_variant = torch.cat(pool_variant)

            metrics = RoundMetrics(
                round=round_index,
                synthesis=synthesis.components,
                retained_fraction=fraction,
                fallback_sources=fallbacks,
                mean_similarity=mean_similarity,
                pool_size=len(pool),
                intensity=getattr(intensity_policy, "state", lambda: {})(),
            )
            emit({"kind": "round", **{k: v for k, v in asdict(metrics).items() if k != "epochs"}})

            logger.info(f"[ÉTAPE 4/{total_steps}] Distillation ({schedule.epochs_per_round} époques)")
            with PerformanceLogger(logger, f"distillation(round={round_index})"):
                for epoch in range(schedule.epochs_per_round):
                    epoch_metrics: EpochMetrics = train_student_epoch(
                        state, pool, teacher, hp,
                        is_variant=is_variant,
                        synth_objective=synthesis.components["objective"],
                        batch_size=schedule.train_batch_size,
                        generator=torch_generator(seed, round_index, epoch, 1),
                    )
                    metrics.epochs.append(epoch_metrics.to_dict())
                    emit({"kind": "epoch", "round": round_index, **epoch_metrics.to_dict()})

            logger.info(f"[ÉTAPE 5/{total_steps}] Évaluation et checkpoint")
            if eval_data is not None:
                metrics.accuracy = accuracy(student, eval_data)
                emit({"kind": "eval", "round": round_index, "accuracy": metrics.accuracy})
                logger.info(f"Round {round_index}: précision de l'élève {metrics.accuracy:.4f}")
                if state.best_accuracy is None or metrics.accuracy > state.best_accuracy:
                    state.best_accuracy = metrics.accuracy
            report.rounds.append(metrics)

            if checkpoints is not None:
                written = checkpoints.save(
                    round_index,
                    {
                        "student": (student, "classifier"),
                        "generator": (gen, "generator"),
                        "discriminator": (disc, "discriminator"),
                    },
                    bank=bank,
                    score=metrics.accuracy,
                )
                if "best" in written:
                    state.best_checkpoint = written["best"]

        after = parameter_checksum(teacher)
        if after != report.teacher_checksum:
            raise TeacherMutatedError(report.teacher_checksum, after)

    except PipelineException as e:
        report.failed_stage = e.stage
        report.error = str(e)
        logger.error(f"Échec de l'étape '{e.stage}': {e}")

    report.loss_history = [asdict(step) for step in state.history]
    report.best_accuracy = state.best_accuracy
    trajectory = report.accuracy_trajectory
    report.final_accuracy = trajectory[-1] if trajectory else report.initial_accuracy
    report.elapsed_seconds = time.perf_counter() - started
    return student, report
