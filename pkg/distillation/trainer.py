"""
Entraînement de l'élève sur les données retenues d'un round.

L'optimisation est alternée : la synthèse met à jour (f_ini, θ_w,
discriminateur), les époques de distillation mettent à jour l'élève seul
avec η_KL·L_KL + η_self·L_self. La perte totale (objectif de synthèse
inclus) est calculée et journalisée à chaque pas.
"""
from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import torch
import torch.nn.functional as F
from torch.utils.data import DataLoader, TensorDataset

from augmentation.pipeline import AugmentationRecord, training_batch
from distillation.losses import kd_loss, student_loss, total_loss
from models.contracts import ImageBatch
from synthesis.hyperparams import HyperParams
from utils.exceptions import EmptyDatasetError, NonFiniteLossError
from utils.logger import get_logger


logger = get_logger(__name__)


@dataclass
class StepLosses:
    """Les trois termes de la perte totale à un pas donné."""
    step: int
    kd: float
    synth: float
    self_sup: float
    total: float


@dataclass
class DistillState:
    """
    État mutable de la distillation.

    Attributes:
        student: Paramètres θ_S (mis à jour en place)
        optimizer: SGD momentum, décroissance de poids
        scheduler: Taux d'apprentissage cosinus sur l'ensemble des époques
        epoch, step: Compteurs globaux
        history: Une entrée par pas exécuté
        best_accuracy, best_checkpoint: Meilleur score d'évaluation et son instantané
    """
    student: torch.nn.Module
    optimizer: torch.optim.Optimizer
    scheduler: Optional[torch.optim.lr_scheduler.LRScheduler] = None
    epoch: int = 0
    step: int = 0
    history: list[StepLosses] = field(default_factory=list)
    best_accuracy: Optional[float] = None
    best_checkpoint: Optional[Path] = None

    @property
    def learning_rate(self) -> float:
        return self.optimizer.param_groups[0]["lr"]


def make_distill_state(student: torch.nn.Module, hp: HyperParams, total_epochs: int) -> DistillState:
    """SGD (lr, momentum, weight decay de ``hp``) avec recuit cosinus sur ``total_epochs``."""
    optimizer = torch.optim.SGD(
        student.parameters(),
        lr=hp.student_lr,
        momentum=hp.momentum,
        weight_decay=hp.weight_decay,
    )
    scheduler = torch.optim.lr_scheduler.CosineAnnealingLR(optimizer, T_max=max(total_epochs, 1))
    return DistillState(student=student, optimizer=optimizer, scheduler=scheduler)


@dataclass
class EpochMetrics:
    """Métriques d'une époque (pertes moyennes par terme et débit)."""
    epoch: int
    steps: int
    samples: int
    kd: float
    synth: float
    self_sup: float
    total: float
    learning_rate: float
    throughput: float

    def to_dict(self) -> dict:
        return asdict(self)


def _as_training_data(
    data: ImageBatch | Sequence[AugmentationRecord],
    is_variant: Optional[torch.Tensor],
    include_sources: bool,
) -> tuple[ImageBatch, torch.Tensor]:
    if isinstance(data, ImageBatch):
        if is_variant is None:
            is_variant = torch.ones(len(data), dtype=torch.bool)
        return data, is_variant
    if not data:
        raise EmptyDatasetError("aucune donnée retenue")
    return training_batch(list(data), include_sources)


def train_student_epoch(
    state: DistillState,
    data: ImageBatch | Sequence[AugmentationRecord],
    teacher: torch.nn.Module,
    hp: HyperParams,
    *,
    is_variant: Optional[torch.Tensor] = None,
    synth_objective: float = 0.0,
    batch_size: int = 64,
    generator: Optional[torch.Generator] = None,
    include_sources: bool = True,
) -> EpochMetrics:
    """
    Une passe sur les données retenues (variantes et sources de repli).

    Args:
        state: État de distillation (modifié en place)
        data: Enregistrements d'augmentation, ou lot déjà assemblé
        teacher: Enseignant gelé
        hp: Hyperparamètres (τ, η)
        is_variant: Masque « variante » du lot (tout vrai par défaut) ;
            L_self n'est calculée que sur les variantes
        synth_objective: Dernier objectif de synthèse (journalisé dans la perte totale)
        generator: Générateur du mélange des lots

    Raises:
        EmptyDatasetError: Aucune donnée
        NonFiniteLossError: Perte non finie (l'élève garde ses derniers paramètres finis)
    """
    batch, is_variant = _as_training_data(data, is_variant, include_sources)
    if len(batch) == 0:
        raise EmptyDatasetError("aucune donnée retenue")

    loader = DataLoader(
        TensorDataset(batch.images, batch.labels, is_variant),
        batch_size=batch_size,
        shuffle=True,
        generator=generator,
    )
    student = state.student
    student.train()
    teacher.eval()
    sums = {"kd": 0.0, "synth": 0.0, "self_sup": 0.0, "total": 0.0}
    steps, samples = 0, 0
    learning_rate = state.learning_rate
    start = time.perf_counter()

    for images, labels, variant in loader:
        with torch.no_grad():
            teacher_logits = teacher(images)
        student_logits = student(images)
        kd = kd_loss(teacher_logits, student_logits, hp.tau)
        if bool(variant.any()):
            self_sup = F.cross_entropy(student_logits[variant], labels[variant])
        else:
            self_sup = student_logits.new_zeros(())
        loss = student_loss(kd, self_sup, hp)
        logged = StepLosses(
            step=state.step,
            kd=float(kd.detach()),
            synth=synth_objective,
            self_sup=float(self_sup.detach()),
            total=float(total_loss(kd.detach(), synth_objective, self_sup.detach(), hp)),
        )
        if not all(math.isfinite(v) for v in (logged.kd, logged.self_sup, logged.total)):
            raise NonFiniteLossError(
                state.step, {"kd": logged.kd, "synth": logged.synth, "self_sup": logged.self_sup}
            )
        state.optimizer.zero_grad()
        loss.backward()
        state.optimizer.step()

        state.history.append(logged)
        state.step += 1
        steps += 1
        samples += len(labels)
        for key in sums:
            sums[key] += getattr(logged, key)

    if state.scheduler is not None:
        state.scheduler.step()
    state.epoch += 1
    elapsed = max(time.perf_counter() - start, 1e-9)
    metrics = EpochMetrics(
        epoch=state.epoch,
        steps=steps,
        samples=samples,
        learning_rate=learning_rate,
        throughput=samples / elapsed,
        **{key: value / max(steps, 1) for key, value in sums.items()},
    )
    logger.debug(
        f"Époque {metrics.epoch}: kd={metrics.kd:.4f} self={metrics.self_sup:.4f} "
        f"total={metrics.total:.4f} ({metrics.samples} images, {metrics.throughput:.0f} img/s)"
    )
    return metrics
