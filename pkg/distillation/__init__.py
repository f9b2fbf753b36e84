"""
Module distillation - Transfert de connaissances enseignant -> élève.

Classes principales:
    - DistillState: État mutable de l'élève (optimiseur, historique)
    - Schedule: Calendrier rounds / époques
    - RunReport: Rapport d'exécution d'une distillation

Usage:
    >>> from distillation import run_dda, Schedule
    >>> student, report = run_dda(teacher, student, gen, disc, bank, backend, hp,
    ...                           Schedule(rounds=3), encoder=encoder, eval_data=test)
"""

from distillation.losses import kd_loss, total_loss, student_loss
from distillation.trainer import (
    DistillState,
    EpochMetrics,
    StepLosses,
    make_distill_state,
    train_student_epoch,
)
from distillation.orchestrator import Schedule, RoundMetrics, RunReport, run_dda

__all__ = [
    "kd_loss",
    "total_loss",
    "student_loss",
    "DistillState",
    "EpochMetrics",
    "StepLosses",
    "make_distill_state",
    "train_student_epoch",
    "Schedule",
    "RoundMetrics",
    "RunReport",
    "run_dda",
]
