"""
Pertes de la distillation.

- ``kd_loss``    : KL(softmax(t/τ) ‖ softmax(s/τ)), moyenne par lot, × τ²
- ``total_loss`` : η_KL·kd + η_synth·objectif de synthèse + η_self·auto-supervision
"""
from __future__ import annotations

import torch
import torch.nn.functional as F

from synthesis.hyperparams import HyperParams
from utils.exceptions import InvalidTemperatureError, ShapeMismatchError


def kd_loss(
    teacher_logits: torch.Tensor,
    student_logits: torch.Tensor,
    tau: float,
    scale_by_temperature: bool = True,
) -> torch.Tensor:
    """
    Divergence de Kullback-Leibler entre les distributions adoucies de
    l'enseignant et de l'élève.

    Args:
        teacher_logits: Logits B×C de l'enseignant (cible, sans gradient)
        student_logits: Logits B×C de l'élève
        tau: Température (> 0)
        scale_by_temperature: Multiplie par τ² (gradient stable en τ)

    Raises:
        InvalidTemperatureError: τ <= 0
        ShapeMismatchError: Formes différentes
    """
    if tau <= 0:
        raise InvalidTemperatureError("tau", tau)
    if teacher_logits.shape != student_logits.shape:
        raise ShapeMismatchError(
            tuple(teacher_logits.shape), tuple(student_logits.shape), what="student logits"
        )
    log_p = F.log_softmax(student_logits / tau, dim=1)
    q = F.softmax(teacher_logits.detach() / tau, dim=1)
    loss = F.kl_div(log_p, q, reduction="batchmean")
    return loss * tau ** 2 if scale_by_temperature else loss


def total_loss(
    kd: torch.Tensor | float,
    synth_obj: torch.Tensor | float,
    self_sup: torch.Tensor | float,
    hp: HyperParams,
) -> torch.Tensor | float:
    """
    Perte totale η_KL·kd + η_synth·synth_obj + η_self·self_sup.

    Le terme de synthèse est détaché : il est journalisé mais ne met jamais
    à jour les paramètres de l'élève.
    """
    if isinstance(synth_obj, torch.Tensor):
        synth_obj = synth_obj.detach()
    return hp.eta_kl * kd + hp.eta_synth * synth_obj + hp.eta_self * self_sup


def student_loss(kd: torch.Tensor, self_sup: torch.Tensor, hp: HyperParams) -> torch.Tensor:
    """Partie de la perte totale visible par l'élève : η_KL·kd + η_self·self_sup."""
    return hp.eta_kl * kd + hp.eta_self * self_sup
