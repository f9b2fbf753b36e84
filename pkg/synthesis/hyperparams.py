"""
Hyperparamètres des pertes (inversion, contraste, distillation, filtrage).

Les valeurs par défaut sont celles de la plateforme ; les contraintes de
domaine sont vérifiées par pydantic à la construction ; une valeur hors
domaine lève ``InvalidHyperParameterError``.
"""
from typing import Any

from pydantic import BaseModel, ConfigDict, Field, ValidationError

from utils.exceptions import InvalidHyperParameterError


class HyperParams(BaseModel):
    """
    Tous les scalaires dont les pertes ont besoin.

    Attributes:
        alpha, beta: Poids de la perte d'inversion (classe / BN)
        alpha_prime, beta_prime: Poids inversion / contraste de la synthèse
        eta_kl, eta_synth, eta_self: Poids de la perte totale
        tau: Température de la distillation KL
        tp: Température de la perte contrastive
        omega: Seuil du filtre de similarité cosinus
        augmentations_per_image: K variantes par image synthétique
        diffusion_steps, guidance_scale: Réglages du backend de diffusion
    """

    model_config = ConfigDict(extra="forbid", validate_assignment=True)

    alpha: float = Field(1.0, ge=0)
    beta: float = Field(10.0, ge=0)
    alpha_prime: float = Field(1.0, ge=0)
    beta_prime: float = Field(0.5, ge=0)
    eta_kl: float = Field(1.0, ge=0)
    eta_synth: float = Field(1.0, ge=0)
    eta_self: float = Field(0.5, ge=0)
    tau: float = Field(4.0, gt=0)
    tp: float = Field(0.07, gt=0)
    omega: float = Field(0.75, ge=-1, le=1)
    augmentations_per_image: int = Field(3, ge=1)
    diffusion_steps: int = Field(50, ge=1)
    guidance_scale: float = Field(0.5, ge=0)

    # optimiseurs
    synthesis_lr: float = Field(1e-3, gt=0)
    student_lr: float = Field(0.1, gt=0)
    momentum: float = Field(0.9, ge=0, lt=1)
    weight_decay: float = Field(1e-4, ge=0)

    def __init__(self, **data: Any):
        try:
            super().__init__(**data)
        except ValidationError as e:
            error = e.errors()[0]
            name = ".".join(str(part) for part in error["loc"]) or "?"
            raise InvalidHyperParameterError(name, error.get("input"), error["msg"]) from e
