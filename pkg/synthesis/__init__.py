"""
Module synthesis - Synthèse de données par inversion de l'enseignant.

Classes principales:
    - HyperParams: Poids et températures de toutes les pertes
    - SynthesisRound: Paramètres d'un round de synthèse
    - SynthesisResult: Lot produit et trajectoire de l'objectif

Usage:
    >>> from synthesis import HyperParams, SynthesisRound, run_synthesis_round
    >>> result = run_synthesis_round(gen, teacher, disc, bank, HyperParams(),
    ...                              SynthesisRound(round_index=0, batch_size=64, label_count=10))
"""

from synthesis.hyperparams import HyperParams
from synthesis.losses import (
    class_prior_loss,
    bn_regularization_loss,
    inversion_loss,
    synthesis_objective,
    SynthesisLoss,
)
from synthesis.synthesizer import (
    SynthesisRound,
    SynthesisResult,
    balanced_labels,
    run_synthesis_round,
)

__all__ = [
    "HyperParams",
    "class_prior_loss",
    "bn_regularization_loss",
    "inversion_loss",
    "synthesis_objective",
    "SynthesisLoss",
    "SynthesisRound",
    "SynthesisResult",
    "balanced_labels",
    "run_synthesis_round",
]
