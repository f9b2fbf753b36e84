"""
Module models - Contrats et architectures des réseaux.

Classes principales:
    - ImageBatch, BNStats: Types de données partagés par tout le pipeline
    - ConvClassifier, LinearClassifier: Enseignant / élève
    - Generator, DiscriminatorHead: Réseaux de la synthèse par inversion
    - ConvAutoencoder: Encodeur/décodeur du substitut de diffusion

Usage:
    >>> from models import forward_logits, batch_bn_statistics
    >>> logits = forward_logits(teacher, batch)
    >>> stats = batch_bn_statistics(teacher, batch)
"""

__version__ = "1.0.0"

from models.contracts import (
    ImageBatch,
    BNStats,
    Classifier,
    DiffusionBackend,
    BNStatisticsRecorder,
    forward_logits,
    penultimate_embedding,
    batch_bn_statistics,
    running_bn_statistics,
    parameter_checksum,
    freeze,
)
from models.networks import (
    ConvClassifier,
    LinearClassifier,
    Generator,
    DiscriminatorHead,
    ConvAutoencoder,
    build_classifier,
    make_projector,
)

__all__ = [
    "ImageBatch",
    "BNStats",
    "Classifier",
    "DiffusionBackend",
    "BNStatisticsRecorder",
    "forward_logits",
    "penultimate_embedding",
    "batch_bn_statistics",
    "running_bn_statistics",
    "parameter_checksum",
    "freeze",
    "ConvClassifier",
    "LinearClassifier",
    "Generator",
    "DiscriminatorHead",
    "ConvAutoencoder",
    "build_classifier",
    "make_projector",
]
