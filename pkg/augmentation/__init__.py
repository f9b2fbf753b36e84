"""
Module augmentation - Augmentation par diffusion et filtrage cosinus.

Classes principales:
    - ImageEncoder: Encodeur image -> latent f_syn
    - SurrogateDiffusionBackend, RemoteDiffusionBackend: Backends de diffusion
    - AugmentationRecord: Source, variantes, similarités, masque, pertes
    - AdaptiveIntensityPolicy: Intensité guidée par la compréhension de l'élève

Usage:
    >>> from augmentation import augment_pipeline
    >>> records = augment_pipeline(batch, student, backend, hp, encoder=encoder, teacher=teacher)
"""

from augmentation.encoder import ImageEncoder, encode_latent
from augmentation.backends import (
    SurrogateDiffusionBackend,
    RemoteDiffusionBackend,
    encode_png,
    decode_png,
    diffuse_augment,
)
from augmentation.filtering import (
    self_supervised_loss,
    similarity,
    similarities,
    filter_mask,
    make_embedder,
)
from augmentation.policies import (
    ConstantIntensityPolicy,
    AdaptiveIntensityPolicy,
    build_intensity_policy,
)
from augmentation.pipeline import (
    ABLATIONS,
    AugmentationRecord,
    augment_pipeline,
    training_batch,
)


__all__ = [
    "ImageEncoder",
    "encode_latent",
    "SurrogateDiffusionBackend",
    "RemoteDiffusionBackend",
    "encode_png",
    "decode_png",
    "diffuse_augment",
    "self_supervised_loss",
    "similarity",
    "similarities",
    "filter_mask",
    "make_embedder",
    "ConstantIntensityPolicy",
    "AdaptiveIntensityPolicy",
    "build_intensity_policy",
    "ABLATIONS",
    "AugmentationRecord",
    "augment_pipeline",
    "training_batch",
]
