"""
Module memory_bank - Banque mémoire et perte contrastive de diversité.

Classes principales:
    - MemoryBank: Stockage FIFO borné des échantillons synthétiques
    - AugmentationPolicy: Politique d'augmentation des vues positives

Usage:
    >>> from memory_bank import MemoryBank, contrastive_loss
    >>> bank = MemoryBank(capacity=4096)
    >>> loss = contrastive_loss(batch, bank, projector, tp=0.07)
"""

from memory_bank.bank import MemoryBank, BankEntry
from memory_bank.views import AugmentationPolicy, make_positive_view, make_positive_views
from memory_bank.contrastive import contrastive_loss, cosine_matrix, pairwise_cosine

__all__ = [
    "MemoryBank",
    "BankEntry",
    "AugmentationPolicy",
    "make_positive_view",
    "make_positive_views",
    "contrastive_loss",
    "cosine_matrix",
    "pairwise_cosine",
]
