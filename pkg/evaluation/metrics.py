"""
Métriques de classification.
"""
from __future__ import annotations

from typing import Optional

import numpy as np
import pandas as pd
import torch
from sklearn.metrics import confusion_matrix

from models.contracts import ImageBatch
from utils.exceptions import EmptyDatasetError


def predictions(model: torch.nn.Module, data: ImageBatch, batch_size: int = 256) -> torch.Tensor:
    """Classes prédites (argmax des logits), en mode évaluation et sans gradient."""
    if len(data) == 0:
        raise EmptyDatasetError("jeu d'évaluation", stage="evaluation")
    was_training = model.training
    model.eval()
    outputs = []
    try:
        with torch.no_grad():
            for start in range(0, len(data), batch_size):
                images = data.images[start:start + batch_size]
                outputs.append(model(images).argmax(dim=1).cpu())
    finally:
        model.train(was_training)
    return torch.cat(outputs)


def accuracy(model: torch.nn.Module, data: ImageBatch, batch_size: int = 256) -> float:
    """
    Fraction d'argmax corrects, dans [0, 1].

    Raises:
        EmptyDatasetError: Jeu de données vide
    """
    predicted = predictions(model, data, batch_size)
    return float((predicted == data.labels.cpu()).float().mean())


def agreement(model_a: torch.nn.Module, model_b: torch.nn.Module, data: ImageBatch) -> float:
    """Fraction d'images sur lesquelles les deux modèles prédisent la même classe."""
    return float((predictions(model_a, data) == predictions(model_b, data)).float().mean())


def per_class_accuracy(
    model: torch.nn.Module,
    data: ImageBatch,
    label_count: Optional[int] = None,
) -> pd.DataFrame:
    """
    Précision par classe et matrice de confusion résumée.

    Returns:
        pd.DataFrame: colonnes ``label``, ``support``, ``correct``, ``accuracy``
    """
    predicted = predictions(model, data).numpy()
    truth = data.labels.cpu().numpy()
    label_count = label_count or int(max(truth.max(), predicted.max()) + 1)
    matrix = confusion_matrix(truth, predicted, labels=np.arange(label_count))
    support = matrix.sum(axis=1)
    correct = np.diag(matrix)
    return pd.DataFrame({
        "label": np.arange(label_count),
        "support": support,
        "correct": correct,
        "accuracy": np.divide(correct, support, out=np.zeros(label_count), where=support > 0),
    })
