"""
Profils de similarité cosinus des variantes augmentées.

- ``similarity_profile`` : moyenne, quantiles et fraction retenue par seuil ω
- ``intensity_sweep``    : similarité moyenne des variantes du substitut en
  fonction de l'intensité, de l'échelle de guidage et du nombre de pas
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, Optional, Sequence

import numpy as np
import pandas as pd
import torch

from augmentation.backends import SurrogateDiffusionBackend
from augmentation.filtering import similarities
from augmentation.pipeline import AugmentationRecord
from models.contracts import ImageBatch
from utils.exceptions import EmptyDatasetError
from utils.logger import get_logger
from utils.seeding import derive_seeds


logger = get_logger(__name__)

DEFAULT_OMEGA_GRID: tuple[float, ...] = tuple(np.round(np.linspace(-1.0, 1.0, 41), 4))
QUANTILES: tuple[float, ...] = (0.05, 0.25, 0.5, 0.75, 0.95)


@dataclass
class SimilarityProfile:
    """
    Distribution des similarités d'un ensemble d'enregistrements.

    Attributes:
        count: Nombre de variantes
        mean: Similarité moyenne
        quantiles: {q: valeur}
        retained: DataFrame ``omega`` / ``retained_fraction`` (non croissante en ω)
    """
    count: int
    mean: float
    quantiles: dict[float, float]
    retained: pd.DataFrame = field(repr=False)

    def retained_fraction(self, omega: float) -> float:
        row = self.retained.loc[np.isclose(self.retained["omega"], omega)]
        if row.empty:
            raise KeyError(f"ω={omega} absent de la grille")
        return float(row["retained_fraction"].iloc[0])

    def to_dict(self) -> dict[str, Any]:
        return {
            "count": self.count,
            "mean": self.mean,
            "quantiles": {str(q): v for q, v in self.quantiles.items()},
            "retained": self.retained.to_dict(orient="list"),
        }


def similarity_profile(
    records: Sequence[AugmentationRecord] | Sequence[float],
    omega_grid: Iterable[float] = DEFAULT_OMEGA_GRID,
) -> SimilarityProfile:
    """
    Résumé de la distribution des similarités et courbe de rétention.

    Args:
        records: Enregistrements d'augmentation (ou similarités brutes)
        omega_grid: Seuils ω évalués (s > ω, strict)

    Raises:
        EmptyDatasetError: Aucune similarité
    """
    values = []
    for item in records:
        if isinstance(item, AugmentationRecord):
            values.extend(item.similarities)
        else:
            values.append(float(item))
    if not values:
        raise EmptyDatasetError("aucune similarité à profiler", stage="evaluation")
    series = pd.Series(values, dtype="float64")
    grid = np.sort(np.asarray(list(omega_grid), dtype=np.float64))
    retained = pd.DataFrame({
        "omega": grid,
        "retained_fraction": [(series > omega).mean() for omega in grid],
    })
    return SimilarityProfile(
        count=len(series),
        mean=float(series.mean()),
        quantiles={q: float(series.quantile(q)) for q in QUANTILES},
        retained=retained,
    )


def intensity_sweep(
    backend: SurrogateDiffusionBackend,
    sources: ImageBatch,
    embed: Callable[[torch.Tensor], torch.Tensor],
    intensities: Sequence[float] = (0.0, 0.25, 0.5, 1.0, 2.0),
    guidance_scales: Optional[Sequence[float]] = None,
    step_counts: Optional[Sequence[int]] = None,
    variants_per_image: int = 3,
    seed: int = 0,
) -> pd.DataFrame:
    """
    Similarité moyenne source/variantes du substitut sur une grille de réglages.

    Les mêmes graines sont utilisées pour chaque point de la grille.

    Returns:
        pd.DataFrame: colonnes ``intensity``, ``guidance_scale``, ``steps``,
        ``mean_similarity``, ``std_similarity``
    """
    guidance_scales = guidance_scales or [backend.guidance_scale]
    step_counts = step_counts or [backend.steps]
    original = (backend.guidance_scale, backend.steps)
    latents = backend.encoder.encode(sources.images)
    rows = []
    try:
        for guidance in guidance_scales:
            for steps in step_counts:
                backend.guidance_scale, backend.steps = guidance, steps
                for intensity in intensities:
                    sims = []
                    for i in range(len(sources)):
                        seeds = derive_seeds(variants_per_image, seed, i)
                        variants = backend.generate(latents[i], sources.images[i], seeds, intensity)
                        sims.append(similarities(embed, sources.images[i], variants).numpy())
                    values = np.concatenate(sims)
                    rows.append({
                        "intensity": intensity,
                        "guidance_scale": guidance,
                        "steps": steps,
                        "mean_similarity": float(values.mean()),
                        "std_similarity": float(values.std()),
                    })
    finally:
        backend.guidance_scale, backend.steps = original
    frame = pd.DataFrame(rows)
    logger.info(f"Balayage d'intensité: {len(frame)} points")
    return frame
