"""
Gestion des graines pour des exécutions reproductibles.
"""
import random

import numpy as np
import torch


def derive_seed(*parts: int) -> int:
    """
    Graine 63 bits dérivée de façon stable d'un tuple d'entiers.

    Example:
        >>> derive_seed(run_seed, round_index, image_index)
    """
    state = np.random.SeedSequence([int(p) for p in parts]).generate_state(2, dtype=np.uint32)
    return int((int(state[0]) << 31) ^ int(state[1]))


def derive_seeds(count: int, *parts: int) -> list[int]:
    """``count`` graines indépendantes dérivées de ``parts``."""
    states = np.random.SeedSequence([int(p) for p in parts]).generate_state(count, dtype=np.uint32)
    return [int(s) for s in states]


def torch_generator(*parts: int) -> torch.Generator:
    """Générateur torch CPU initialisé avec ``derive_seed(*parts)``."""
    return torch.Generator().manual_seed(derive_seed(*parts))


def set_seed(seed: int = 0, deterministic: bool = True):
    """Initialise random, numpy et torch ; active les algorithmes déterministes."""
    random.seed(seed)
    np.random.seed(seed % (2 ** 32))
    torch.manual_seed(seed)
    if deterministic:
        torch.backends.cudnn.deterministic = True
        torch.backends.cudnn.benchmark = False
