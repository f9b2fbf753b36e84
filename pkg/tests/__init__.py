"""
Module tests - Suite de tests.

Structure:
    - test_contracts.py     : Contrats des modèles (formes, BN, gel)
    - test_synthesis.py     : Pertes d'inversion et rounds de synthèse
    - test_memory_bank.py   : Banque mémoire, perte contrastive, vues positives
    - test_augmentation.py  : Backends, filtre cosinus, pipeline d'augmentation
    - test_distillation.py  : Perte KD, époques de l'élève, orchestration
    - test_evaluation.py    : FID, précision, profils de similarité
    - test_checkpoint.py    : Persistance des modèles
    - test_run_config.py    : Fichiers de configuration et surcharges
    - test_harness.py       : Commandes, codes de sortie, bout en bout
    - test_data_loader.py   : Chargement et validation des jeux d'images
    - test_visualization.py : Rapports et figures
    - test_cache.py         : Cache des rounds et graines
    - test_api_main.py      : Service de diffusion et client distant

Markers pytest:
    - @pytest.mark.integration  : Tests d'intégration
    - @pytest.mark.slow         : Tests lents

Usage:
    # Tous les tests
    >>> pytest

    # Sans les tests lents
    >>> pytest -m "not slow"
"""

__version__ = "1.0.0"
