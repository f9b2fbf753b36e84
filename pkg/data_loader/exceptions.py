"""
Exceptions personnalisées pour la couche data_loader.
Permet une gestion d'erreurs fine et des messages explicites.
"""
from utils.exceptions import PipelineException


class DataLoaderException(PipelineException):
    """Exception de base pour tous les problèmes de chargement de données."""

    stage = "data"


class UnsupportedDatasetError(DataLoaderException):
    """Levée quand l'identifiant de jeu de données est inconnu."""

    def __init__(self, name: str, known: list[str]):
        super().__init__(
            f"Jeu de données non supporté: {name}",
            {"dataset": name, "known": known}
        )


class DatasetNotFoundError(DataLoaderException):
    """Levée quand le jeu de données est absent ; le message décrit le layout attendu."""

    def __init__(self, name: str, root: str, expected_layout: str):
        super().__init__(
            f"Jeu de données '{name}' introuvable sous {root}. Layout attendu: {expected_layout}",
            {"dataset": name, "root": root}
        )


class CorruptedDatasetError(DataLoaderException):
    """Levée quand un fichier du jeu de données est illisible ou incohérent."""

    def __init__(self, path: str, error_details: str):
        super().__init__(
            f"Jeu de données corrompu ou malformé: {path}",
            {"path": path, "error": error_details}
        )


class InsufficientDataError(DataLoaderException):
    """Levée quand le jeu de données contient trop peu d'images."""

    def __init__(self, count: int, min_required: int):
        super().__init__(
            f"Données insuffisantes: {count} images (minimum requis: {min_required})",
            {"count": count, "min_required": min_required}
        )
