"""
Exceptions personnalisées de la plateforme de distillation.

Toutes dérivent de ``PipelineException`` qui porte un message, un dictionnaire
de détails et l'étape du pipeline en cause. La CLI s'appuie sur l'étape pour
produire un diagnostic et un code de sortie non nul.
"""
from typing import Any, Optional


class PipelineException(Exception):
    """Exception de base pour toutes les fautes du pipeline."""

    stage: str = "pipeline"

    def __init__(
        self,
        message: str,
        details: Optional[dict[str, Any]] = None,
        stage: Optional[str] = None
    ):
        """
        Initialise l'exception avec un message et des détails optionnels.

        Args:
            message: Message d'erreur principal
            details: Dictionnaire avec des détails supplémentaires
            stage: Étape du pipeline (sinon celle de la classe)
        """
        self.message = message
        self.details = details or {}
        if stage is not None:
            self.stage = stage
        super().__init__(self.message)

    def __str__(self):
        """Représentation textuelle de l'exception."""
        if self.details:
            details_str = ", ".join(f"{k}={v}" for k, v in self.details.items())
            return f"{self.message} [{details_str}]"
        return self.message


# ---------------------------------------------------------------- modèles

class ModelContractError(PipelineException):
    """Violation du contrat d'un modèle (forme, valeurs)."""

    stage = "model"


class ShapeMismatchError(ModelContractError):
    """Levée quand la forme d'un lot ne correspond pas à celle attendue."""

    def __init__(self, expected: tuple, actual: tuple, what: str = "images"):
        super().__init__(
            f"Forme invalide pour {what}: attendu {expected}, obtenu {actual}",
            {"expected": expected, "actual": actual}
        )


class NonFiniteOutputError(ModelContractError):
    """Levée quand un modèle produit des valeurs NaN ou infinies."""

    def __init__(self, model_name: str, bad_count: int):
        super().__init__(
            f"Sortie non finie du modèle '{model_name}'",
            {"model": model_name, "non_finite_values": bad_count}
        )


class InsufficientBatchError(ModelContractError):
    """Levée quand le lot est trop petit pour une statistique (variance)."""

    def __init__(self, batch_size: int, min_required: int = 2):
        super().__init__(
            f"Lot trop petit: {batch_size} image(s) (minimum requis: {min_required})",
            {"batch_size": batch_size, "min_required": min_required}
        )


# -------------------------------------------------------------- synthèse

class SynthesisError(PipelineException):
    """Erreur de l'étape de synthèse par inversion."""

    stage = "synthesis"


class InvalidLabelError(SynthesisError):
    """Levée quand une étiquette sort de [0, label_count)."""

    def __init__(self, invalid: list, label_count: int):
        super().__init__(
            f"Étiquettes hors de l'intervalle [0, {label_count})",
            {"invalid_labels": invalid[:10], "label_count": label_count}
        )


class StatisticsMismatchError(SynthesisError):
    """Levée quand les statistiques BN ne sont pas alignées couche à couche."""

    def __init__(self, layer: int, batch_width: int, running_width: int):
        super().__init__(
            f"Largeur incohérente à la couche BN {layer}",
            {"layer": layer, "batch_width": batch_width, "running_width": running_width}
        )


class InvalidHyperParameterError(PipelineException):
    """Levée quand un hyperparamètre sort de son domaine."""

    stage = "config"

    def __init__(self, name: str, value: Any, constraint: str):
        super().__init__(
            f"Hyperparamètre invalide '{name}'={value} ({constraint})",
            {"name": name, "value": value, "constraint": constraint}
        )


class EmptyBatchError(SynthesisError):
    """Levée quand une opération reçoit un lot vide."""

    def __init__(self, what: str):
        super().__init__(f"Lot vide: {what}", {"what": what})


class SynthesisDivergedError(SynthesisError):
    """Levée quand l'objectif de synthèse devient non fini."""

    def __init__(self, round_index: int, step: int, components: dict[str, float]):
        super().__init__(
            f"Objectif de synthèse non fini au round {round_index}, pas {step}",
            {"round": round_index, "step": step, **components}
        )


# ------------------------------------------------------- banque mémoire

class MemoryBankError(PipelineException):
    """Erreur de la banque mémoire ou de la perte contrastive."""

    stage = "memory"


class NoNegativesError(MemoryBankError):
    """Levée quand aucune vue négative n'est disponible."""

    def __init__(self, anchors: int, bank_size: int):
        super().__init__(
            "Aucune vue négative disponible pour la perte contrastive",
            {"anchors": anchors, "bank_size": bank_size}
        )


class InvalidTemperatureError(MemoryBankError):
    """Levée quand une température est <= 0."""

    def __init__(self, name: str, value: float):
        super().__init__(
            f"Température '{name}' invalide: {value} (doit être > 0)",
            {"name": name, "value": value}
        )


# ---------------------------------------------------------- augmentation

class AugmentationError(PipelineException):
    """Erreur de l'étape d'augmentation par diffusion."""

    stage = "augmentation"


class InvalidThresholdError(AugmentationError):
    """Levée quand le seuil ω sort de [-1, 1]."""

    def __init__(self, omega: float):
        super().__init__(
            f"Seuil de similarité invalide: {omega} (attendu dans [-1, 1])",
            {"omega": omega}
        )


class BackendUnavailableError(AugmentationError):
    """Levée quand le backend distant reste injoignable après les tentatives."""

    def __init__(self, endpoint: str, attempts: int, last_error: str):
        super().__init__(
            f"Backend de diffusion injoignable: {endpoint}",
            {"endpoint": endpoint, "attempts": attempts, "last_error": last_error}
        )


class BackendProtocolError(AugmentationError):
    """Levée quand la réponse du backend ne respecte pas le contrat."""

    def __init__(self, reason: str, details: Optional[dict] = None):
        super().__init__(f"Réponse du backend invalide: {reason}", details or {})


# ---------------------------------------------------------- distillation

class DistillationError(PipelineException):
    """Erreur de l'étape de distillation."""

    stage = "distillation"


class NonFiniteLossError(DistillationError):
    """Levée quand la perte de distillation devient non finie."""

    def __init__(self, step: int, components: dict[str, float]):
        super().__init__(
            f"Perte de distillation non finie au pas {step}",
            {"step": step, **components}
        )


class EmptyDatasetError(PipelineException):
    """Levée quand un jeu de données (réel ou synthétique) est vide."""

    def __init__(self, what: str, stage: str = "distillation"):
        super().__init__(f"Jeu de données vide: {what}", {"what": what}, stage=stage)


class TeacherMutatedError(DistillationError):
    """Levée quand la somme de contrôle de l'enseignant a changé."""

    def __init__(self, before: str, after: str):
        super().__init__(
            "Les paramètres de l'enseignant ont été modifiés",
            {"checksum_before": before, "checksum_after": after}
        )


# ------------------------------------------------------------ évaluation

class EvaluationError(PipelineException):
    """Erreur de l'étape d'évaluation."""

    stage = "evaluation"


class FeatureDimensionError(EvaluationError):
    """Levée quand deux résumés de caractéristiques n'ont pas la même dimension."""

    def __init__(self, dim_a: int, dim_b: int):
        super().__init__(
            f"Dimensions de caractéristiques incompatibles: {dim_a} vs {dim_b}",
            {"dim_a": dim_a, "dim_b": dim_b}
        )


class MatrixSqrtError(EvaluationError):
    """Levée quand la racine matricielle du FID échoue."""

    def __init__(self, min_eigenvalue: float, condition_number: float):
        super().__init__(
            "Échec de la racine carrée matricielle (valeurs propres trop négatives)",
            {"min_eigenvalue": min_eigenvalue, "condition_number": condition_number}
        )


# ------------------------------------------------ configuration / stockage

class ConfigurationError(PipelineException):
    """Levée quand un fichier de configuration est invalide."""

    stage = "config"


class UnknownSweepParameterError(ConfigurationError):
    """Levée quand un balayage vise un paramètre inexistant."""

    def __init__(self, parameter: str, known: list[str]):
        super().__init__(
            f"Paramètre de balayage inconnu: '{parameter}'",
            {"parameter": parameter, "known": known}
        )


class CheckpointFormatError(PipelineException):
    """Levée quand un checkpoint est corrompu ou d'une version non supportée."""

    stage = "checkpoint"

    def __init__(self, path: str, reason: str):
        super().__init__(
            f"Checkpoint illisible: {path}",
            {"path": path, "reason": reason}
        )
