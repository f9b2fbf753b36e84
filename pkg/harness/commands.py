"""
Commandes du harnais : entraînement de l'enseignant, distillation,
balayages, évaluation et figures.

Chaque commande écrit dans un nouveau répertoire horodaté ::

    <output_dir>/<horodatage>-<commande>/
        config.cfg        configuration effective normalisée
        run.log           journal de l'exécution
        metrics.records   une ligne JSON par époque / évaluation
        report.txt / report.html / report.json
        checkpoints/  synth_cache/  aug_cache/  plots/
"""
from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path
from typing import Any, Optional, Sequence

import numpy as np
import pandas as pd

from augmentation.backends import RemoteDiffusionBackend, SurrogateDiffusionBackend
from augmentation.encoder import ImageEncoder
from augmentation.filtering import make_embedder
from augmentation.policies import build_intensity_policy
from config import settings
from data_loader.data_validator import DataValidator
from data_loader.datasets import DatasetSplit, load_dataset, read_image_set
from data_loader.exceptions import CorruptedDatasetError
from distillation.orchestrator import RunReport, run_dda
from evaluation.fid import fid_by_depth
from evaluation.metrics import accuracy, per_class_accuracy
from evaluation.similarity import similarity_profile
from harness.run_config import (
    RunConfig,
    echo_config,
    load_config,
    resolve_parameter,
    with_overrides,
    write_config,
)
from memory_bank.bank import MemoryBank
from memory_bank.views import AugmentationPolicy
from models.checkpoint import CheckpointManager, load_checkpoint, save_checkpoint
from models.contracts import DiffusionBackend, freeze
from models.networks import (
    ConvAutoencoder,
    DiscriminatorHead,
    Generator,
    build_classifier,
    discriminator_input_dim,
)
from models.training import fit_autoencoder, fit_classifier
from utils.cache import RoundCache, atomic_write_text
from utils.exceptions import ConfigurationError, ShapeMismatchError
from utils.logger import get_logger, log_function_call, logger_manager, PerformanceLogger
from utils.seeding import set_seed
from visualization.chart_builder import ChartBuilder
from visualization.report_generator import ReportGenerator


logger = get_logger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_PIPELINE = 2

SWEEP_COLUMNS = [
    "parameter", "value", "accuracy", "best_accuracy",
    "mean_similarity", "retained_fraction", "failed_stage", "run_dir",
]
GRID_SOURCES = 6


@dataclass
class CommandResult:
    """Résultat d'une commande (code de sortie, répertoire, résumé)."""
    command: str
    run_dir: Optional[Path]
    exit_code: int = EXIT_OK
    summary: dict[str, Any] = field(default_factory=dict)
    report: Optional[RunReport] = None
    table: Optional[pd.DataFrame] = None


# ----------------------------------------------------------------------
# Plomberie commune
# ----------------------------------------------------------------------

def create_run_dir(output_dir: Path, command: str) -> Path:
    """Crée ``<output_dir>/<horodatage>-<commande>`` (jamais un répertoire existant)."""
    root = Path(output_dir)
    root.mkdir(parents=True, exist_ok=True)
    stamp = datetime.now().strftime("%Y%m%d-%H%M%S-%f")
    run_dir = root / f"{stamp}-{command}"
    suffix = 1
    while run_dir.exists():
        run_dir = root / f"{stamp}-{command}-{suffix}"
        suffix += 1
    run_dir.mkdir(parents=True)
    return run_dir


def _start_run(config: RunConfig, command: str, run_dir: Optional[Path] = None) -> tuple[Path, str]:
    if run_dir is None:
        run_dir = create_run_dir(Path(config.run.output_dir), command)
    else:
        run_dir = Path(run_dir)
        run_dir.mkdir(parents=True, exist_ok=True)
    write_config(config, run_dir / "config.cfg")
    logger_manager.attach_run_directory(run_dir)
    logger.info("=" * 80)
    logger.info(f"{command.upper()} - répertoire d'exécution: {run_dir}")
    logger.info("=" * 80)
    return run_dir, echo_config(config)


def _finite(value: Any) -> Any:
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, dict):
        return {k: _finite(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_finite(v) for v in value]
    return value


class MetricsRecorder:
    """Ajoute une ligne JSON par évènement dans ``metrics.records``."""

    def __init__(self, path: Path):
        self.path = Path(path)
        self.count = 0

    def __call__(self, row: dict[str, Any]):
        with self.path.open("a", encoding="utf-8") as handle:
            handle.write(json.dumps(_finite(row), default=str) + "\n")
        self.count += 1


def read_records(path: Path) -> pd.DataFrame:
    """Relit un fichier ``metrics.records`` (DataFrame vide s'il est absent)."""
    path = Path(path)
    if not path.exists() or path.stat().st_size == 0:
        return pd.DataFrame()
    return pd.read_json(path, lines=True)


def load_split(config: RunConfig) -> DatasetSplit:
    data = config.data
    return load_dataset(
        data.dataset,
        root=Path(data.root) if data.root else None,
        image_size=data.image_size,
        seed=data.split_seed,
        test_fraction=data.test_fraction,
        limit=data.limit,
    )


def classifier_kwargs(
    architecture: str,
    width: int,
    blocks: int,
    image_shape: tuple[int, int, int],
    label_count: int,
    mean: Sequence[float],
    std: Sequence[float],
) -> dict[str, Any]:
    """Arguments de construction d'un classifieur selon son architecture."""
    channels, size, _ = image_shape
    if architecture == "cnn":
        return {"in_channels": channels, "image_size": size, "label_count": label_count,
                "width": width, "blocks": blocks, "mean": tuple(mean), "std": tuple(std)}
    return {"in_channels": channels, "image_size": size, "label_count": label_count,
            "hidden": width}


def find_teacher_checkpoint(config: RunConfig) -> Path:
    """
    Checkpoint de l'enseignant : ``[models] teacher_checkpoint`` ou, à défaut,
    le plus récent ``train-teacher`` sous ``[run] output_dir``.

    Raises:
        ConfigurationError: Aucun checkpoint trouvé
    """
    if config.models.teacher_checkpoint:
        return Path(config.models.teacher_checkpoint)
    candidates = sorted(Path(config.run.output_dir).glob("*-train-teacher*/checkpoints/teacher"))
    if not candidates:
        raise ConfigurationError(
            "Aucun checkpoint d'enseignant: lancez 'train-teacher' ou renseignez "
            "[models] teacher_checkpoint",
            {"output_dir": config.run.output_dir}
        )
    logger.info(f"Enseignant le plus récent: {candidates[-1]}")
    return candidates[-1]


def build_encoder(config: RunConfig, image_shape: tuple[int, int, int],
                  teacher_dir: Optional[Path] = None) -> ImageEncoder:
    """
    Encodeur du backend : ``[backend] checkpoint``, sinon l'autoencodeur
    entraîné à côté de l'enseignant, sinon l'encodeur identité.
    """
    directory = None
    if config.backend.checkpoint:
        directory = Path(config.backend.checkpoint)
    elif teacher_dir is not None and (Path(teacher_dir).parent / "backend").exists():
        directory = Path(teacher_dir).parent / "backend"
    if directory is None:
        logger.info("Aucun autoencodeur: encodeur identité (espace pixel)")
        return ImageEncoder(image_shape)
    autoencoder, _ = load_checkpoint(directory, expected_kind="autoencoder")
    return ImageEncoder(image_shape, autoencoder)


def build_backend(config: RunConfig, encoder: ImageEncoder) -> DiffusionBackend:
    """
    Backend de diffusion configuré.

    Raises:
        ConfigurationError: Backend distant sans endpoint
    """
    backend = config.backend
    hyper = config.hyper
    if backend.kind == "remote":
        if not backend.endpoint:
            raise ConfigurationError("Backend distant sans endpoint", {"kind": "remote"})
        return RemoteDiffusionBackend(
            backend.endpoint,
            steps=hyper.diffusion_steps,
            guidance_scale=hyper.guidance_scale,
        )
    return SurrogateDiffusionBackend(
        encoder,
        steps=hyper.diffusion_steps,
        guidance_scale=hyper.guidance_scale,
        elastic_alpha=backend.elastic_alpha,
        elastic_sigma=backend.elastic_sigma,
        jitter=backend.jitter,
    )


def _write_per_class(model, split: DatasetSplit, run_dir: Path):
    table = per_class_accuracy(model, split.test, split.label_count)
    atomic_write_text(run_dir / "per_class_accuracy.csv", table.to_csv(index=False))


# ----------------------------------------------------------------------
# train-teacher
# ----------------------------------------------------------------------

@log_function_call(logger)
def cmd_train_teacher(
    config: RunConfig,
    arch: str = "teacher",
    skip_backend: bool = False,
    run_dir: Optional[Path] = None,
) -> CommandResult:
    """
    Entraîne l'enseignant (ou l'élève « from scratch » avec ``arch="student"``)
    sur les données étiquetées, puis l'autoencodeur du substitut de diffusion.

    Raises:
        DatasetNotFoundError: Jeu absent (le message décrit le layout attendu)
    """
    if arch not in ("teacher", "student"):
        raise ConfigurationError(f"Rôle inconnu: {arch}", {"arch": arch})
    command = "train-teacher" if arch == "teacher" else "train-student"
    set_seed(config.run.seed, settings.DETERMINISTIC)
    run_dir, config_text = _start_run(config, command, run_dir)
    models = config.models

    try:
        with PerformanceLogger(logger, command):
            logger.info("\n[ÉTAPE 1/4] Chargement et validation des données")
            split = load_split(config)
            validation = DataValidator().validate(
                split.train, label_count=split.label_count, image_shape=split.image_shape,
                min_items=2,
            )
            if not validation.is_valid:
                raise CorruptedDatasetError(split.name, "; ".join(validation.errors))

            logger.info(f"\n[ÉTAPE 2/4] Entraînement du classifieur ({arch})")
            if arch == "teacher":
                architecture, width, blocks = models.teacher_arch, models.teacher_width, models.teacher_blocks
            else:
                architecture, width, blocks = models.student_arch, models.student_width, models.student_blocks
            model = build_classifier(architecture, **classifier_kwargs(
                architecture, width, blocks, split.image_shape, split.label_count, split.mean, split.std
            ))
            recorder = MetricsRecorder(run_dir / "metrics.records")
            history = fit_classifier(
                model, split.train, split.test,
                epochs=models.teacher_epochs, lr=models.teacher_lr,
                seed=config.run.seed, progress=config.run.progress,
            )
            for epoch, (loss, acc) in enumerate(zip(history.losses, history.test_accuracy)):
                recorder({"kind": "epoch", "epoch": epoch, "loss": loss, "accuracy": acc})
            test_accuracy = accuracy(model, split.test)
            recorder({"kind": "eval", "accuracy": test_accuracy})
            checkpoint = save_checkpoint(
                model, run_dir / "checkpoints" / arch, kind="classifier",
                extra={"role": arch, "dataset": split.name, "test_accuracy": test_accuracy,
                       "seed": config.run.seed},
            )
            _write_per_class(model, split, run_dir)
            logger.info(f"✓ Précision de test ({arch}): {test_accuracy:.4f}")

            logger.info("\n[ÉTAPE 3/4] Autoencodeur du substitut de diffusion")
            backend_dir = None
            channels, size, _ = split.image_shape
            if arch != "teacher" or skip_backend:
                logger.info("Autoencodeur ignoré")
            elif size % 4:
                logger.warning(f"Taille d'image {size} non divisible par 4: autoencodeur ignoré")
            else:
                autoencoder = ConvAutoencoder(channels, size, latent_dim=models.autoencoder_latent)
                losses = fit_autoencoder(
                    autoencoder, split.train.images, epochs=models.autoencoder_epochs,
                    seed=config.run.seed, progress=config.run.progress,
                )
                backend_dir = save_checkpoint(
                    autoencoder, run_dir / "checkpoints" / "backend", kind="autoencoder",
                    extra={"final_loss": losses[-1] if losses else None},
                )

            logger.info("\n[ÉTAPE 4/4] Rapport")
            summary = {
                "role": arch,
                "architecture": architecture,
                "dataset": split.name,
                "test_accuracy": test_accuracy,
                "checkpoint": str(checkpoint),
                "backend_checkpoint": str(backend_dir) if backend_dir else None,
            }
            ReportGenerator().generate_run_report(
                run_dir, command,
                {**summary, "validation_warnings": validation.warnings,
                 "history": {"loss": history.losses, "accuracy": history.test_accuracy}},
                config_text,
            )
        return CommandResult(command, run_dir, EXIT_OK, summary)
    finally:
        logger_manager.detach_run_directory()


# ----------------------------------------------------------------------
# distill
# ----------------------------------------------------------------------

@log_function_call(logger)
def cmd_distill(config: RunConfig, run_dir: Optional[Path] = None) -> CommandResult:
    """
    Distillation complète (``run_dda``) à partir d'un enseignant entraîné.

    Le code de sortie vaut 2 si une étape a échoué ; le rapport nomme l'étape.
    """
    set_seed(config.run.seed, settings.DETERMINISTIC)
    run_dir, config_text = _start_run(config, "distill", run_dir)
    models = config.models

    try:
        logger.info("\n[ÉTAPE 1/3] Préparation des modèles")
        teacher_dir = find_teacher_checkpoint(config)
        teacher, _ = load_checkpoint(teacher_dir, expected_kind="classifier")
        freeze(teacher)
        split = load_split(config)
        image_shape = tuple(teacher.input_shape)
        if tuple(split.image_shape) != image_shape:
            raise ShapeMismatchError(image_shape, split.image_shape, what="dataset")

        student = build_classifier(models.student_arch, **classifier_kwargs(
            models.student_arch, models.student_width, models.student_blocks,
            image_shape, teacher.label_count, split.mean, split.std,
        ))
        gen = Generator(latent_dim=models.latent_dim, image_shape=image_shape,
                        base_channels=models.generator_channels)
        disc = DiscriminatorHead(discriminator_input_dim(teacher), hidden_dim=models.disc_hidden,
                                 projection_dim=models.disc_projection)
        bank = MemoryBank(config.memory.capacity, image_shape)
        encoder = build_encoder(config, image_shape, teacher_dir)
        backend = build_backend(config, encoder)
        caches = config.run.write_caches

        logger.info("\n[ÉTAPE 2/3] Distillation")
        student, report = run_dda(
            teacher, student, gen, disc, bank, backend, config.hyper, config.schedule,
            encoder=encoder,
            eval_data=split.test,
            seed=config.run.seed,
            ablate=config.augmentation.ablate,
            intensity_policy=build_intensity_policy(
                config.augmentation.intensity_policy, config.augmentation.intensity,
                teacher.label_count,
            ),
            embedder=make_embedder(config.augmentation.embedding, teacher, disc),
            view_policy=AugmentationPolicy(
                flip_p=config.memory.flip_p, pad=config.memory.pad, jitter=config.memory.jitter
            ),
            include_positive=config.memory.include_positive,
            checkpoints=CheckpointManager(run_dir / "checkpoints"),
            synth_cache=RoundCache(run_dir / "synth_cache") if caches else None,
            aug_cache=RoundCache(run_dir / "aug_cache") if caches else None,
            on_metrics=MetricsRecorder(run_dir / "metrics.records"),
        )

        logger.info("\n[ÉTAPE 3/3] Checkpoint final et rapport")
        save_checkpoint(student, run_dir / "checkpoints" / "student", kind="classifier",
                        extra={"final_accuracy": report.final_accuracy,
                               "teacher": str(teacher_dir)})
        teacher_accuracy = accuracy(teacher, split.test)
        summary = {
            "teacher_checkpoint": str(teacher_dir),
            "teacher_accuracy": teacher_accuracy,
            "student_architecture": models.student_arch,
            "backend": backend.kind,
            "ablate": config.augmentation.ablate,
            "omega": config.hyper.omega,
            "initial_accuracy": report.initial_accuracy,
            "final_accuracy": report.final_accuracy,
            "best_accuracy": report.best_accuracy,
            "elapsed_seconds": report.elapsed_seconds,
        }
        ReportGenerator().generate_run_report(
            run_dir, "distill", _finite({**summary, **report.to_dict()}), config_text
        )
        exit_code = EXIT_OK if report.succeeded else EXIT_PIPELINE
        if report.succeeded:
            logger.info(f"✓ DISTILLATION TERMINÉE: précision {report.final_accuracy}")
        else:
            logger.error(f"✗ DISTILLATION ÉCHOUÉE à l'étape '{report.failed_stage}'")
        return CommandResult("distill", run_dir, exit_code, summary, report=report)
    finally:
        logger_manager.detach_run_directory()


# ----------------------------------------------------------------------
# sweep
# ----------------------------------------------------------------------

def _slug(value: Any) -> str:
    return str(value).replace("/", "_").replace(" ", "")


def _sweep_run(config: RunConfig, run_dir: Path, parameter: str) -> dict[str, Any]:
    section, key = resolve_parameter(parameter)
    result = cmd_distill(config, run_dir=run_dir)
    report = result.report
    similarities = [r.mean_similarity for r in report.rounds if not math.isnan(r.mean_similarity)]
    return {
        "parameter": parameter,
        "value": getattr(getattr(config, section), key),
        "accuracy": report.final_accuracy,
        "best_accuracy": report.best_accuracy,
        "mean_similarity": float(np.mean(similarities)) if similarities else math.nan,
        "retained_fraction": float(np.mean(report.retained_fractions)) if report.rounds else math.nan,
        "failed_stage": report.failed_stage,
        "run_dir": str(run_dir),
    }


@log_function_call(logger)
def cmd_sweep(
    config: RunConfig,
    parameter: str,
    values: Sequence[Any],
    parallel: bool = False,
    workers: Optional[int] = None,
) -> CommandResult:
    """
    Une distillation complète par valeur du paramètre, même graine partout.

    Le paramètre et toutes les valeurs sont validés avant la première exécution.

    Raises:
        UnknownSweepParameterError: Paramètre inconnu
        ConfigurationError: Valeur hors domaine
    """
    section, key = resolve_parameter(parameter)
    configs = [with_overrides(config, {parameter: value}) for value in values]
    if configs:
        teacher_dir = find_teacher_checkpoint(config)
        configs = [with_overrides(c, {"models.teacher_checkpoint": str(teacher_dir)}) for c in configs]

    sweep_dir, config_text = _start_run(config, "sweep")
    try:
        logger.info(f"Balayage de {section}.{key} sur {len(configs)} valeur(s)"
                    f"{' en parallèle' if parallel else ''}")
        run_dirs = [
            sweep_dir / f"{i:02d}-{key}-{_slug(getattr(getattr(c, section), key))}"
            for i, c in enumerate(configs)
        ]
        if parallel and configs:
            with ProcessPoolExecutor(max_workers=workers) as executor:
                rows = list(executor.map(_sweep_run, configs, run_dirs, [parameter] * len(configs)))
        else:
            rows = []
            for cfg, run_dir in zip(configs, run_dirs):
                rows.append(_sweep_run(cfg, run_dir, parameter))
                logger_manager.attach_run_directory(sweep_dir)

        table = pd.DataFrame(rows, columns=SWEEP_COLUMNS)
        reports = ReportGenerator()
        reports.write_table(table, sweep_dir)
        if not table.empty:
            builder = ChartBuilder()
            builder.save_chart(builder.sweep_curves(table, parameter), sweep_dir / "plots" / "sweep.png")
            builder.save_chart(builder.sweep_curves(table, parameter, use_plotly=True),
                               sweep_dir / "plots" / "sweep.html")
        failed = int(table["failed_stage"].notna().sum()) if not table.empty else 0
        summary = {"parameter": parameter, "values": len(configs), "failed_runs": failed}
        reports.generate_run_report(
            sweep_dir, "sweep", _finite({**summary, "results": table.to_dict(orient="records")}),
            config_text,
        )
        exit_code = EXIT_PIPELINE if failed else EXIT_OK
        return CommandResult("sweep", sweep_dir, exit_code, summary, table=table)
    finally:
        logger_manager.detach_run_directory()


# ----------------------------------------------------------------------
# evaluate
# ----------------------------------------------------------------------

@log_function_call(logger)
def cmd_evaluate(
    config: RunConfig,
    checkpoint: Path,
    fid_against: Optional[Path] = None,
    fid_reference: Optional[Path] = None,
) -> CommandResult:
    """
    Précision d'un checkpoint sur le split de test et, optionnellement, FID
    aux trois profondeurs entre un ensemble d'images et une référence
    (le split de test par défaut).

    Raises:
        CheckpointFormatError: Checkpoint corrompu ou de version inconnue
    """
    run_dir, config_text = _start_run(config, "evaluate")
    try:
        model, metadata = load_checkpoint(Path(checkpoint), expected_kind="classifier")
        split = load_split(config)
        test_accuracy = accuracy(model, split.test)
        _write_per_class(model, split, run_dir)
        logger.info(f"Précision de test: {test_accuracy:.4f}")

        scores: dict[str, float] = {}
        if fid_against is not None:
            channels = split.image_shape[0]
            against = read_image_set(Path(fid_against), channels)
            reference = read_image_set(Path(fid_reference), channels) if fid_reference else split.test
            scores = fid_by_depth(model, against, reference)
            ReportGenerator().write_table(pd.DataFrame([scores]), run_dir, stem="fid")

        summary = {
            "checkpoint": str(checkpoint),
            "architecture": metadata.architecture,
            "dataset": split.name,
            "accuracy": test_accuracy,
        }
        MetricsRecorder(run_dir / "metrics.records")({"kind": "eval", **summary, "fid": scores})
        ReportGenerator().generate_run_report(
            run_dir, "evaluate", {**summary, "fid": scores}, config_text
        )
        return CommandResult("evaluate", run_dir, EXIT_OK, {**summary, "fid": scores})
    finally:
        logger_manager.detach_run_directory()


# ----------------------------------------------------------------------
# plot
# ----------------------------------------------------------------------

def _augmentation_rows(run_dir: Path, channels: int) -> list:
    aug_cache, synth_cache = RoundCache(run_dir / "aug_cache"), RoundCache(run_dir / "synth_cache")
    rounds = aug_cache.rounds()
    if not rounds:
        return []
    variants, manifest = aug_cache.read_round(rounds[-1], channels)
    sources, _ = synth_cache.read_round(rounds[-1], channels)
    rows = []
    for source_id in sorted({item["source_id"] for item in manifest["items"]})[:GRID_SOURCES]:
        name = f"{source_id:06d}"
        if name not in sources:
            continue
        kept = [
            variants[f"{name}_k{item['variant']}"]
            for item in manifest["items"] if item["source_id"] == source_id
        ]
        rows.append((sources[name], kept, []))
    return rows


@log_function_call(logger)
def cmd_plot(run_dir: Path, omega: Optional[float] = None) -> CommandResult:
    """
    Régénère les figures d'un répertoire d'exécution (distillation ou balayage)
    sous ``plots/``.

    Raises:
        ConfigurationError: Répertoire sans report.json
    """
    run_dir = Path(run_dir)
    report_path = run_dir / "report.json"
    if not report_path.exists():
        raise ConfigurationError(f"Aucun report.json dans {run_dir}", {"run_dir": str(run_dir)})
    report = json.loads(report_path.read_text(encoding="utf-8"))
    plots = run_dir / "plots"
    builder = ChartBuilder()
    written: list[Path] = []

    with PerformanceLogger(logger, f"plot({run_dir.name})"):
        if report.get("command") == "sweep" and (run_dir / "results.csv").exists():
            table = pd.read_csv(run_dir / "results.csv")
            if not table.empty:
                written.append(builder.save_chart(builder.sweep_curves(table, report["parameter"]),
                                                  plots / "sweep.png"))

        trajectory = [r["accuracy"] for r in report.get("rounds", []) if r.get("accuracy") is not None]
        if trajectory:
            teacher_accuracy = report.get("teacher_accuracy")
            written.append(builder.save_chart(
                builder.accuracy_trajectory(trajectory, teacher_accuracy), plots / "accuracy.png"))
            written.append(builder.save_chart(
                builder.accuracy_trajectory(trajectory, teacher_accuracy, use_plotly=True),
                plots / "accuracy.html"))
        if report.get("loss_history"):
            written.append(builder.save_chart(builder.loss_curves(report["loss_history"]),
                                              plots / "losses.png"))

        aug_cache = RoundCache(run_dir / "aug_cache") if (run_dir / "aug_cache").exists() else None
        if aug_cache is not None:
            omega = omega if omega is not None else report.get("omega")
            values = [
                item["similarity"]
                for round_index in aug_cache.rounds()
                for manifest in [aug_cache.read_manifest(round_index)]
                for item in manifest["items"] + manifest.get("rejected", [])
            ]
            if values:
                profile = similarity_profile(values)
                written.append(builder.save_chart(builder.similarity_histogram(values, omega),
                                                  plots / "similarity_hist.png"))
                written.append(builder.save_chart(builder.retained_curve(profile.retained, omega),
                                                  plots / "retained_vs_omega.png"))
            channels = _channels(run_dir)
            rows = _augmentation_rows(run_dir, channels)
            if rows:
                grid = builder.augmentation_grid(rows, title="Sources et variantes retenues")
                written.append(builder.save_chart(grid, plots / "augmentation_grid.png"))

    logger.info(f"✓ {len(written)} figure(s) dans {plots}")
    return CommandResult("plot", run_dir, EXIT_OK, {"figures": [str(p) for p in written]})


def _channels(run_dir: Path) -> int:
    config_path = run_dir / "config.cfg"
    if not config_path.exists():
        return 1
    config = load_config(config_path)
    return 3 if config.data.dataset in ("cifar10", "cifar100") else 1
