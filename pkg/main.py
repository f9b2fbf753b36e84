"""
Point d'entrée en ligne de commande de la plateforme de distillation.

Commandes :
    train-teacher  Entraîne l'enseignant (ou l'élève de référence) et l'autoencodeur du substitut
    distill        Distillation sans données complète
    sweep          Une distillation par valeur d'un paramètre de la configuration
    evaluate       Précision d'un checkpoint et FID optionnel aux trois profondeurs
    plot           Régénère les figures d'un répertoire d'exécution

Codes de sortie : 0 succès, 1 erreur d'usage ou de configuration, 2 faute du pipeline.

Example:
    $ python main.py train-teacher --config configs/desk.cfg
    $ python main.py distill --config configs/desk.cfg --omega 0.75 --ablate none
    $ python main.py sweep --config configs/desk.cfg --param omega --values 0.65,0.7,0.75,0.8,0.85
"""
import argparse
import sys
from pathlib import Path
from typing import Optional, Sequence

import torch

from config import settings
from harness.commands import (
    EXIT_PIPELINE,
    EXIT_USAGE,
    CommandResult,
    cmd_distill,
    cmd_evaluate,
    cmd_plot,
    cmd_sweep,
    cmd_train_teacher,
)
from harness.run_config import RunConfig, load_config, with_overrides
from utils.exceptions import ConfigurationError, PipelineException
from utils.logger import get_logger


logger = get_logger(__name__)


class UsageParser(argparse.ArgumentParser):
    """ArgumentParser dont les erreurs d'usage sortent avec le code 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: erreur: {message}\n")


def _add_common(parser: argparse.ArgumentParser):
    parser.add_argument('--config', type=Path, help="Fichier de configuration (*.cfg)")
    parser.add_argument('--seed', type=int, help="Graine de l'exécution")
    parser.add_argument('--omega', type=float, help="Seuil du filtre cosinus ω")
    parser.add_argument(
        '--ablate',
        choices=['none', 'no-diffusion', 'no-filter', 'both'],
        help="Ablation de l'augmentation"
    )
    parser.add_argument('--backend', choices=['surrogate', 'remote'], help="Backend de diffusion")
    parser.add_argument('--endpoint', help="URL de la route de diffusion distante")
    parser.add_argument('--out', help="Répertoire racine des exécutions")


def build_parser() -> argparse.ArgumentParser:
    """Construit le parseur des sous-commandes."""
    parser = UsageParser(description="Distillation sans données par augmentation de diffusion")
    commands = parser.add_subparsers(dest="command", required=True, parser_class=UsageParser)

    train = commands.add_parser('train-teacher', help="Entraîne l'enseignant sur les données étiquetées")
    _add_common(train)
    train.add_argument('--arch', choices=['teacher', 'student'], default='teacher',
                       help="Architecture entraînée (student = référence from scratch)")
    train.add_argument('--skip-backend', action='store_true',
                       help="Ne pas entraîner l'autoencodeur du substitut")

    distill = commands.add_parser('distill', help="Distillation complète")
    _add_common(distill)

    sweep = commands.add_parser('sweep', help="Balayage d'un paramètre")
    _add_common(sweep)
    sweep.add_argument('--param', required=True, help="Paramètre balayé (ex: omega, hyper.eta_self)")
    sweep.add_argument('--values', required=True,
                       help="Valeurs séparées par des virgules (chaîne vide = aucune)")
    sweep.add_argument('--parallel', action='store_true', help="Une exécution par processus")
    sweep.add_argument('--workers', type=int, help="Nombre de processus en mode parallèle")

    evaluate = commands.add_parser('evaluate', help="Évalue un checkpoint")
    _add_common(evaluate)
    evaluate.add_argument('--checkpoint', type=Path, required=True, help="Répertoire du checkpoint")
    evaluate.add_argument('--fid-against', type=Path,
                          help="Ensemble d'images (round de cache ou dossier avec index.csv)")
    evaluate.add_argument('--fid-reference', type=Path,
                          help="Ensemble de référence (split de test par défaut)")

    plot = commands.add_parser('plot', help="Régénère les figures d'une exécution")
    plot.add_argument('run_dir', type=Path, help="Répertoire d'exécution")
    plot.add_argument('--omega', type=float, help="Seuil marqué sur les figures")

    return parser


def parse_values(raw: str) -> list[str]:
    """``"0.65, 0.7"`` -> ``["0.65", "0.7"]`` ; chaîne vide -> liste vide."""
    return [value.strip() for value in raw.split(",") if value.strip()]


def resolve_config(args: argparse.Namespace) -> RunConfig:
    """Fichier de configuration puis surcharges de la ligne de commande."""
    config = load_config(args.config)
    return with_overrides(config, {
        "run.seed": args.seed,
        "hyper.omega": args.omega,
        "augmentation.ablate": args.ablate,
        "backend.kind": args.backend,
        "backend.endpoint": args.endpoint,
        "run.output_dir": args.out,
    })


def dispatch(args: argparse.Namespace) -> CommandResult:
    if args.command == 'plot':
        return cmd_plot(args.run_dir, omega=args.omega)
    config = resolve_config(args)
    if args.command == 'train-teacher':
        return cmd_train_teacher(config, arch=args.arch, skip_backend=args.skip_backend)
    if args.command == 'distill':
        return cmd_distill(config)
    if args.command == 'sweep':
        return cmd_sweep(config, args.param, parse_values(args.values),
                         parallel=args.parallel, workers=args.workers)
    return cmd_evaluate(config, args.checkpoint, args.fid_against, args.fid_reference)


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Fonction principale ; renvoie le code de sortie."""
    args = build_parser().parse_args(argv)
    if settings.TORCH_THREADS:
        torch.set_num_threads(settings.TORCH_THREADS)

    try:
        result = dispatch(args)
    except ConfigurationError as e:
        logger.error(f"✗ Erreur de configuration: {e}")
        print(f"erreur [{e.stage}]: {e}", file=sys.stderr)
        return EXIT_USAGE
    except PipelineException as e:
        logger.error(f"✗ ÉCHEC de l'étape '{e.stage}': {e}", exc_info=True)
        print(f"erreur [{e.stage}]: {e}", file=sys.stderr)
        return EXIT_PIPELINE

    if result.run_dir is not None:
        print(f"{result.command}: {result.run_dir}")
    for key, value in result.summary.items():
        print(f"  {key}: {value}")
    return result.exit_code


if __name__ == "__main__":
    sys.exit(main())
