"""
Module harness - Surface en ligne de commande et configuration d'exécution.

Classes principales:
    - RunConfig: Configuration déclarative (une section par module)
    - CommandResult: Résultat d'une commande (code de sortie, répertoire, résumé)

Usage:
    >>> from harness import load_config, cmd_distill
    >>> result = cmd_distill(load_config("configs/desk.cfg"))
    >>> result.exit_code
    0
"""

from harness.run_config import (
    KNOWN_SWEEP_PARAMETERS,
    RunConfig,
    echo_config,
    load_config,
    parse_config_text,
    resolve_parameter,
    with_overrides,
    write_config,
)
from harness.commands import (
    EXIT_OK,
    EXIT_PIPELINE,
    EXIT_USAGE,
    CommandResult,
    MetricsRecorder,
    cmd_distill,
    cmd_evaluate,
    cmd_plot,
    cmd_sweep,
    cmd_train_teacher,
    read_records,
)

__all__ = [
    "KNOWN_SWEEP_PARAMETERS",
    "RunConfig",
    "echo_config",
    "load_config",
    "parse_config_text",
    "resolve_parameter",
    "with_overrides",
    "write_config",
    "EXIT_OK",
    "EXIT_PIPELINE",
    "EXIT_USAGE",
    "CommandResult",
    "MetricsRecorder",
    "cmd_distill",
    "cmd_evaluate",
    "cmd_plot",
    "cmd_sweep",
    "cmd_train_teacher",
    "read_records",
]
