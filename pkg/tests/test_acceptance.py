"""
Expériences directionnelles au préréglage « bureau » (3 graines chacune).

Plusieurs heures sur CPU : activées seulement avec ``DDA_ACCEPTANCE=1``.
"""
import os
from pathlib import Path

import pandas as pd
import pytest

from harness.commands import EXIT_OK, cmd_sweep, cmd_train_teacher
from harness.run_config import load_config, with_overrides

DESK = Path(__file__).resolve().parent.parent / "configs" / "desk.cfg"
SEEDS = (0, 1, 2)

pytestmark = [
    pytest.mark.slow,
    pytest.mark.acceptance,
    pytest.mark.skipif(not os.environ.get("DDA_ACCEPTANCE"), reason="DDA_ACCEPTANCE non défini"),
]


@pytest.fixture(scope="module")
def desk_config(tmp_path_factory):
    config = with_overrides(load_config(DESK), {
        "run.output_dir": str(tmp_path_factory.mktemp("acceptance")),
    })
    assert cmd_train_teacher(config).exit_code == EXIT_OK
    return config


def _mean_accuracy(config, parameter, values) -> pd.Series:
    tables = []
    for seed in SEEDS:
        result = cmd_sweep(with_overrides(config, {"run.seed": seed}), parameter, values)
        assert result.exit_code == EXIT_OK
        tables.append(result.table[["value", "accuracy"]])
    return pd.concat(tables).groupby("value", sort=False)["accuracy"].mean()


def test_ablation_direction(desk_config):
    accuracy = _mean_accuracy(desk_config, "augmentation.ablate", ["none", "no-diffusion", "both"])
    assert accuracy["none"] >= accuracy["no-diffusion"] - 0.005
    assert accuracy["none"] > accuracy["both"]


def test_threshold_sweep_peaks_inside(desk_config):
    accuracy = _mean_accuracy(desk_config, "omega", [-1.0, 0.5, 0.75, 0.95])
    best = accuracy.idxmax()
    assert float(best) not in (-1.0, 0.95)
