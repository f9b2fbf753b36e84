"""
Tests du harnais : commandes, codes de sortie et exécution de bout en bout.
"""
import json
import math

import pandas as pd
import pytest

from harness.commands import MetricsRecorder, read_records
from main import main, parse_values
from utils.logger import get_logger, logger_manager

TINY_CONFIG = """\
[data]
dataset = digits
image_size = 8

[models]
teacher_width = 4
teacher_blocks = 2
teacher_epochs = 1
student_width = 4
latent_dim = 8
generator_channels = 4
disc_hidden = 16
disc_projection = 8
autoencoder_latent = 8
autoencoder_epochs = 1

[hyper]
augmentations_per_image = 2
diffusion_steps = 3

[schedule]
rounds = 1
epochs_per_round = 1
synthesis_steps = 2
synthetic_batch_size = 10
train_batch_size = 16
max_negatives = 8

[memory]
capacity = 32

[run]
output_dir = {output_dir}
"""


def _run_dirs(root, command):
    return sorted(root.glob(f"*-{command}"))


@pytest.fixture
def tiny_config(tmp_path):
    path = tmp_path / "tiny.cfg"
    path.write_text(TINY_CONFIG.format(output_dir=tmp_path / "runs"), encoding="utf-8")
    return path


# ---------------------------------------------------------------- utilitaires

def test_parse_values():
    assert parse_values("0.65, 0.7,0.75") == ["0.65", "0.7", "0.75"]
    assert parse_values("") == []
    assert parse_values(" , ") == []


def test_metrics_records_replace_non_finite(tmp_path):
    recorder = MetricsRecorder(tmp_path / "metrics.records")
    recorder({"kind": "epoch", "kd": 0.5})
    recorder({"kind": "epoch", "kd": math.nan})
    assert recorder.count == 2

    lines = (tmp_path / "metrics.records").read_text(encoding="utf-8").splitlines()
    assert json.loads(lines[1])["kd"] is None
    frame = read_records(tmp_path / "metrics.records")
    assert len(frame) == 2
    assert pd.isna(frame["kd"].iloc[1])


def test_read_records_without_file(tmp_path):
    assert read_records(tmp_path / "absent.records").empty


# ---------------------------------------------------------------- codes de sortie

def test_sweep_with_unknown_parameter_exits_before_running(tmp_path):
    out = tmp_path / "runs"
    assert main(["sweep", "--param", "learning_speed", "--values", "1,2", "--out", str(out)]) == 1
    assert not out.exists()


def test_sweep_with_ambiguous_parameter(tmp_path):
    out = tmp_path / "runs"
    assert main(["sweep", "--param", "jitter", "--values", "0.1", "--out", str(out)]) == 1


def test_sweep_without_values_writes_empty_table(tmp_path):
    out = tmp_path / "runs"
    assert main(["sweep", "--param", "omega", "--values", "", "--out", str(out)]) == 0

    (sweep_dir,) = _run_dirs(out, "sweep")
    table = pd.read_csv(sweep_dir / "results.csv")
    assert table.empty
    assert "accuracy" in table.columns
    report = json.loads((sweep_dir / "report.json").read_text(encoding="utf-8"))
    assert report["command"] == "sweep" and report["values"] == 0
    assert (sweep_dir / "config.cfg").exists()


def test_invalid_choice_is_a_usage_error():
    with pytest.raises(SystemExit) as exc:
        main(["distill", "--ablate", "everything"])
    assert exc.value.code == 1


def test_invalid_override_is_a_usage_error(tmp_path):
    assert main(["distill", "--omega", "2.5", "--out", str(tmp_path / "runs")]) == 1


def test_plot_without_report(tmp_path):
    assert main(["plot", str(tmp_path)]) == 1


def test_distill_without_teacher(tmp_path):
    assert main(["distill", "--out", str(tmp_path / "runs")]) == 1


def test_evaluate_corrupt_checkpoint_is_a_pipeline_fault(tmp_path):
    checkpoint = tmp_path / "broken"
    checkpoint.mkdir()
    (checkpoint / "metadata.json").write_text("{not json", encoding="utf-8")
    code = main(["evaluate", "--checkpoint", str(checkpoint), "--out", str(tmp_path / "runs")])
    assert code == 2


# ---------------------------------------------------------------- bout en bout

@pytest.mark.slow
@pytest.mark.integration
def test_end_to_end(tiny_config, tmp_path):
    runs = tmp_path / "runs"
    assert main(["train-teacher", "--config", str(tiny_config)]) == 0
    (teacher_dir,) = _run_dirs(runs, "train-teacher")
    assert (teacher_dir / "checkpoints" / "teacher" / "weights.pt").exists()
    assert (teacher_dir / "checkpoints" / "backend" / "metadata.json").exists()

    assert main(["distill", "--config", str(tiny_config), "--omega", "0.5"]) == 0
    (distill_dir,) = _run_dirs(runs, "distill")
    report = json.loads((distill_dir / "report.json").read_text(encoding="utf-8"))
    assert report["failed_stage"] is None
    assert len(report["rounds"]) == 1
    assert report["omega"] == 0.5
    assert 0.0 <= report["final_accuracy"] <= 1.0
    assert "omega = 0.5" in (distill_dir / "config.cfg").read_text(encoding="utf-8")
    assert (distill_dir / "synth_cache" / "round_0000" / "manifest.json").exists()
    assert (distill_dir / "aug_cache" / "round_0000" / "manifest.json").exists()
    assert not read_records(distill_dir / "metrics.records").empty
    assert (distill_dir / "run.log").exists()

    code = main([
        "evaluate", "--config", str(tiny_config),
        "--checkpoint", str(distill_dir / "checkpoints" / "student"),
        "--fid-against", str(distill_dir / "synth_cache" / "round_0000"),
    ])
    assert code == 0
    (evaluate_dir,) = _run_dirs(runs, "evaluate")
    fid = pd.read_csv(evaluate_dir / "fid.csv")
    assert set(fid.columns) == {"first-pool", "second-pool", "final-pool"}

    assert main(["plot", str(distill_dir)]) == 0
    assert (distill_dir / "plots" / "accuracy.png").exists()
    assert (distill_dir / "plots" / "similarity_hist.png").exists()


@pytest.mark.slow
@pytest.mark.integration
def test_distill_is_reproducible(tiny_config, tmp_path):
    runs = tmp_path / "runs"
    assert main(["train-teacher", "--config", str(tiny_config), "--skip-backend"]) == 0
    assert main(["distill", "--config", str(tiny_config)]) == 0
    assert main(["distill", "--config", str(tiny_config)]) == 0

    first, second = (
        json.loads((run_dir / "report.json").read_text(encoding="utf-8"))
        for run_dir in _run_dirs(runs, "distill")
    )
    assert first["loss_history"] == second["loss_history"]
    assert first["final_accuracy"] == second["final_accuracy"]


def test_run_log_is_attached_and_detached(tmp_path):
    logger = get_logger("tests.run_log")
    log_path = logger_manager.attach_run_directory(tmp_path)
    logger.warning("dans le journal")
    logger_manager.detach_run_directory()
    logger.warning("hors du journal")

    content = log_path.read_text(encoding="utf-8")
    assert "dans le journal" in content
    assert "hors du journal" not in content
