import json

import pandas as pd
import plotly.graph_objects as go
import torch

from evaluation.similarity import similarity_profile
from visualization.chart_builder import ChartBuilder
from visualization.report_generator import ReportGenerator, markdown_table


def test_run_report_files(tmp_path):
    payload = {
        "final_accuracy": 0.8,
        "rounds": [{"round": 0, "synthesis": {"objective": 1.2}, "retained_fraction": 0.5,
                    "mean_similarity": 0.7, "accuracy": 0.8, "pool_size": 24}],
        "failed_stage": None,
    }
    paths = ReportGenerator().generate_run_report(tmp_path, "distill", payload, "[run]\nseed = 0\n")

    assert set(paths) == {"txt", "html", "json"}
    assert all(path.exists() for path in paths.values())
    report = json.loads(paths["json"].read_text(encoding="utf-8"))
    assert report["command"] == "distill"
    assert report["final_accuracy"] == 0.8
    text = paths["txt"].read_text(encoding="utf-8")
    assert "SUCCÈS" in text and "0.8000" in text


def test_failed_run_report_names_stage(tmp_path):
    paths = ReportGenerator().generate_run_report(
        tmp_path, "distill", {"failed_stage": "augmentation", "error": "réponse inattendue"}
    )
    assert "augmentation" in paths["txt"].read_text(encoding="utf-8")


def test_markdown_table_formats_values():
    table = pd.DataFrame({"value": [0.7, 0.75], "accuracy": [0.81234, float("nan")], "failed_stage": [None, "synthesis"]})
    lines = markdown_table(table).splitlines()
    assert lines[0] == "| value | accuracy | failed_stage |"
    assert lines[2] == "| 0.7000 | 0.8123 | - |"
    assert lines[3] == "| 0.7500 | nan | synthesis |"


def test_write_table(tmp_path):
    table = pd.DataFrame({"value": [1, 2], "accuracy": [0.5, 0.6]})
    paths = ReportGenerator().write_table(table, tmp_path, stem="fid")
    assert paths["csv"].name == "fid.csv"
    assert pd.read_csv(paths["csv"]).equals(table)


def test_charts_are_saved(tmp_path):
    builder = ChartBuilder()
    history = [{"step": i, "kd": 1.0 / (i + 1), "synth": 0.5, "self_sup": 0.2, "total": 1.7} for i in range(5)]
    profile = similarity_profile([0.2, 0.6, 0.8, 0.9])

    written = [
        builder.save_chart(builder.accuracy_trajectory([0.4, 0.6], 0.9), tmp_path / "accuracy.png"),
        builder.save_chart(builder.accuracy_trajectory([0.4, 0.6], use_plotly=True), tmp_path / "accuracy.html"),
        builder.save_chart(builder.loss_curves(history), tmp_path / "losses.png"),
        builder.save_chart(builder.similarity_histogram([0.2, 0.6, 0.8], omega=0.75), tmp_path / "hist.png"),
        builder.save_chart(builder.retained_curve(profile.retained, 0.75), tmp_path / "retained.png"),
        builder.save_chart(
            builder.augmentation_grid([(torch.rand(1, 8, 8), [torch.rand(1, 8, 8)], [torch.rand(1, 8, 8)])]),
            tmp_path / "grid.png",
        ),
    ]
    assert all(path.exists() and path.stat().st_size > 0 for path in written)


def test_sweep_curves_plotly():
    table = pd.DataFrame({"value": [0.7, 0.8], "accuracy": [0.5, 0.6], "mean_similarity": [0.8, 0.85]})
    assert isinstance(ChartBuilder().sweep_curves(table, "omega", use_plotly=True), go.Figure)
