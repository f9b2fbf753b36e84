import json

import pytest
import torch

from memory_bank.bank import MemoryBank
from models.checkpoint import (
    FORMAT_VERSION,
    CheckpointManager,
    load_checkpoint,
    read_metadata,
    save_checkpoint,
)
from models.contracts import parameter_checksum
from tests.conftest import SHAPE
from utils.exceptions import CheckpointFormatError


def test_checkpoint_round_trip(teacher, tmp_path):
    save_checkpoint(teacher, tmp_path / "teacher", extra={"accuracy": 0.9})
    model, metadata = load_checkpoint(tmp_path / "teacher", expected_kind="classifier")

    assert metadata.format_version == FORMAT_VERSION
    assert metadata.extra["accuracy"] == 0.9
    assert parameter_checksum(model) == parameter_checksum(teacher)
    images = torch.rand(3, *SHAPE)
    model.eval()
    assert torch.allclose(model(images), teacher(images))


def test_generator_checkpoint_round_trip(generator_net, tmp_path):
    save_checkpoint(generator_net, tmp_path / "gen", kind="generator")
    model, _ = load_checkpoint(tmp_path / "gen", expected_kind="generator")
    assert model.image_shape == generator_net.image_shape
    assert parameter_checksum(model) == parameter_checksum(generator_net)


def test_missing_metadata(tmp_path):
    (tmp_path / "empty").mkdir()
    with pytest.raises(CheckpointFormatError):
        read_metadata(tmp_path / "empty")


def test_corrupt_weights(teacher, tmp_path):
    target = save_checkpoint(teacher, tmp_path / "teacher")
    (target / "weights.pt").write_bytes(b"corrupted")
    with pytest.raises(CheckpointFormatError):
        load_checkpoint(target)


def test_unknown_format_version(teacher, tmp_path):
    target = save_checkpoint(teacher, tmp_path / "teacher")
    path = target / "metadata.json"
    metadata = json.loads(path.read_text(encoding="utf-8"))
    metadata["format_version"] = FORMAT_VERSION + 1
    path.write_text(json.dumps(metadata), encoding="utf-8")
    with pytest.raises(CheckpointFormatError):
        load_checkpoint(target)


def test_wrong_kind(teacher, tmp_path):
    target = save_checkpoint(teacher, tmp_path / "teacher")
    with pytest.raises(CheckpointFormatError):
        load_checkpoint(target, expected_kind="generator")


def test_manager_keeps_best_and_last(student, generator_net, tmp_path):
    manager = CheckpointManager(tmp_path / "checkpoints")
    bank = MemoryBank(8, image_shape=SHAPE)
    models = {"student": (student, "classifier"), "generator": (generator_net, "generator")}

    assert set(manager.save(0, models, bank=bank, score=0.5)) == {"last", "best"}
    assert set(manager.save(1, models, bank=bank, score=0.4)) == {"last"}
    assert set(manager.save(2, models, score=0.6)) == {"last", "best"}

    best_state = json.loads((tmp_path / "checkpoints" / "best" / "state.json").read_text(encoding="utf-8"))
    last_state = json.loads((tmp_path / "checkpoints" / "last" / "state.json").read_text(encoding="utf-8"))
    assert best_state == {"round": 2, "score": 0.6}
    assert last_state["round"] == 2
    load_checkpoint(manager.path("best", "student"), expected_kind="classifier")
