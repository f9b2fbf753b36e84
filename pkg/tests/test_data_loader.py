"""
Tests du chargement et de la validation des données.
"""
import pandas as pd
import pytest
import torch
from torchvision.io import write_png

from data_loader.data_validator import DataValidator
from data_loader.datasets import load_dataset, read_folder_index, read_image_set
from data_loader.exceptions import (
    CorruptedDatasetError,
    DatasetNotFoundError,
    UnsupportedDatasetError,
)
from models.contracts import ImageBatch
from tests.conftest import LABELS, SHAPE
from utils.cache import RoundCache


@pytest.fixture
def balanced():
    return ImageBatch(torch.rand(8, *SHAPE), torch.arange(8) % LABELS)


def _write_folder(root, count=8, size=8):
    root.mkdir(parents=True, exist_ok=True)
    rows = []
    for i in range(count):
        image = (torch.rand(1, size, size) * 255).to(torch.uint8)
        write_png(image, str(root / f"img_{i}.png"))
        rows.append({"path": f"img_{i}.png", "label": i % 2})
    pd.DataFrame(rows).to_csv(root / "index.csv", index=False)


# ---------------------------------------------------------------- validation

def test_valid_batch(balanced):
    result = DataValidator().validate(balanced, label_count=LABELS, image_shape=SHAPE, min_items=2)
    assert result.is_valid
    assert result.errors == [] and result.warnings == []
    assert result.metrics["n_items"] == 8
    assert result.metrics["class_counts"] == {0: 2, 1: 2, 2: 2, 3: 2}


def test_pixels_out_of_range(balanced):
    images = balanced.images.clone()
    images[0, 0, 0, 0] = 1.5
    images[1, 0, 0, 0] = float("nan")
    result = DataValidator().validate(ImageBatch(images, balanced.labels))
    assert not result.is_valid
    assert len(result.errors) == 2


def test_labels_out_of_range(balanced):
    labels = balanced.labels.clone()
    labels[0] = LABELS
    labels[1] = -1
    result = DataValidator().validate(ImageBatch(balanced.images, labels), label_count=LABELS)
    assert not result.is_valid
    assert any("étiquettes" in error for error in result.errors)


def test_wrong_shape(balanced):
    result = DataValidator().validate(balanced, image_shape=(3, 8, 8))
    assert not result.is_valid


def test_imbalance_is_a_warning_unless_strict():
    labels = torch.tensor([0, 0, 0, 0, 0, 0, 1, 1])
    batch = ImageBatch(torch.rand(8, *SHAPE), labels)

    lenient = DataValidator().validate(batch, label_count=2)
    assert lenient.is_valid and len(lenient.warnings) == 1

    strict = DataValidator(strict_mode=True).validate(batch, label_count=2)
    assert not strict.is_valid


def test_missing_class_is_reported(balanced):
    result = DataValidator().validate(balanced, label_count=LABELS + 1)
    assert result.is_valid
    assert "absente" in result.warnings[0]


def test_min_items(balanced):
    result = DataValidator().validate(balanced, min_items=20, check_balance=False)
    assert not result.is_valid


# ---------------------------------------------------------------- chargement

def test_load_digits_split():
    split = load_dataset("digits", image_size=8, seed=0, test_fraction=0.25)
    assert split.label_count == 10
    assert split.image_shape == (1, 8, 8)
    assert len(split.train) + len(split.test) == 1797
    assert float(split.train.images.max()) <= 1.0
    assert set(split.test.labels.tolist()) == set(range(10))


def test_digits_split_depends_on_seed():
    first = load_dataset("digits", image_size=8, seed=0)
    second = load_dataset("digits", image_size=8, seed=0)
    other = load_dataset("digits", image_size=8, seed=1)
    assert torch.equal(first.test.images, second.test.images)
    assert not torch.equal(first.test.images, other.test.images)


def test_unsupported_dataset():
    with pytest.raises(UnsupportedDatasetError):
        load_dataset("imagenet")


def test_missing_folder_describes_layout(tmp_path):
    with pytest.raises(DatasetNotFoundError) as exc:
        load_dataset("folder", root=tmp_path / "absent")
    assert exc.value.stage == "data"
    assert "index.csv" in str(exc.value)


def test_folder_dataset(tmp_path):
    _write_folder(tmp_path / "images")
    batch = read_folder_index(tmp_path / "images", channels=1)
    assert batch.image_shape == (1, 8, 8)
    assert batch.labels.tolist() == [0, 1] * 4

    split = load_dataset("folder", root=tmp_path / "images", test_fraction=0.25)
    assert split.label_count == 2
    assert len(split.train) == 6


def test_folder_with_unreadable_image(tmp_path):
    _write_folder(tmp_path / "images", count=2)
    (tmp_path / "images" / "img_1.png").write_bytes(b"pas une image")
    with pytest.raises(CorruptedDatasetError):
        read_folder_index(tmp_path / "images", channels=1)


def test_folder_with_missing_columns(tmp_path):
    root = tmp_path / "images"
    root.mkdir()
    (root / "index.csv").write_text("file,class\na.png,0\n", encoding="utf-8")
    with pytest.raises(CorruptedDatasetError):
        read_folder_index(root)


def test_read_image_set_from_synthesis_round(tmp_path, balanced):
    cache = RoundCache(tmp_path / "synth_cache")
    cache.write_round(0, {f"{i:06d}": image for i, image in enumerate(balanced.images)},
                      {"labels": balanced.labels.tolist()})
    loaded = read_image_set(cache.round_dir(0), channels=1)
    assert loaded.labels.tolist() == balanced.labels.tolist()
    assert float((loaded.images - balanced.images).abs().max()) <= 1 / 255 + 1e-6


def test_read_image_set_rejects_other_paths(tmp_path):
    with pytest.raises(DatasetNotFoundError):
        read_image_set(tmp_path)
