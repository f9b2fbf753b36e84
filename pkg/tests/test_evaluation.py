import numpy as np
import pytest
import torch

from augmentation.pipeline import AugmentationRecord
from evaluation.fid import FEATURE_DEPTHS, FeatureSetSummary, fid, fid_by_depth
from evaluation.metrics import accuracy, agreement, per_class_accuracy
from evaluation.similarity import intensity_sweep, similarity_profile
from models.contracts import ImageBatch
from models.networks import LinearClassifier
from tests.conftest import LABELS, SHAPE
from utils.exceptions import EmptyDatasetError, FeatureDimensionError, MatrixSqrtError


@pytest.fixture
def always_zero():
    model = LinearClassifier(image_size=8, label_count=LABELS)
    with torch.no_grad():
        model.head.weight.zero_()
        model.head.bias.copy_(torch.tensor([1.0, 0.0, 0.0, 0.0]))
    return model


# ---------------------------------------------------------------- FID

def test_fid_of_shifted_unit_gaussians_is_one():
    a = FeatureSetSummary.gaussian([0.0], [[1.0]])
    b = FeatureSetSummary.gaussian([1.0], [[1.0]])
    assert fid(a, b) == pytest.approx(1.0)


def test_fid_of_scaled_gaussians():
    a = FeatureSetSummary.gaussian([0.0], [[1.0]])
    b = FeatureSetSummary.gaussian([0.0], [[4.0]])
    assert fid(a, b) == pytest.approx(1.0)


def test_fid_of_identical_sets_is_zero():
    features = np.random.default_rng(0).normal(size=(200, 3))
    summary = FeatureSetSummary.from_features(features)
    assert fid(summary, summary) == pytest.approx(0.0, abs=1e-6)


def test_fid_is_symmetric():
    rng = np.random.default_rng(1)
    a = FeatureSetSummary.from_features(rng.normal(size=(100, 4)))
    b = FeatureSetSummary.from_features(rng.normal(loc=0.5, scale=2.0, size=(100, 4)))
    assert fid(a, b) == pytest.approx(fid(b, a), rel=1e-6)
    assert fid(a, b) > 0


def test_fid_rejects_different_dimensions():
    with pytest.raises(FeatureDimensionError):
        fid(FeatureSetSummary.gaussian([0.0], [[1.0]]),
            FeatureSetSummary.gaussian([0.0, 0.0], np.eye(2)))


def test_fid_rejects_negative_covariance():
    with pytest.raises(MatrixSqrtError):
        fid(FeatureSetSummary.gaussian([0.0], [[-1.0]]), FeatureSetSummary.gaussian([0.0], [[1.0]]))


def test_summary_needs_two_samples():
    with pytest.raises(EmptyDatasetError):
        FeatureSetSummary.from_features(np.zeros((1, 3)))


def test_summary_flags_low_rank():
    summary = FeatureSetSummary.from_features(np.random.default_rng(2).normal(size=(3, 5)))
    assert summary.low_rank
    assert summary.cov.shape == (5, 5)


def test_fid_by_depth_reports_every_depth(teacher):
    g = torch.Generator().manual_seed(0)
    first = torch.rand(20, *SHAPE, generator=g)
    second = torch.rand(20, *SHAPE, generator=g) * 0.5
    scores = fid_by_depth(teacher, first, second)
    assert set(scores) == set(FEATURE_DEPTHS)
    assert all(value >= 0.0 for value in scores.values())
    same = fid_by_depth(teacher, first, first)
    assert all(value == pytest.approx(0.0, abs=1e-4) for value in same.values())


# ---------------------------------------------------------------- métriques

def test_accuracy_and_per_class_table(always_zero):
    data = ImageBatch(torch.rand(4, *SHAPE), torch.tensor([0, 0, 1, 2]))
    assert accuracy(always_zero, data) == pytest.approx(0.5)

    table = per_class_accuracy(always_zero, data, label_count=LABELS)
    assert list(table.columns) == ["label", "support", "correct", "accuracy"]
    assert table["support"].tolist() == [2, 1, 1, 0]
    assert table["correct"].tolist() == [2, 0, 0, 0]
    assert table["accuracy"].tolist() == [1.0, 0.0, 0.0, 0.0]


def test_agreement_with_itself_is_total(student, batch):
    assert agreement(student, student, batch) == 1.0


def test_accuracy_rejects_empty_data(always_zero):
    empty = ImageBatch(torch.rand(0, *SHAPE), torch.zeros(0, dtype=torch.long))
    with pytest.raises(EmptyDatasetError):
        accuracy(always_zero, empty)


# ---------------------------------------------------------------- similarité

def test_similarity_profile_retention_curve():
    profile = similarity_profile([0.1, 0.5, 0.9])
    assert profile.count == 3
    assert profile.mean == pytest.approx(0.5)
    assert profile.retained_fraction(0.5) == pytest.approx(1 / 3)
    assert profile.retained_fraction(-1.0) == 1.0
    fractions = profile.retained["retained_fraction"].tolist()
    assert all(a >= b for a, b in zip(fractions, fractions[1:]))
    with pytest.raises(KeyError):
        profile.retained_fraction(0.123)


def test_similarity_profile_reads_records():
    records = [
        AugmentationRecord(0, torch.zeros(*SHAPE), label=0, similarities=[0.2, 0.8], mask=[False, True]),
        AugmentationRecord(1, torch.zeros(*SHAPE), label=1, similarities=[0.6], mask=[False]),
    ]
    assert similarity_profile(records).count == 3


def test_similarity_profile_rejects_empty():
    with pytest.raises(EmptyDatasetError):
        similarity_profile([])


def test_intensity_sweep_starts_at_identity(surrogate, batch):
    embedder = LinearClassifier(image_size=8, label_count=LABELS)
    frame = intensity_sweep(surrogate, batch, embedder.embed, intensities=(0.0, 1.0),
                            step_counts=[2, 5], variants_per_image=2)
    assert len(frame) == 4
    assert set(frame.columns) >= {"intensity", "guidance_scale", "steps", "mean_similarity"}
    at_zero = frame.loc[frame["intensity"] == 0.0, "mean_similarity"]
    assert all(value == pytest.approx(1.0, abs=1e-5) for value in at_zero)
    assert surrogate.steps == 5
