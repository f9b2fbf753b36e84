import pytest
import torch

from models.contracts import (
    Classifier,
    ImageBatch,
    batch_bn_statistics,
    forward_logits,
    parameter_checksum,
    penultimate_embedding,
    running_bn_statistics,
)
from models.networks import LinearClassifier, build_classifier
from tests.conftest import LABELS, SHAPE
from utils.exceptions import (
    EmptyBatchError,
    InsufficientBatchError,
    NonFiniteOutputError,
    ShapeMismatchError,
)


def test_classifier_satisfies_protocol(teacher):
    assert isinstance(teacher, Classifier)
    assert isinstance(LinearClassifier(), Classifier)


def test_forward_logits_shape(teacher, batch):
    logits = forward_logits(teacher, batch)
    assert logits.shape == (len(batch), LABELS)


def test_head_of_embedding_reproduces_logits(teacher, batch):
    embedding = penultimate_embedding(teacher, batch)
    assert embedding.shape == (len(batch), teacher.feature_dim)
    assert torch.equal(teacher.head(embedding), forward_logits(teacher, batch))


def test_forward_logits_rejects_wrong_shape(teacher):
    with pytest.raises(ShapeMismatchError):
        forward_logits(teacher, torch.rand(2, 1, 16, 16))


def test_forward_logits_rejects_empty_batch(teacher):
    with pytest.raises(EmptyBatchError):
        forward_logits(teacher, torch.rand(0, *SHAPE))


def test_forward_logits_rejects_non_finite_output():
    model = LinearClassifier(image_size=8, label_count=LABELS)
    with torch.no_grad():
        model.head.weight.fill_(float("nan"))
    with pytest.raises(NonFiniteOutputError):
        forward_logits(model, torch.rand(2, *SHAPE))


def test_forward_logits_is_differentiable_in_pixels(teacher, batch):
    images = batch.images.clone().requires_grad_(True)
    forward_logits(teacher, images).sum().backward()
    assert images.grad is not None
    assert images.grad.abs().sum() > 0


def test_batch_statistics_one_entry_per_bn_layer(teacher, batch):
    stats = batch_bn_statistics(teacher, batch)
    assert len(stats) == 2
    assert all(bool((var >= 0).all()) for _, var in stats)


def test_batch_statistics_need_two_images(teacher):
    with pytest.raises(InsufficientBatchError):
        batch_bn_statistics(teacher, torch.rand(1, *SHAPE))


def test_model_without_bn_has_empty_statistics(batch):
    model = LinearClassifier(image_size=8, label_count=LABELS)
    assert len(batch_bn_statistics(model, batch)) == 0
    assert len(running_bn_statistics(model)) == 0


def test_running_statistics_are_a_snapshot(teacher):
    snapshot = running_bn_statistics(teacher)
    snapshot.means[0].add_(1.0)
    assert not torch.equal(snapshot.means[0], running_bn_statistics(teacher).means[0])
    assert running_bn_statistics(teacher).equals(running_bn_statistics(teacher))


def test_checksum_detects_parameter_change(teacher):
    before = parameter_checksum(teacher)
    assert parameter_checksum(teacher) == before
    with torch.no_grad():
        teacher.head.bias.add_(1e-3)
    assert parameter_checksum(teacher) != before


def test_image_batch_checks_labels():
    with pytest.raises(ShapeMismatchError):
        ImageBatch(torch.rand(3, *SHAPE), torch.zeros(2, dtype=torch.long))


def test_image_batch_concat_and_subset(batch):
    joined = ImageBatch.concat([batch, batch.subset([0, 1])])
    assert len(joined) == len(batch) + 2
    assert torch.equal(joined.images[-1], batch.images[1])
    with pytest.raises(EmptyBatchError):
        ImageBatch.concat([])


def test_build_classifier_rejects_unknown_architecture():
    with pytest.raises(ValueError):
        build_classifier("transformer")
