import math
from collections import Counter

import pytest
import torch

from memory_bank.bank import MemoryBank
from memory_bank.views import AugmentationPolicy
from models.contracts import BNStats, ImageBatch, parameter_checksum
from models.networks import (
    DiscriminatorHead,
    Generator,
    LinearClassifier,
    discriminator_input_dim,
    make_projector,
)
from synthesis.hyperparams import HyperParams
from synthesis.losses import (
    bn_regularization_loss,
    class_prior_loss,
    inversion_loss,
    synthesis_objective,
)
from synthesis.synthesizer import SynthesisRound, balanced_labels, run_synthesis_round
from tests.conftest import LABELS, SHAPE
from utils.cache import RoundCache
from utils.exceptions import (
    EmptyBatchError,
    InvalidHyperParameterError,
    InvalidLabelError,
    StatisticsMismatchError,
)


def _reference_bn(batch_stats, running):
    total = 0.0
    for (mu_x, var_x), (mu, var) in zip(batch_stats, running):
        total += math.sqrt(sum((a - b) ** 2 for a, b in zip(mu_x.tolist(), mu.tolist())))
        total += math.sqrt(sum((a - b) ** 2 for a, b in zip(var_x.tolist(), var.tolist())))
    return total


def _reference_ce(logits, targets):
    total = 0.0
    for row, target in zip(logits.tolist(), targets.tolist()):
        top = max(row)
        log_norm = top + math.log(sum(math.exp(v - top) for v in row))
        total += log_norm - row[target]
    return total / len(targets)


def test_class_prior_uniform_logits_is_log_label_count():
    logits = torch.zeros(6, LABELS)
    targets = torch.tensor([0, 1, 2, 3, 0, 1])
    assert float(class_prior_loss(logits, targets)) == pytest.approx(math.log(LABELS))


def test_class_prior_matches_scalar_reference():
    g = torch.Generator().manual_seed(0)
    logits = torch.randn(5, LABELS, generator=g) * 3
    targets = torch.tensor([3, 0, 1, 1, 2])
    assert float(class_prior_loss(logits, targets)) == pytest.approx(
        _reference_ce(logits, targets), rel=1e-5
    )


def test_class_prior_rejects_label_out_of_range():
    with pytest.raises(InvalidLabelError):
        class_prior_loss(torch.zeros(2, LABELS), torch.tensor([0, LABELS]))


def test_class_prior_gradcheck():
    g = torch.Generator().manual_seed(4)
    logits = torch.randn(5, LABELS, generator=g, dtype=torch.float64, requires_grad=True)
    targets = torch.tensor([0, 3, 1, 2, 2])
    assert torch.autograd.gradcheck(lambda x: class_prior_loss(x, targets), (logits,))


def test_bn_loss_zero_when_statistics_match():
    stats = BNStats([torch.tensor([0.1, 0.2])], [torch.tensor([1.0, 2.0])])
    assert float(bn_regularization_loss(stats, stats)) == 0.0


def test_bn_loss_hand_computed_case():
    batch_stats = BNStats([torch.tensor([0.3, 0.4])], [torch.tensor([1.0, 1.0])])
    running = BNStats([torch.tensor([0.0, 0.0])], [torch.tensor([1.0, 1.0])])
    assert float(bn_regularization_loss(batch_stats, running)) == pytest.approx(0.5)


def test_bn_loss_matches_scalar_reference():
    g = torch.Generator().manual_seed(1)
    batch_stats = BNStats(
        [torch.randn(3, generator=g), torch.randn(5, generator=g)],
        [torch.rand(3, generator=g), torch.rand(5, generator=g)],
    )
    running = BNStats(
        [torch.randn(3, generator=g), torch.randn(5, generator=g)],
        [torch.rand(3, generator=g), torch.rand(5, generator=g)],
    )
    assert float(bn_regularization_loss(batch_stats, running)) == pytest.approx(
        _reference_bn(batch_stats, running), rel=1e-5
    )


def test_bn_loss_empty_model_is_zero():
    assert float(bn_regularization_loss(BNStats(), BNStats())) == 0.0


def test_bn_loss_rejects_mismatched_layers():
    one = BNStats([torch.zeros(2)], [torch.ones(2)])
    with pytest.raises(StatisticsMismatchError):
        bn_regularization_loss(one, BNStats())
    with pytest.raises(StatisticsMismatchError):
        bn_regularization_loss(one, BNStats([torch.zeros(3)], [torch.ones(3)]))


def test_bn_loss_gradcheck():
    g = torch.Generator().manual_seed(2)
    mean = torch.randn(4, generator=g, dtype=torch.float64, requires_grad=True)
    var = torch.rand(4, generator=g, dtype=torch.float64, requires_grad=True)
    running = BNStats([torch.zeros(4, dtype=torch.float64)], [torch.full((4,), 2.0, dtype=torch.float64)])
    assert torch.autograd.gradcheck(
        lambda m, v: bn_regularization_loss(BNStats([m], [v]), running), (mean, var)
    )


def test_inversion_loss_is_linear():
    hp = HyperParams(alpha=2.0, beta=3.0)
    assert inversion_loss(1.5, 0.5, hp) == pytest.approx(4.5)
    assert inversion_loss(0.0, 0.0, hp) == 0.0


def test_objective_without_contrast_is_weighted_inversion(teacher, disc, batch):
    hp = HyperParams(alpha_prime=2.0, beta_prime=0.0)
    loss = synthesis_objective(batch, None, teacher, make_projector(disc, teacher), hp)
    assert loss.contrastive == 0.0
    assert float(loss.total) == pytest.approx(2.0 * loss.inversion, rel=1e-6)
    assert loss.inversion == pytest.approx(hp.alpha * loss.cls + hp.beta * loss.bn, rel=1e-5)


def test_objective_uses_in_batch_negatives_with_empty_bank(teacher, disc, batch, hp):
    loss = synthesis_objective(
        batch, MemoryBank(16), teacher, make_projector(disc, teacher), hp,
        generator=torch.Generator().manual_seed(0),
    )
    assert math.isfinite(loss.contrastive)
    expected = hp.alpha_prime * loss.inversion + hp.beta_prime * loss.contrastive
    assert float(loss.total) == pytest.approx(expected, rel=1e-5)


def test_objective_is_differentiable_in_pixels(teacher, disc, batch, hp):
    images = batch.images.clone().requires_grad_(True)
    loss = synthesis_objective(
        ImageBatch(images, batch.labels), None, teacher, make_projector(disc, teacher), hp,
        policy=AugmentationPolicy.identity(),
    )
    loss.total.backward()
    assert images.grad is not None and bool(torch.isfinite(images.grad).all())


def test_objective_rejects_empty_batch(teacher, disc, hp):
    empty = ImageBatch(torch.rand(0, *SHAPE), torch.zeros(0, dtype=torch.long))
    with pytest.raises(EmptyBatchError):
        synthesis_objective(empty, None, teacher, make_projector(disc, teacher), hp)


def test_objective_without_bn_layers():
    model = LinearClassifier(image_size=8, label_count=LABELS, hidden=6)
    batch = ImageBatch(torch.rand(4, *SHAPE), torch.tensor([0, 1, 2, 3]))
    loss = synthesis_objective(batch, None, model, lambda x: x.flatten(1), HyperParams(beta_prime=0.0))
    assert loss.bn == 0.0


def test_balanced_labels_counts():
    labels = balanced_labels(10, LABELS, torch.Generator().manual_seed(0))
    counts = Counter(labels.tolist())
    assert sum(counts.values()) == 10
    assert set(counts.values()) <= {10 // LABELS, 10 // LABELS + 1}


def test_round_configuration_is_validated():
    with pytest.raises(InvalidHyperParameterError):
        SynthesisRound(round_index=0, batch_size=1, label_count=LABELS)
    with pytest.raises(InvalidHyperParameterError):
        SynthesisRound(round_index=-1, batch_size=8, label_count=LABELS)
    with pytest.raises(InvalidHyperParameterError):
        SynthesisRound(round_index=0, batch_size=8, label_count=LABELS, step_count=0)


@pytest.mark.parametrize("field, value", [
    ("omega", 1.5),
    ("tau", 0.0),
    ("augmentations_per_image", 0),
    ("beta", -1.0),
])
def test_hyperparameters_outside_domain_are_rejected(field, value):
    with pytest.raises(InvalidHyperParameterError) as exc:
        HyperParams(**{field: value})
    assert exc.value.details["name"] == field
    assert exc.value.stage == "config"


def test_unknown_hyperparameter_is_rejected():
    with pytest.raises(InvalidHyperParameterError):
        HyperParams(omegaa=0.5)


def test_synthesis_round_produces_best_batch(teacher, generator_net, disc, hp, tmp_path):
    checksum = parameter_checksum(teacher)
    round_cfg = SynthesisRound(round_index=0, batch_size=8, label_count=LABELS, step_count=3, seed=5)
    result = run_synthesis_round(
        generator_net, teacher, disc, MemoryBank(32), hp, round_cfg,
        cache=RoundCache(tmp_path / "synth_cache"),
    )

    assert len(result.batch) == 8
    assert result.batch.image_shape == SHAPE
    assert float(result.batch.images.min()) >= 0.0 and float(result.batch.images.max()) <= 1.0
    assert Counter(result.batch.labels.tolist()) == Counter({0: 2, 1: 2, 2: 2, 3: 2})
    assert len(result.history) == 4
    assert result.components["objective"] <= result.initial_objective
    assert result.components["objective"] == min(h["objective"] for h in result.history)
    assert parameter_checksum(teacher) == checksum

    cache = RoundCache(tmp_path / "synth_cache")
    assert cache.rounds() == [0]
    assert cache.read_manifest(0)["labels"] == result.batch.labels.tolist()


def test_synthesis_round_is_reproducible(teacher, hp):
    def run():
        torch.manual_seed(7)
        gen = Generator(latent_dim=8, image_shape=SHAPE, base_channels=4)
        head = DiscriminatorHead(discriminator_input_dim(teacher), hidden_dim=16, projection_dim=8)
        round_cfg = SynthesisRound(round_index=1, batch_size=8, label_count=LABELS, step_count=2, seed=3)
        return run_synthesis_round(gen, teacher, head, MemoryBank(16), hp, round_cfg)

    first, second = run(), run()
    assert torch.equal(first.batch.images, second.batch.images)
    assert first.history == second.history
