import math

import pytest
import torch

from augmentation.pipeline import augment_pipeline
from distillation.losses import kd_loss, student_loss, total_loss
from distillation.orchestrator import Schedule, run_dda
from distillation.trainer import make_distill_state, train_student_epoch
from memory_bank.bank import MemoryBank
from models.checkpoint import CheckpointManager
from models.contracts import ImageBatch, parameter_checksum
from models.networks import DiscriminatorHead, Generator, LinearClassifier, discriminator_input_dim
from synthesis.hyperparams import HyperParams
from tests.conftest import LABELS, SHAPE, tiny_classifier
from utils.exceptions import (
    BackendProtocolError,
    EmptyDatasetError,
    InvalidTemperatureError,
    NonFiniteLossError,
    ShapeMismatchError,
)


def _reference_kd(teacher_logits, student_logits, tau):
    total = 0.0
    for t_row, s_row in zip(teacher_logits.tolist(), student_logits.tolist()):
        t = [v / tau for v in t_row]
        s = [v / tau for v in s_row]
        t_norm = max(t) + math.log(sum(math.exp(v - max(t)) for v in t))
        s_norm = max(s) + math.log(sum(math.exp(v - max(s)) for v in s))
        for tv, sv in zip(t, s):
            q = math.exp(tv - t_norm)
            total += q * ((tv - t_norm) - (sv - s_norm))
    return total / len(teacher_logits)


class BrokenBackend:
    kind = "remote"
    steps = 1
    guidance_scale = 0.5

    def generate(self, latent, source, seeds, intensity):
        raise BackendProtocolError("réponse inattendue")

    def generate_many(self, requests):
        raise BackendProtocolError("réponse inattendue")


# ---------------------------------------------------------------- pertes

def test_kd_of_identical_distributions_is_zero():
    logits = torch.randn(4, LABELS)
    assert float(kd_loss(logits, logits.clone(), 4.0)) == pytest.approx(0.0, abs=1e-6)


def test_kd_matches_scalar_reference():
    g = torch.Generator().manual_seed(0)
    teacher_logits = torch.randn(5, LABELS, generator=g) * 2
    student_logits = torch.randn(5, LABELS, generator=g) * 2
    for tau in (1.0, 4.0):
        expected = _reference_kd(teacher_logits, student_logits, tau) * tau ** 2
        assert float(kd_loss(teacher_logits, student_logits, tau)) == pytest.approx(expected, rel=1e-5)


def test_kd_vanishes_at_high_temperature():
    g = torch.Generator().manual_seed(1)
    teacher_logits = torch.randn(6, LABELS, generator=g)
    student_logits = torch.randn(6, LABELS, generator=g)
    sharp = float(kd_loss(teacher_logits, student_logits, 1.0, scale_by_temperature=False))
    soft = float(kd_loss(teacher_logits, student_logits, 1000.0, scale_by_temperature=False))
    assert soft < sharp
    assert soft == pytest.approx(0.0, abs=1e-5)


def test_kd_rejects_invalid_inputs():
    logits = torch.zeros(2, LABELS)
    with pytest.raises(InvalidTemperatureError):
        kd_loss(logits, logits, 0.0)
    with pytest.raises(ShapeMismatchError):
        kd_loss(logits, torch.zeros(2, LABELS + 1), 1.0)


def test_kd_gradcheck():
    g = torch.Generator().manual_seed(2)
    teacher_logits = torch.randn(3, LABELS, generator=g, dtype=torch.float64)
    student_logits = torch.randn(3, LABELS, generator=g, dtype=torch.float64, requires_grad=True)
    assert torch.autograd.gradcheck(lambda s: kd_loss(teacher_logits, s, 2.0), (student_logits,))


def test_total_loss_combines_weighted_terms():
    hp = HyperParams(eta_kl=1.0, eta_synth=0.5, eta_self=2.0)
    assert total_loss(1.0, 2.0, 3.0, hp) == pytest.approx(8.0)
    kd = torch.tensor(1.0, requires_grad=True)
    synth = torch.tensor(2.0, requires_grad=True)
    total_loss(kd, synth, torch.tensor(0.0), hp).backward()
    assert synth.grad is None
    assert float(kd.grad) == 1.0
    assert float(student_loss(torch.tensor(1.0), torch.tensor(3.0), hp)) == pytest.approx(7.0)


# ---------------------------------------------------------------- époques

def test_epoch_updates_student_only(teacher, student, batch, hp):
    state = make_distill_state(student, hp, total_epochs=2)
    teacher_checksum = parameter_checksum(teacher)
    student_checksum = parameter_checksum(student)

    metrics = train_student_epoch(state, batch, teacher, hp, batch_size=4,
                                  generator=torch.Generator().manual_seed(0))

    assert metrics.steps == 2 and metrics.samples == len(batch)
    assert len(state.history) == 2 and state.epoch == 1
    assert parameter_checksum(teacher) == teacher_checksum
    assert parameter_checksum(student) != student_checksum
    assert all(math.isfinite(step.total) for step in state.history)


def test_epoch_on_augmentation_records(teacher, student, batch, surrogate, encoder, hp):
    records = augment_pipeline(batch, student, surrogate, hp, encoder=encoder, teacher=teacher)
    state = make_distill_state(student, hp, total_epochs=1)
    metrics = train_student_epoch(state, records, teacher, hp, synth_objective=1.5)
    assert metrics.samples >= len(batch)
    assert all(step.synth == 1.5 for step in state.history)


def test_epoch_rejects_empty_data(teacher, student, hp):
    state = make_distill_state(student, hp, total_epochs=1)
    with pytest.raises(EmptyDatasetError):
        train_student_epoch(state, [], teacher, hp)


def test_non_finite_loss_keeps_last_parameters(student, batch, hp):
    broken = LinearClassifier(image_size=8, label_count=LABELS)
    with torch.no_grad():
        broken.head.bias.fill_(float("nan"))
    state = make_distill_state(student, hp, total_epochs=1)
    before = parameter_checksum(student)
    with pytest.raises(NonFiniteLossError):
        train_student_epoch(state, batch, broken, hp)
    assert parameter_checksum(student) == before


# ---------------------------------------------------------------- orchestration

def _models(teacher, seed=0):
    torch.manual_seed(seed)
    student = tiny_classifier(seed=seed + 1)
    gen = Generator(latent_dim=8, image_shape=SHAPE, base_channels=4)
    disc = DiscriminatorHead(discriminator_input_dim(teacher), hidden_dim=16, projection_dim=8)
    return student, gen, disc


def _schedule(rounds=2):
    return Schedule(rounds=rounds, epochs_per_round=1, synthesis_steps=2,
                    synthetic_batch_size=8, train_batch_size=8, max_negatives=8)


@pytest.fixture
def eval_data():
    g = torch.Generator().manual_seed(11)
    return ImageBatch(torch.rand(12, *SHAPE, generator=g), torch.arange(12) % LABELS)


def test_empty_schedule_leaves_student_unchanged(teacher, surrogate, encoder, hp, eval_data):
    student, gen, disc = _models(teacher)
    before = parameter_checksum(student)
    _, report = run_dda(teacher, student, gen, disc, MemoryBank(16), surrogate, hp, _schedule(0),
                        encoder=encoder, eval_data=eval_data)
    assert parameter_checksum(student) == before
    assert report.rounds == []
    assert report.final_accuracy == report.initial_accuracy
    assert report.succeeded


def test_run_dda_reports_every_round(teacher, surrogate, encoder, hp, eval_data, tmp_path):
    student, gen, disc = _models(teacher)
    bank = MemoryBank(12)
    checksum = parameter_checksum(teacher)
    rows = []

    _, report = run_dda(
        teacher, student, gen, disc, bank, surrogate, hp, _schedule(2),
        encoder=encoder, eval_data=eval_data, seed=3,
        checkpoints=CheckpointManager(tmp_path / "checkpoints"),
        on_metrics=rows.append,
    )

    assert report.succeeded
    assert len(report.rounds) == 2
    assert len(report.accuracy_trajectory) == 2
    assert all(0.0 <= acc <= 1.0 for acc in report.accuracy_trajectory)
    assert all(0.0 <= f <= 1.0 for f in report.retained_fractions)
    assert report.rounds[1].pool_size > report.rounds[0].pool_size
    assert report.teacher_checksum == checksum == parameter_checksum(teacher)
    assert bank.size == 12
    assert len(report.loss_history) == sum(e["steps"] for r in report.rounds for e in r.epochs)
    assert {row["kind"] for row in rows} == {"eval", "round", "epoch"}
    assert (tmp_path / "checkpoints" / "last" / "student").exists()
    assert (tmp_path / "checkpoints" / "last" / "memory_bank.pt").exists()


def test_run_dda_names_failing_stage(teacher, encoder, hp, eval_data):
    student, gen, disc = _models(teacher)
    _, report = run_dda(teacher, student, gen, disc, MemoryBank(16), BrokenBackend(), hp, _schedule(2),
                        encoder=encoder, eval_data=eval_data)
    assert not report.succeeded
    assert report.failed_stage == "augmentation"
    assert report.rounds == []


@pytest.mark.slow
def test_run_dda_is_reproducible(teacher, surrogate, encoder, hp, eval_data):
    def run():
        student, gen, disc = _models(teacher, seed=5)
        _, report = run_dda(teacher, student, gen, disc, MemoryBank(16), surrogate, hp, _schedule(2),
                            encoder=encoder, eval_data=eval_data, seed=9)
        return report

    first, second = run(), run()
    assert first.loss_history == second.loss_history
    assert first.accuracy_trajectory == second.accuracy_trajectory


@pytest.mark.parametrize("ablate", ["none", "no-filter", "no-diffusion", "both"])
def test_run_dda_leaves_teacher_unchanged(teacher, surrogate, encoder, hp, eval_data, ablate):
    student, gen, disc = _models(teacher)
    before = parameter_checksum(teacher)
    _, report = run_dda(teacher, student, gen, disc, MemoryBank(16), surrogate, hp, _schedule(2),
                        encoder=encoder, eval_data=eval_data, ablate=ablate)
    assert report.succeeded
    assert parameter_checksum(teacher) == before == report.teacher_checksum


def test_both_ablation_also_drops_contrast(teacher, surrogate, encoder, hp, eval_data):
    def run(ablate):
        student, gen, disc = _models(teacher)
        _, report = run_dda(teacher, student, gen, disc, MemoryBank(16), surrogate, hp, _schedule(2),
                            encoder=encoder, eval_data=eval_data, ablate=ablate)
        return report

    sources_only, neither = run("no-diffusion"), run("both")
    assert all(r.synthesis["contrastive"] > 0 for r in sources_only.rounds)
    assert all(r.synthesis["contrastive"] == 0.0 for r in neither.rounds)
    assert all(r.retained_fraction == 0.0 for r in neither.rounds)
    assert [r.pool_size for r in neither.rounds] == [r.pool_size for r in sources_only.rounds]
