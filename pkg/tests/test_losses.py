import math

import numpy as np
import pytest
import torch
import torch.nn.functional as F

from models.lexicon import ClassWeights
from models.train_config import Hyperparams
from training.losses import (bce_terms, itc_loss, itc_similarities, mlr_loss, sigmoid_probs, splc_correct,
                             total_loss)

f64 = torch.float64


def unit_rows(m, d, generator=None):
    z = torch.randn(m, d, dtype=f64, generator=generator)
    return z / z.norm(dim=1, keepdim=True)


# --- sigmoid / BCE ---

def test_sigmoid_values():
    p = sigmoid_probs(torch.tensor([0.0, 50.0, math.log(3.0), -50.0], dtype=f64))
    assert p[0].item() == 0.5
    assert p[1].item() == pytest.approx(1.0, abs=1e-9)
    assert p[2].item() == pytest.approx(0.75, abs=1e-12)
    assert torch.isfinite(p).all()


def test_bce_terms():
    half = torch.tensor([0.5], dtype=f64)
    neg = -bce_terms(half, torch.tensor([0.0], dtype=f64)).item()
    pos = -bce_terms(half, torch.tensor([1.0], dtype=f64)).item()
    assert neg == pytest.approx(0.6931, abs=1e-4)
    assert pos == neg
    assert bce_terms(torch.tensor([1.0 - 1e-12], dtype=f64), torch.tensor([1.0], dtype=f64)).item() == \
        pytest.approx(0.0, abs=1e-9)


# --- SPLC ---

def test_splc_gated_before_changing_epoch():
    p = torch.tensor([[0.1, 0.7, 0.95]], dtype=f64)
    y = torch.tensor([[0.0, 0.0, 1.0]], dtype=f64)
    terms, corrected, mask = splc_correct(p, y, tau=0.6, epoch=0, changing_epoch=1)
    assert torch.equal(terms, bce_terms(p, y))
    assert torch.equal(corrected, y)
    assert not mask.any()


def test_splc_flips_confident_negative():
    terms, corrected, mask = splc_correct(torch.tensor([[0.7]], dtype=f64), torch.tensor([[0.0]], dtype=f64),
                                          tau=0.6, epoch=1, changing_epoch=1)
    assert -terms.item() == pytest.approx(0.3567, abs=1e-4)
    assert corrected.item() == 1.0
    assert mask.tolist() == [True]


def test_splc_boundary_stays_negative():
    terms, corrected, mask = splc_correct(torch.tensor([[0.6]], dtype=f64), torch.tensor([[0.0]], dtype=f64),
                                          tau=0.6, epoch=3, changing_epoch=1)
    assert terms.item() == pytest.approx(math.log(0.4), abs=1e-12)
    assert corrected.item() == 0.0
    assert mask.tolist() == [False]


@pytest.mark.parametrize("tau", [0.3, 0.6, 0.9])
@pytest.mark.parametrize("epoch,changing_epoch", [(0, 1), (1, 1), (2, 1), (0, 0)])
def test_splc_grid_matches_indicator_rule(tau, epoch, changing_epoch):
    values = [round(0.05 * k, 2) for k in range(1, 20)]
    p = torch.tensor(values * 2, dtype=f64)[None]
    y = torch.tensor([0.0] * 19 + [1.0] * 19, dtype=f64)[None]
    terms, corrected, _ = splc_correct(p, y, tau, epoch, changing_epoch)

    active = epoch >= changing_epoch
    for j, (pj, yj) in enumerate(zip(values * 2, [0] * 19 + [1] * 19)):
        positive_form = yj == 1 or (active and pj > tau)
        expected = math.log(pj) if positive_form else math.log(1.0 - pj)
        assert terms[0, j].item() == pytest.approx(expected, abs=1e-12)
        assert corrected[0, j].item() == (1.0 if positive_form else 0.0)


def test_splc_never_clears_bits_and_reduces_to_bce_near_one():
    gen = torch.Generator().manual_seed(7)
    logits = torch.randn(6, 12, dtype=f64, generator=gen) * 3
    y = (torch.rand(6, 12, dtype=f64, generator=gen) > 0.6).to(f64)
    p = sigmoid_probs(logits)
    _, corrected, _ = splc_correct(p, y, tau=0.5, epoch=1, changing_epoch=1)
    assert torch.all(corrected >= y)

    terms, corrected, mask = splc_correct(p, y, tau=1.0 - 1e-9, epoch=1, changing_epoch=1)
    assert torch.equal(terms, bce_terms(p, y))
    assert not mask.any()


def test_splc_rejects_invalid_tau():
    with pytest.raises(ValueError):
        splc_correct(torch.tensor([[0.5]]), torch.tensor([[0.0]]), tau=1.0, epoch=1, changing_epoch=1)


# --- MLR loss ---

def test_mlr_saturated_correct_predictions():
    logits = torch.tensor([[50.0, -50.0, 50.0]], dtype=f64)
    targets = torch.tensor([[1.0, 0.0, 1.0]], dtype=f64)
    report = mlr_loss(logits, targets, np.ones(3), Hyperparams(), epoch=0)
    assert report.loss.item() == pytest.approx(0.0, abs=1e-9)


def test_mlr_uniform_weights_equal_mean_bce_times_classes():
    gen = torch.Generator().manual_seed(3)
    logits = torch.randn(5, 8, dtype=f64, generator=gen)
    targets = (torch.rand(5, 8, dtype=f64, generator=gen) > 0.5).to(f64)
    report = mlr_loss(logits, targets, ClassWeights(np.ones(8)), Hyperparams(), epoch=0)
    reference = F.binary_cross_entropy_with_logits(logits, targets) * 8
    assert report.loss.item() == pytest.approx(reference.item(), rel=1e-9)
    assert report.pseudo_count == 0


def test_mlr_sum_reduction():
    logits = torch.randn(4, 3, dtype=f64)
    targets = torch.zeros(4, 3, dtype=f64)
    mean = mlr_loss(logits, targets, np.ones(3), Hyperparams(), epoch=0).loss
    total = mlr_loss(logits, targets, np.ones(3), Hyperparams(reduction="sum"), epoch=0).loss
    assert total.item() == pytest.approx(4 * mean.item(), rel=1e-12)


def test_mlr_is_linear_in_weights():
    logits = torch.tensor([[0.3, -1.2, 2.0]], dtype=f64)
    targets = torch.tensor([[1.0, 0.0, 0.0]], dtype=f64)
    base = mlr_loss(logits, targets, np.array([1.0, 1.0, 1.0]), Hyperparams(), epoch=0).loss.item()
    doubled = mlr_loss(logits, targets, np.array([1.0, 2.0, 1.0]), Hyperparams(), epoch=0).loss.item()
    class1 = -math.log(1.0 - 1.0 / (1.0 + math.exp(1.2)))
    assert doubled - base == pytest.approx(class1, rel=1e-9)


def test_mlr_reports_pseudo_positives():
    logits = torch.tensor([[2.0, -2.0], [0.0, 3.0]], dtype=f64)
    targets = torch.zeros(2, 2, dtype=f64)
    report = mlr_loss(logits, targets, np.ones(2), Hyperparams(tau=0.6), epoch=1)
    assert report.pseudo_count == 2
    assert report.pseudo_mask.tolist() == [True, True]
    assert report.corrected_targets.tolist() == [[1.0, 0.0], [0.0, 1.0]]


def test_mlr_class_count_mismatch():
    with pytest.raises(ValueError):
        mlr_loss(torch.zeros(2, 3), torch.zeros(2, 3), np.ones(4), Hyperparams(), epoch=0)


def test_mlr_finite_under_saturation():
    logits = torch.tensor([[50.0, -50.0, 50.0, -50.0]], dtype=torch.float32)
    targets = torch.tensor([[0.0, 1.0, 1.0, 0.0]])
    for epoch in (0, 1):
        assert torch.isfinite(mlr_loss(logits, targets, np.ones(4), Hyperparams(), epoch).loss)


@pytest.mark.parametrize("epoch", [0, 1])
def test_mlr_gradient_matches_finite_differences(epoch):
    gen = torch.Generator().manual_seed(11)
    weights = torch.rand(6, dtype=f64, generator=gen) + 0.5
    for _ in range(10):
        logits = torch.randn(3, 6, dtype=f64, generator=gen).requires_grad_()
        targets = (torch.rand(3, 6, dtype=f64, generator=gen) > 0.5).to(f64)
        assert torch.autograd.gradcheck(
            lambda x: mlr_loss(x, targets, weights, Hyperparams(), epoch).loss, (logits,), eps=1e-6, atol=1e-6,
        )


# --- ITC ---

def test_single_pair_is_forced_match():
    z = unit_rows(1, 8)
    sim = itc_similarities(z, unit_rows(1, 8), 0.07)
    assert sim.p_i2t.tolist() == [[1.0]]
    assert itc_loss(sim).item() == pytest.approx(0.0, abs=1e-12)


def test_orthonormal_rows_approach_identity():
    z = torch.eye(4, dtype=f64)
    sim = itc_similarities(z, z, 0.01)
    assert torch.allclose(sim.p_i2t, torch.eye(4, dtype=f64), atol=1e-12)
    assert torch.equal(sim.s_t2i, sim.s_i2t.T)


def test_loss_is_zero_when_probabilities_match_targets():
    z = torch.eye(3, dtype=f64)
    sim = itc_similarities(z, z, 1e-3)
    assert itc_loss(sim).item() == pytest.approx(0.0, abs=1e-12)


def test_identity_targets_equal_symmetric_infonce():
    gen = torch.Generator().manual_seed(5)
    z_img, z_txt = unit_rows(6, 16, gen), unit_rows(6, 16, gen)
    sim = itc_similarities(z_img, z_txt, 0.5)
    logits = z_img @ z_txt.T / 0.5
    labels = torch.arange(6)
    reference = 0.5 * (F.cross_entropy(logits, labels) + F.cross_entropy(logits.T, labels))
    assert itc_loss(sim).item() == pytest.approx(reference.item(), rel=1e-9)
    diag = -0.5 * (sim.log_p_i2t.diagonal() + sim.log_p_t2i.diagonal()).mean()
    assert itc_loss(sim).item() == pytest.approx(diag.item(), rel=1e-9)


def test_temperature_keeps_row_argmax():
    gen = torch.Generator().manual_seed(9)
    z_img, z_txt = unit_rows(8, 16, gen), unit_rows(8, 16, gen)
    reference = itc_similarities(z_img, z_txt, 1.0).p_i2t.argmax(dim=1)
    for temperature in (0.01, 0.07, 0.5, 5.0):
        p = itc_similarities(z_img, z_txt, temperature).p_i2t
        assert torch.equal(p.argmax(dim=1), reference)


def test_itc_permutation_equivariance():
    gen = torch.Generator().manual_seed(4)
    z_img, z_txt = unit_rows(5, 8, gen), unit_rows(5, 8, gen)
    targets = torch.eye(5, dtype=f64)
    targets[1, 3] = 1.0
    perm = torch.tensor([3, 0, 4, 1, 2])
    a = itc_loss(itc_similarities(z_img, z_txt, 0.2, targets))
    b = itc_loss(itc_similarities(z_img[perm], z_txt[perm], 0.2, targets[perm][:, perm]))
    assert a.item() == pytest.approx(b.item(), rel=1e-12)


def test_itc_rejects_bad_inputs():
    z = unit_rows(3, 4)
    with pytest.raises(ValueError):
        itc_similarities(z, z, 0.0)
    with pytest.raises(ValueError):
        itc_similarities(z * 2, z, 0.1)
    with pytest.raises(ValueError):
        itc_similarities(z, z, 0.1, torch.zeros(3, 3, dtype=f64))


def test_itc_finite_at_extreme_temperature():
    gen = torch.Generator().manual_seed(2)
    sim = itc_similarities(unit_rows(6, 8, gen), unit_rows(6, 8, gen), 1e-3)
    assert torch.isfinite(itc_loss(sim))


def test_itc_gradient_matches_finite_differences():
    gen = torch.Generator().manual_seed(12)

    def loss_of(a, b):
        za, zb = a / a.norm(dim=1, keepdim=True), b / b.norm(dim=1, keepdim=True)
        return itc_loss(itc_similarities(za, zb, 0.3))

    for _ in range(10):
        a = torch.randn(4, 5, dtype=f64, generator=gen).requires_grad_()
        b = torch.randn(4, 5, dtype=f64, generator=gen).requires_grad_()
        assert torch.autograd.gradcheck(loss_of, (a, b), eps=1e-6, atol=1e-6)


# --- total ---

def test_total_loss_sums():
    assert total_loss(0.0, 0.0) == 0.0
    assert total_loss(1.5, 0.5) == 2.0


def test_total_gradient_is_sum_of_parts():
    x = torch.tensor([0.4, -0.3], dtype=f64, requires_grad=True)
    mlr = (x ** 2).sum()
    itc = x.exp().sum()
    total_loss(mlr, itc).backward()
    assert torch.allclose(x.grad, 2 * x.detach() + x.detach().exp())
