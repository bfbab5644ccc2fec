import math

import numpy as np
import pytest

from conftest import gaussian_classes
from rolin.core import HyperParams, calc_beta
from rolin.data import mean_loss
from rolin.robust_cv import (
    CandidateScore,
    CVConfig,
    SplitEvaluator,
    calc_cost,
    loss_ratio,
    make_splits,
    prefer_top_pcs,
    reliable_prefix,
    robust_cv,
    robust_params,
    score_candidate,
)

FAST = CVConfig(instance_count=1, sigma_grid=(1.0, 10.0), bmax_grid=(0.01, 0.1))


def test_splits_partition():
    splits = make_splits(10, 5, 1, seed=0)
    assert len(splits) == 5
    assert all(len(ho) == 2 for _, ho in splits)
    assert sorted(np.concatenate([ho for _, ho in splits])) == list(range(10))
    for tr, ho in splits:
        assert not set(tr) & set(ho) and len(tr) + len(ho) == 10


def test_splits_remainder_and_instances():
    sizes = sorted(len(ho) for _, ho in make_splits(11, 5, 1, seed=4))
    assert sizes == [2, 2, 2, 2, 3]
    assert len(make_splits(30, 5, 5, seed=0)) == 25
    a = make_splits(13, 5, 2, seed=9)
    b = make_splits(13, 5, 2, seed=9)
    assert all(np.array_equal(x[1], y[1]) for x, y in zip(a, b))
    with pytest.raises(ValueError):
        make_splits(4, 5, 1)


def test_calc_cost_arithmetic():
    s = score_candidate(HyperParams(1), [1, 1], [2, 4], theta_ratio=5)
    assert (s.loss_ratio, s.loss_avg, s.loss_max, s.cost) == (3.0, 3.0, 4.0, 3.0)
    s = score_candidate(HyperParams(1), [0.1, 0.1], [2, 4], theta_ratio=5)
    assert s.loss_ratio == pytest.approx(30.0) and s.cost == 4.0
    s = score_candidate(HyperParams(1), [1], [1], theta_ratio=5)
    assert (s.loss_ratio, s.cost) == (1.0, 1.0)


def test_zero_training_loss_ratio():
    assert loss_ratio([0.0], [0.5]) == math.inf
    assert loss_ratio([0.0], [0.0]) == 1.0
    assert score_candidate(HyperParams(1), [0.0, 1.0], [0.5, 1.0], 5).cost == 1.0


def test_reliable_prefix():
    assert reliable_prefix([2, 3, 9, 2], 5) == 2
    assert reliable_prefix([1, 2, 3], 5) == 3
    assert reliable_prefix([10, 1], 5) == 1


def cand(i, cost, loss_max):
    return CandidateScore(HyperParams(1, float(i)), cost, loss_max, 1.0, cost)


def test_robust_params_examples():
    cands = [cand(0, 1.0, 5), cand(1, 1.05, 1), cand(2, 2.0, 1)]
    assert robust_params(cands, 0.1) == HyperParams(1, 1.0)
    assert robust_params([cand(0, 1.0, 5)], 0.1) == HyperParams(1, 0.0)
    same = [cand(2, 1.0, 1.0), cand(0, 1.0, 1.0), cand(1, 1.0, 1.0)]
    assert robust_params(same, 0.1) == HyperParams(1, 0.0)


def test_gain_rule():
    s0 = CandidateScore(HyperParams(1), 1.0, 1.0, 1.0, 1.0)
    assert prefer_top_pcs(s0, CandidateScore(HyperParams(1, 1.0, 0.1), 0.96, 1, 1, 0.96), 0.05) == s0.psi
    assert prefer_top_pcs(s0, CandidateScore(HyperParams(1, 1.0, 0.1), 0.90, 1, 1, 0.90), 0.05) == HyperParams(1, 1.0, 0.1)


def test_evaluator_matches_calc_beta():
    data = gaussian_classes(20, 6, seed=2)
    splits = make_splits(data.n, 5, 1, seed=1)
    ev = SplitEvaluator(data, splits, "logistic")
    psi = HyperParams(2, 2.15, 0.1, True)
    tr_losses, ho_losses = ev.split_losses(psi)
    for j, (tr, ho) in enumerate(splits):
        m = calc_beta(data.take(tr), psi, "logistic")
        assert mean_loss(m, data.take(ho), "logistic") == ho_losses[j]
        assert mean_loss(m, data.take(tr), "logistic") == tr_losses[j]


def test_calc_cost_uses_cv_objective():
    data = gaussian_classes(20, 6, seed=2)
    splits = make_splits(data.n, 5, 1, seed=1)
    s = calc_cost(data, splits, HyperParams(1), "logistic", "zero_one")
    assert 0 <= s.loss_avg <= s.loss_max <= 1


@pytest.fixture(scope="module")
def cv_run():
    data = gaussian_classes(15, 20, seed=6)
    return data, robust_cv(data, "logistic", FAST)


def test_robust_cv_structure(cv_run):
    data, (psi, diag) = cv_run
    assert psi.k <= diag.k_max[psi.normalize]
    assert psi in {s.psi for s in diag.all_scores()}
    assert all(s.psi.sigma_ratio == 0 and s.psi.b_max == 0 for s in diag.s0_candidates)
    for s in diag.all_scores():
        assert s.cost == (s.loss_avg if s.loss_ratio <= FAST.theta_ratio else s.loss_max)
        assert s.loss_max >= s.loss_avg >= 0
    bvals = FAST.bmax_values(data.n)
    assert {s.psi.b_max for s in diag.candidates} == set(bvals)


def test_diagnostics_export(cv_run, tmp_path):
    _, (psi, diag) = cv_run
    path = tmp_path / "diag.csv"
    diag.to_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0].startswith("k,sigma_ratio,b_max,normalize,loss_avg")
    assert len(lines) == 1 + len(diag.all_scores())
    assert sum(line.endswith("True") for line in lines[1:]) == 1


def test_infinite_gain_threshold_gives_top_pcs():
    data = gaussian_classes(15, 20, seed=6)
    cfg = CVConfig(instance_count=1, sigma_grid=(1.0, 10.0), bmax_grid=(0.01, 0.1), theta_gain=1e9)
    psi, diag = robust_cv(data, "logistic", cfg)
    assert psi == diag.psi_s0_rob
    assert psi.sigma_ratio == 0 and psi.b_max == 0


def test_standard_selection_mode():
    data = gaussian_classes(15, 8, seed=1)
    cfg = CVConfig(instance_count=1, sigma_grid=(1.0,), bmax_grid=(0.1,), selection="standard")
    psi, diag = robust_cv(data, "logistic", cfg)
    assert psi == min(diag.all_scores(), key=lambda s: (s.loss_avg, s.psi)).psi


def test_bmax_grid_scales_with_sqrt_n():
    cfg = CVConfig()
    assert cfg.bmax_values(15) == cfg.bmax_grid
    np.testing.assert_allclose(cfg.bmax_values(60), np.array(cfg.bmax_grid) * 2.0)


def test_config_validation():
    with pytest.raises(ValueError):
        CVConfig(theta_ratio=0)
    with pytest.raises(ValueError):
        CVConfig(fold_count=1)
    with pytest.raises(ValueError):
        CVConfig(sigma_grid=())
    with pytest.raises(ValueError):
        CVConfig(selection="one_sd")


def test_deterministic_under_seed():
    data = gaussian_classes(15, 10, seed=8)
    a = robust_cv(data, "squared_hinge", FAST)
    b = robust_cv(data, "squared_hinge", FAST)
    assert a[0] == b[0]
    assert a[1].rows() == b[1].rows()
