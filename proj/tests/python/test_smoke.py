import math

import pytest

import nocsim


def test_walsh_rows_are_orthogonal():
    w = nocsim.walsh(8)
    assert len(w) == 8
    for i in range(8):
        for j in range(i + 1, 8):
            assert sum(a * b for a, b in zip(w[i], w[j])) == 0


def test_codebook_hits_the_parity_rounded_target():
    book = nocsim.generate_codebook(length=32, users=2, theta_deg=60, seed=1)
    target = nocsim.round_to_parity(32 * math.cos(math.radians(60)), 32)
    assert target == 16
    dot = sum(a * b for a, b in zip(book["words"][0], book["words"][1]))
    assert dot == target
    assert abs(book["angles_deg"][0][1] - 60.0) < 1.0


def test_codebook_rejects_non_power_of_two():
    with pytest.raises(nocsim.Error):
        nocsim.generate_codebook(length=12, users=2, theta_deg=60)


def test_loss_values():
    assert nocsim.orth_loss([[1.0, 0.0], [0.0, 1.0]]) == 0.0
    assert nocsim.orth_loss([[1.0, 0.0], [1.0, 0.0]]) == pytest.approx(1.0)
    assert nocsim.fairness_loss([0.1, 0.3]) == pytest.approx(0.1, rel=1e-12)
    assert nocsim.psnr([1.0, 0.0], [1.0, 0.0]) == 120.0


def test_bpsk_theory_frozen_value():
    assert nocsim.bpsk_ber_theory(0.0) == pytest.approx(
        0.07864960352514256, rel=1e-12
    )


def test_noiseless_cdma_is_exact():
    assert nocsim.cdma_ber(users=3, snr_db=400.0, bits=500, seed=1) == [
        0.0,
        0.0,
        0.0,
    ]


def test_noma_sic_at_high_snr():
    ber1, ber2 = nocsim.noma_ber(alpha=0.8, snr_db=20.0, bits=20000, seed=2)
    assert ber1 < 1e-2
    assert ber2 < 1e-2


def test_train_and_evaluate_smoke():
    kwargs = dict(
        length=8,
        users=2,
        theta_deg=60,
        hidden=5,
        feature_dim=8,
        tokens=2,
        nsm_latent=6,
        nsm_depth=2,
        learning_rate=5e-3,
        epochs=2,
        batch_size=8,
        dataset_size=16,
        seed=3,
        snr_grid=[0.0, 10.0],
        eval_batches=1,
        eval_batch_size=4,
        subspace_rank=2,
    )
    out = nocsim.train_and_evaluate(**kwargs)
    assert len(out["trace"]) == 2
    assert all(math.isfinite(e["total"]) for e in out["trace"])
    assert out["symbols_per_image"] == 4
    assert len(out["mse"]) == 2 and len(out["mse"][0]) == 2
    assert out["codebook"]["length"] == 8

    again = nocsim.train_and_evaluate(**kwargs)
    assert again["trace"] == out["trace"]
    assert again["psnr"] == out["psnr"]
