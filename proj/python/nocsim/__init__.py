"""Gated multi-user image transmission over fixed-angle sign codebooks."""

from ._core import (
    Error,
    bpsk_ber_theory,
    cdma_ber,
    fairness_loss,
    generate_codebook,
    mse,
    noma_ber,
    orth_loss,
    psnr,
    round_to_parity,
    train_and_evaluate,
    walsh,
)

__all__ = [
    "Error",
    "bpsk_ber_theory",
    "cdma_ber",
    "fairness_loss",
    "generate_codebook",
    "mse",
    "noma_ber",
    "orth_loss",
    "psnr",
    "round_to_parity",
    "train_and_evaluate",
    "walsh",
]
