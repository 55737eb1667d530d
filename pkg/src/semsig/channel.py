"""Noisy transmission of binary signatures.

Signature bits are sent as unit-energy BPSK symbols. Three channel kinds
are supported: additive white Gaussian noise, Rayleigh fading, and Rician
fading with a configurable line-of-sight ratio. The per-bit SNR (dB)
fixes the noise variance at sigma^2 = 1/(2 * 10^(snr_db/10)) per real
dimension. Fading channels draw an independent coefficient per bit
(optionally one per signature), and the receiver divides it back out
before the hard sign decision, i.e. coherent detection with perfect
channel knowledge.
"""

from dataclasses import dataclass

import numpy as np
from scipy.special import erfc

from .validation import as_signature_matrix, as_signature_vector

_KINDS = ("awgn", "rayleigh", "rician")


@dataclass(frozen=True)
class ChannelConfig:
    """Channel kind, per-bit SNR, Rician ratio, and noise seed."""

    kind: str = "awgn"
    snr_db: float = 10.0
    rician_k_db: float = 0.0
    seed: int = 0
    block_fading: bool = False

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"kind must be one of {_KINDS}, got {self.kind!r}")
        if not np.isfinite(self.snr_db):
            raise ValueError(f"snr_db must be finite, got {self.snr_db}")
        if self.kind == "rician" and not np.isfinite(self.rician_k_db):
            raise ValueError(f"rician_k_db must be finite, got {self.rician_k_db}")


@dataclass(frozen=True)
class TransmissionReport:
    """Sent and decided bits plus the realized error rate."""

    sent_bits: np.ndarray
    received_bits: np.ndarray
    flipped: int
    ber: float


def _fade_coefficients(rng, shape, config):
    """Complex unit-mean-power fading draws for one transmission."""
    scatter = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)
    if config.kind == "rayleigh":
        return scatter
    k = 10.0 ** (config.rician_k_db / 10.0)
    return np.sqrt(k / (k + 1.0)) + np.sqrt(1.0 / (k + 1.0)) * scatter


def _send_rows(bits, config):
    """Corrupt a +-1 matrix row by row with per-row derived seeds.

    Row i uses the i-th child of the config seed, so results do not
    depend on how rows are batched or scheduled.
    """
    n, width = bits.shape
    sigma = np.sqrt(0.5 * 10.0 ** (-config.snr_db / 10.0))
    out = np.empty_like(bits)
    children = np.random.SeedSequence(config.seed).spawn(n)
    for i in range(n):
        rng = np.random.default_rng(children[i])
        row = bits[i]
        if config.kind == "awgn":
            received = row + sigma * rng.standard_normal(width)
        else:
            shape = 1 if config.block_fading else width
            h = _fade_coefficients(rng, shape, config)
            noise = sigma * (rng.standard_normal(width) + 1j * rng.standard_normal(width))
            received = ((row * h + noise) / h).real
        out[i] = np.where(received >= 0.0, 1.0, -1.0)
    return out


def transmit_signature(sig, config):
    """Send one signature through the channel; returns a report."""
    sig = as_signature_vector(sig)
    received = _send_rows(sig.reshape(1, -1), config)[0]
    flipped = int(np.count_nonzero(received != sig))
    return TransmissionReport(
        sent_bits=sig.astype(np.int8),
        received_bits=received.astype(np.int8),
        flipped=flipped,
        ber=flipped / sig.size,
    )


def transmit_batch(codes, config):
    """Send every row of a signature matrix; returns (received, report).

    Bits are drawn independently; the report pools the error rate over
    all rows. Row order is preserved.
    """
    codes = as_signature_matrix(codes, "codes")
    received = _send_rows(codes, config)
    flipped = int(np.count_nonzero(received != codes))
    report = TransmissionReport(
        sent_bits=codes.astype(np.int8),
        received_bits=received.astype(np.int8),
        flipped=flipped,
        ber=flipped / codes.size,
    )
    return received.astype(np.int8), report


def awgn_ber(snr_db):
    """Closed-form BPSK error rate on the Gaussian channel."""
    gamma = 10.0 ** (np.asarray(snr_db, dtype=np.float64) / 10.0)
    return 0.5 * erfc(np.sqrt(gamma))


def rayleigh_ber(snr_db):
    """Closed-form BPSK error rate under Rayleigh fading."""
    gamma = 10.0 ** (np.asarray(snr_db, dtype=np.float64) / 10.0)
    return 0.5 * (1.0 - np.sqrt(gamma / (1.0 + gamma)))
