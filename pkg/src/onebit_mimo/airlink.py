"""Received-signal generation for the data and pilot phases, 1-bit
quantization, and MRC soft symbols.

All functions accept leading batch dimensions; a single trial is the
unbatched case. Noise arguments exist as test hooks for exact-value
checks; production paths always draw noise from the supplied stream.
"""

from dataclasses import dataclass

import numpy as np

from .channel import complex_normal
from .pilots import PilotMatrix


def quantize(X: np.ndarray, rho: float, K: int) -> np.ndarray:
    """Elementwise 1-bit quantization of in-phase and quadrature parts.

    Returns sqrt((rho*K+1)/2) * (sgn(Re X) + j sgn(Im X)) with sgn(0) := +1,
    so every output has squared modulus rho*K + 1 (the quantizer output
    variance matches the input variance).
    """
    if rho <= 0:
        raise ValueError(f"rho must be positive, got {rho}")
    if K < 1:
        raise ValueError(f"K must be >= 1, got {K}")
    X = np.asarray(X)
    scale = np.sqrt((rho * K + 1.0) / 2.0)
    return scale * (
        np.where(X.real >= 0, 1.0, -1.0) + 1j * np.where(X.imag >= 0, 1.0, -1.0)
    )


@dataclass(frozen=True)
class ReceivedBlock:
    """Data-phase signals: unquantized y, quantized r = Q(y), symbols used."""

    y: np.ndarray
    r: np.ndarray
    x: np.ndarray


@dataclass(frozen=True)
class PilotBlock:
    """Pilot-phase signals: Yp (.., M, tau), its column-stacked form yp,
    and the quantized rp = Q(yp)."""

    Yp: np.ndarray
    yp: np.ndarray
    rp: np.ndarray


def vec_columns(A: np.ndarray) -> np.ndarray:
    """Column-stacking vectorization over the trailing two axes.

    For A of shape (..., M, tau) returns shape (..., M*tau) with element
    u*M + m equal to A[..., m, u].
    """
    swapped = np.swapaxes(A, -1, -2)
    return swapped.reshape(*swapped.shape[:-2], -1)


def uplink_data_block(H, x, rho, rng=None, *, noise=None) -> ReceivedBlock:
    """Simultaneous data transmission: y = sqrt(rho) H x + z, r = Q(y)."""
    H = np.asarray(H)
    x = np.asarray(x)
    M, K = H.shape[-2:]
    if x.shape[-1] != K:
        raise ValueError(f"x has {x.shape[-1]} symbols but H has K={K} columns")
    signal = np.sqrt(rho) * np.einsum("...mk,...k->...m", H, x)
    if noise is None:
        noise = complex_normal(rng, signal.shape)
    y = signal + noise
    return ReceivedBlock(y=y, r=quantize(y, rho, K), x=x)


def uplink_pilot_block(H, pm: PilotMatrix, rho, rng=None, *, noise=None) -> PilotBlock:
    """Pilot transmission: Yp = sqrt(rho) H P^H + Zp, rp = Q(vec(Yp))."""
    H = np.asarray(H)
    M, K = H.shape[-2:]
    if pm.K != K:
        raise ValueError(f"pilot matrix has K={pm.K} but H has K={K} columns")
    signal = np.sqrt(rho) * np.einsum("...mk,uk->...mu", H, pm.P.conj())
    if noise is None:
        noise = complex_normal(rng, signal.shape)
    Yp = signal + noise
    yp = vec_columns(Yp)
    return PilotBlock(Yp=Yp, yp=yp, rp=quantize(yp, rho, K))


def mrc_soft_symbols(H_hat, r) -> np.ndarray:
    """MRC combining with V = H_hat: soft symbol k is h_hat_k^H r."""
    H_hat = np.asarray(H_hat)
    r = np.asarray(r)
    if H_hat.shape[-2] != r.shape[-1]:
        raise ValueError(
            f"combiner has {H_hat.shape[-2]} rows but r has {r.shape[-1]} entries"
        )
    return np.einsum("...mk,...m->...k", H_hat.conj(), r)
