"""Block-fading physical layer: channel tensor, messages, noise, received signal.

Coefficients h[i, j, t] connect transmitter j to receiver i in slot t and are
drawn i.i.d. CN(0, 1), with exact zeros resampled so that phase-2 precoders
may divide by any coefficient. All containers are immutable after
construction and safe to share across simulation workers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "ChannelRealization",
    "MessageSet",
    "NoiseModel",
    "generate_channels",
    "generate_messages",
    "received_signal",
]


def _complex_normal(rng: np.random.Generator, shape, variance: float = 1.0) -> np.ndarray:
    """Circularly symmetric complex Gaussian samples with the given variance."""
    scale = np.sqrt(variance / 2.0)
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


@dataclass(frozen=True)
class ChannelRealization:
    """Fading coefficients for M transmitters, N receivers over T slots.

    Attributes
    ----------
    h : ndarray
        Complex array of shape (N, M, T); h[i, j, t] is the coefficient from
        transmitter j to receiver i in slot t. Every entry has magnitude > 0.
    seed : int
        Seed that reproduces the tensor bit-exactly via generate_channels.
    """

    M: int
    N: int
    T: int
    h: np.ndarray
    seed: int


@dataclass(frozen=True)
class MessageSet:
    """Independent message symbols w[i, j, c] for receiver i from transmitter j.

    The copy axis c covers the k replicas used by schedules that double the
    message load. Symbols are i.i.d. CN(0, 1), i.e. unit average power.
    """

    M: int
    N: int
    k: int
    w: np.ndarray  # complex, shape (N, M, k)
    seed: int


@dataclass(frozen=True)
class NoiseModel:
    """Additive receiver noise configuration.

    When enabled, the sample at (receiver i, slot t) is a deterministic
    function of (seed, N, T, i, t), so repeated queries agree with the grid
    drawn by sample_grid. Disabled models contribute exactly zero.
    """

    enabled: bool
    variance: float = 1.0
    seed: int = 0

    def sample_grid(self, N: int, T: int) -> np.ndarray:
        if not self.enabled:
            return np.zeros((N, T), dtype=complex)
        if self.variance <= 0:
            raise ValueError(f"noise variance must be positive, got {self.variance}")
        rng = np.random.default_rng(self.seed)
        return _complex_normal(rng, (N, T), self.variance)


def generate_channels(M: int, N: int, T: int, seed: int) -> ChannelRealization:
    """Draw an (N, M, T) i.i.d. CN(0, 1) tensor, resampling exact zeros.

    Raises
    ------
    ValueError
        If any dimension is smaller than 1.
    """
    if M < 1 or N < 1 or T < 1:
        raise ValueError(f"dimensions must be at least 1, got M={M} N={N} T={T}")
    rng = np.random.default_rng(seed)
    h = _complex_normal(rng, (N, M, T))
    zero = h == 0
    while zero.any():
        h[zero] = _complex_normal(rng, int(zero.sum()))
        zero = h == 0
    h.setflags(write=False)
    return ChannelRealization(M=M, N=N, T=T, h=h, seed=seed)


def generate_messages(M: int, N: int, k: int, seed: int) -> MessageSet:
    """Draw the k*M*N unit-power message symbols for one run."""
    if M < 1 or N < 1:
        raise ValueError(f"dimensions must be at least 1, got M={M} N={N}")
    if k not in (1, 2):
        raise ValueError(f"replication factor must be 1 or 2, got {k}")
    rng = np.random.default_rng(seed)
    w = _complex_normal(rng, (N, M, k))
    w.setflags(write=False)
    return MessageSet(M=M, N=N, k=k, w=w, seed=seed)


def received_signal(
    channels: ChannelRealization,
    x: np.ndarray,
    t: int,
    i: int,
    noise: NoiseModel | None = None,
) -> complex:
    """Observation of receiver i in slot t for the transmit vector x.

    Returns sum_j h[i, j, t] * x[j] plus the (i, t) noise sample when a noise
    model is enabled.
    """
    if not 0 <= t < channels.T:
        raise ValueError(f"slot index {t} outside 0..{channels.T - 1}")
    if not 0 <= i < channels.N:
        raise ValueError(f"receiver index {i} outside 0..{channels.N - 1}")
    x = np.asarray(x, dtype=complex)
    if x.shape != (channels.M,):
        raise ValueError(f"transmit vector must have shape ({channels.M},), got {x.shape}")
    y = complex(channels.h[i, :, t] @ x)
    if noise is not None and noise.enabled:
        y += complex(noise.sample_grid(channels.N, channels.T)[i, t])
    return y
