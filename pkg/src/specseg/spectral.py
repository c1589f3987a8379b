"""Tapered block periodogram tensors on the Fourier frequency grid.

Each block of length L yields, per Fourier frequency ``omega_l = 2*pi*l/L``
with ``l in {1..ceil(L/2)}``, a tapered DFT vector ``d_b(omega_l)`` and the
rank-one periodogram slice ``d_b d_b^H / (2*pi*sum h^2)``.  The tensor is
stored through its DFT vectors; slices are materialised on demand, which
keeps the memory footprint linear in ``p`` instead of quadratic.
"""

import os
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, ShapeError

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class Taper:
    """Data taper sampled at n/L for n = 1..L, with its squared sum."""

    samples: np.ndarray = field(repr=False)
    h2_sum: float
    kind: str = "custom"


@dataclass(frozen=True)
class FreqGrid:
    """Fourier frequency indices 1..ceil(L/2) with omega_l = 2*pi*l/L.

    For even L the grid ends exactly at pi; for odd L the top frequency
    exceeds pi by less than pi/L (its co-spectrum equals the one at the
    mirrored frequency 2*pi - omega, so no information is duplicated).
    """

    L: int
    indices: np.ndarray = field(repr=False)
    omegas: np.ndarray = field(repr=False)

    @property
    def n_freqs(self):
        return len(self.indices)


TUKEY_RAMP = 0.1


def make_taper(L, kind="tukey", samples=None):
    """Build a taper of length L, sampled at n/L for n = 1..L.

    The default is a tapered-cosine (Tukey) window with ramp fraction 0.1:
    flat in the interior, vanishing smoothly at both block ends.  A flat
    interior keeps the DFT at neighbouring Fourier frequencies nearly
    orthogonal, which the odd/even frequency splitting relies on; a fully
    smooth window such as Hann correlates adjacent bins strongly (|corr|
    = 2/3) and leaks the partner frequency's noise into the working one.
    ``kind="hann"`` selects ``h(x) = sin(pi*x)**2``; ``kind="custom"``
    takes explicit samples (all >= 0, not all zero).
    """
    if L < 2:
        raise ConfigError(f"taper length must be >= 2, got {L}")
    if kind == "tukey":
        x = np.arange(1, L + 1, dtype=np.float64) / L
        h = np.ones(L)
        left = x < TUKEY_RAMP
        h[left] = 0.5 * (1.0 - np.cos(np.pi * x[left] / TUKEY_RAMP))
        right = x > 1.0 - TUKEY_RAMP
        h[right] = 0.5 * (1.0 - np.cos(np.pi * (1.0 - x[right]) / TUKEY_RAMP))
    elif kind == "hann":
        grid = np.arange(1, L + 1, dtype=np.float64) / L
        h = np.sin(np.pi * grid) ** 2
    elif kind == "custom":
        h = np.asarray(samples, dtype=np.float64)
        if h.shape != (L,):
            raise ShapeError(f"custom taper must have {L} samples, got {h.shape}")
        if np.any(h < 0):
            raise ConfigError("custom taper samples must be non-negative")
        if not np.any(h > 0):
            raise ConfigError("custom taper samples are all zero")
    else:
        raise ConfigError(f"unknown taper kind {kind!r}")
    return Taper(samples=h, h2_sum=float(np.sum(h * h)), kind=kind)


def make_grid(L):
    """Fourier frequency grid for block length L."""
    idx = np.arange(1, int(np.ceil(L / 2)) + 1, dtype=np.int64)
    return FreqGrid(L=int(L), indices=idx, omegas=TWO_PI * idx / L)


def tapered_dft(block, taper, omega):
    """Tapered discrete Fourier transform of one block at one frequency.

    ``block`` is p x L (within-block time index n = 1..L); the result is
    ``sum_n h(n/L) * block[:, n] * exp(-1j*omega*n)``, linear in the data.
    """
    block = np.asarray(block, dtype=np.float64)
    if block.ndim != 2 or block.shape[1] != taper.samples.shape[0]:
        raise ShapeError(
            f"block shape {block.shape} does not match taper length "
            f"{taper.samples.shape[0]}"
        )
    n = np.arange(1, block.shape[1] + 1)
    return (block * taper.samples) @ np.exp(-1j * omega * n)


class SpectralTensor:
    """Per-frequency stacks of B rank-one periodogram slices.

    ``dfts`` has shape (n_freqs, B, p); the slice of the tensor at frequency
    index l (1-based) and block b (1-based) is
    ``dfts[l-1, b-1] dfts[l-1, b-1]^H / (2*pi*h2_sum)``, Hermitian, PSD and
    of rank one by construction.  Instances are immutable and safe to share
    across threads.
    """

    def __init__(self, dfts, grid, h2_sum):
        dfts = np.ascontiguousarray(dfts, dtype=np.complex128)
        if dfts.ndim != 3:
            raise ShapeError("dfts must have shape (n_freqs, B, p)")
        if dfts.shape[0] != grid.n_freqs:
            raise ShapeError(
                f"{dfts.shape[0]} DFT stacks for {grid.n_freqs} frequencies"
            )
        if h2_sum <= 0:
            raise ConfigError("h2_sum must be positive")
        self._dfts = dfts
        self._dfts.flags.writeable = False
        self.grid = grid
        self.h2_sum = float(h2_sum)
        self.norm = TWO_PI * float(h2_sum)

    @property
    def p(self):
        return self._dfts.shape[2]

    @property
    def B(self):
        return self._dfts.shape[1]

    @property
    def n_freqs(self):
        return self._dfts.shape[0]

    def dft(self, l):
        """(B, p) complex DFT vectors at frequency index l (1-based)."""
        return self._dfts[l - 1]

    def slices(self, l):
        """Materialise the (B, p, p) complex slice stack at frequency l."""
        d = self._dfts[l - 1]
        return np.einsum("bi,bj->bij", d, d.conj()) / self.norm

    def slice(self, l, b):
        """Single p x p periodogram slice at frequency l, block b (1-based)."""
        d = self._dfts[l - 1, b - 1]
        return np.outer(d, d.conj()) / self.norm

    def auto_spectra(self):
        """(n_freqs, B, p) real array of per-series auto-spectra |d_i|^2/norm."""
        return (self._dfts.real**2 + self._dfts.imag**2) / self.norm

    def select_series(self, indices):
        """Tensor restricted to the given series (0-based indices)."""
        idx = np.atleast_1d(np.asarray(indices, dtype=np.int64))
        return SpectralTensor(self._dfts[:, :, idx], self.grid, self.h2_sum)

    def scaled(self, c):
        """Tensor scaled elementwise by c > 0 (DFTs scale by sqrt(c))."""
        if c <= 0:
            raise ConfigError("scale factor must be positive")
        return SpectralTensor(self._dfts * np.sqrt(c), self.grid, self.h2_sum)


def periodogram_tensor(x, plan, taper, grid=None):
    """Build the block periodogram tensor of a series matrix.

    Parameters
    ----------
    x : SeriesMatrix
        Observations, p x N.
    plan : BlockPlan
        Block partition; times beyond ``plan.n_used`` are dropped.
    taper : Taper
        Data taper of length ``plan.L``.
    grid : FreqGrid, optional
        Defaults to the full grid ``make_grid(plan.L)``.

    Returns
    -------
    SpectralTensor
        DFT-backed tensor with one (B, p, p) Hermitian PSD rank-one slice
        stack per Fourier frequency.
    """
    if grid is None:
        grid = make_grid(plan.L)
    L = plan.L
    if taper.samples.shape[0] != L:
        raise ShapeError(f"taper length {taper.samples.shape[0]} != block length {L}")
    if grid.L != L:
        raise ShapeError(f"grid block length {grid.L} != plan block length {L}")
    if plan.n_used > x.n_times:
        raise ShapeError(
            f"block plan uses {plan.n_used} time points but the series has {x.n_times}"
        )
    blocks = x.values[:, : plan.n_used].reshape(x.p, plan.B, L)
    n = np.arange(1, L + 1, dtype=np.float64)
    basis = taper.samples[:, None] * np.exp(-1j * np.outer(n, grid.omegas))
    dfts = np.tensordot(blocks, basis, axes=([2], [0]))  # (p, B, F)
    return SpectralTensor(np.ascontiguousarray(dfts.transpose(2, 1, 0)), grid, taper.h2_sum)


def frequency_split(tensor_or_grid):
    """Pair each odd Fourier index with its even neighbour.

    Odd indices are the working frequencies; their detection statistics are
    computed from their own data while the projection direction comes from
    the partner.  The partner of odd l is l+1 when that index exists, else
    l-1 (the top odd index pairs downward).  Requires at least two grid
    frequencies.
    """
    grid = tensor_or_grid.grid if isinstance(tensor_or_grid, SpectralTensor) else tensor_or_grid
    n = grid.n_freqs
    if n < 2:
        raise ConfigError("frequency splitting needs at least two Fourier frequencies")
    pairs = []
    for l in range(1, n + 1, 2):
        partner = l + 1 if l + 1 <= n else l - 1
        pairs.append((l, partner))
    return pairs


def dump_tensor_csv(tensor, outdir):
    """Write one CSV per frequency for debugging.

    File ``freq_<l>.csv`` has B rows (block order); row b holds the p*p real
    parts of the slice in row-major order followed by its p*p imaginary
    parts, also row-major.
    """
    os.makedirs(outdir, exist_ok=True)
    paths = []
    for l in tensor.grid.indices:
        s = tensor.slices(int(l)).reshape(tensor.B, -1)
        flat = np.hstack([s.real, s.imag])
        path = os.path.join(outdir, f"freq_{int(l):04d}.csv")
        np.savetxt(path, flat, delimiter=",")
        paths.append(path)
    return paths
