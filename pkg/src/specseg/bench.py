"""Simulation generators with ground truth, and evaluation metrics.

The generators restart their innovation streams at every change time, so
segments are independent; regenerating a single segment from its substream
reproduces it exactly.  Series indices are 0-based; change times are the
1-based first time index of the new regime.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import _rng
from .errors import ConfigError, InputError
from .ingest import SeriesMatrix


@dataclass(frozen=True)
class GroundTruth:
    """True change structure of a simulated series."""

    dgp: str
    N: int
    p: int
    k0: int
    seed: int
    cp_times: tuple          # first time index of each new segment (1-based)
    cp_fractions: tuple      # change location as a fraction of N
    cp_series: tuple         # 0-based indices of series that change
    gamma: object = field(default=None, repr=False)  # factor loading, when known

    @property
    def Q(self):
        return len(self.cp_times)

    def cp_blocks(self, B):
        """Change block indices ceil(v*B) for a partition into B blocks."""
        return tuple(int(math.ceil(v * B)) for v in self.cp_fractions)

    def as_dict(self):
        d = {
            "dgp": self.dgp,
            "N": self.N,
            "p": self.p,
            "k0": self.k0,
            "seed": self.seed,
            "Q": self.Q,
            "cp_times": [int(t) for t in self.cp_times],
            "cp_fractions": [float(v) for v in self.cp_fractions],
            "cp_series": [int(i) for i in self.cp_series],
        }
        if self.gamma is not None:
            d["gamma"] = [float(g) for g in self.gamma]
        return d


def _change_series(p, k0):
    # k0 indices evenly spread across 0..p-1.
    return tuple(int(math.ceil((i - 0.5) * p / k0)) - 1 for i in range(1, k0 + 1))


def _segment_bounds(N, Q):
    cuts = [N * q // (Q + 1) for q in range(Q + 2)]
    return list(zip(cuts[:-1], cuts[1:]))  # half-open (a, b]: times a+1..b


def mvn_equicorrelated(p, rho, n_draws, rng):
    """Draws from N(0, S) with unit variances and constant correlation rho.

    Uses the closed-form square root a*I + b*ones: a = sqrt(1-rho) and
    b = (sqrt(1+(p-1)*rho) - a)/p, valid for rho in (-1/(p-1), 1).
    """
    lower = -1.0 / (p - 1) if p > 1 else -np.inf
    if not lower < rho < 1.0:
        raise ConfigError(f"rho must be in ({lower}, 1) for p={p}, got {rho}")
    z = rng.standard_normal((p, n_draws))
    a = math.sqrt(1.0 - rho)
    b = (math.sqrt(1.0 + (p - 1) * rho) - a) / p
    return a * z + b * z.sum(axis=0, keepdims=True)


def _dgp1_segment(p, length, phi_diag, rho, rng):
    eps = mvn_equicorrelated(p, rho, length + 1, rng)
    return eps[:, 1:] + phi_diag[:, None] * eps[:, :-1]


def _dgp2_segment(p, length, psi2_diag, rho, rng, burn=200):
    eps = mvn_equicorrelated(p, rho, length + burn, rng)
    x = np.zeros((p, length + burn))
    prev1 = np.zeros(p)
    prev2 = np.zeros(p)
    for n in range(length + burn):
        cur = eps[:, n] + 0.1 * prev1 + psi2_diag * prev2
        x[:, n] = cur
        prev2 = prev1
        prev1 = cur
    return x[:, burn:]


def _simulate_switching(name, N, p, k0, Q, seed, segment_fn, base, alt):
    if not 0 <= k0 <= p:
        raise ConfigError(f"need 0 <= k0 <= p, got k0={k0}, p={p}")
    if Q < 0:
        raise ConfigError(f"need Q >= 0, got {Q}")
    series = _change_series(p, k0) if k0 > 0 else ()
    coef_base = np.full(p, base)
    coef_alt = np.full(p, base)
    coef_alt[list(series)] = alt
    out = np.empty((p, N))
    bounds = _segment_bounds(N, Q)
    for q, (a, b) in enumerate(bounds, start=1):  # segment q covers times a+1..b
        coef = coef_base if q % 2 == 1 else coef_alt
        rng = _rng.substream(seed, _rng.DGP, q)
        out[:, a:b] = segment_fn(p, b - a, coef, 0.2, rng)
    cp_times = tuple(a + 1 for a, _ in bounds[1:])
    fractions = tuple(a / N for a, _ in bounds[1:])
    truth = GroundTruth(
        dgp=name, N=N, p=p, k0=k0, seed=seed,
        cp_times=cp_times, cp_fractions=fractions, cp_series=series,
    )
    return SeriesMatrix(out), truth


def simulate_dgp1(N, p, k0, Q, seed):
    """Vector MA(1) with diagonal coefficient switching between segments.

    Odd segments use coefficient 0.6 on every series; even segments flip it
    to -0.6 on the k0 change series.  Innovations are equicorrelated normal
    (unit variance, correlation 0.2) and independent across segments.  With
    k0 = 0 no coefficient ever changes, giving a stationary null.
    """
    return _simulate_switching("dgp1", N, p, k0, Q, seed, _dgp1_segment, 0.6, -0.6)


def simulate_dgp2(N, p, k0, Q, seed):
    """Diagonal VAR(2) with the lag-2 coefficient switching 0.4 -> -0.7 on the
    change series in even segments; lag-1 coefficient fixed at 0.1.  A burn-in
    of 200 samples per segment is discarded."""
    return _simulate_switching("dgp2", N, p, k0, Q, seed, _dgp2_segment, 0.4, -0.7)


FACTOR_CHANGE_FRACTION = 3240 / 6400


def simulate_factor(N, p, k0, seed):
    """One change: a sparse single-factor component is switched on.

    The baseline is a VMA(1) with coefficient 0.6 and equicorrelated
    innovations.  From the change time on, ``gamma * W_n + noise`` is added,
    where W is an MA(1) with coefficient -0.6 and gamma puts weight
    1/sqrt(k0) on k0 evenly spread series.  Returns the series, the ground
    truth and the true loading vector.
    """
    if not 1 <= k0 <= p:
        raise ConfigError(f"need 1 <= k0 <= p, got k0={k0}, p={p}")
    n_change = int(N * FACTOR_CHANGE_FRACTION)
    if not 1 < n_change < N:
        raise ConfigError(f"series too short for the factor design: N={N}")
    rng_y = _rng.substream(seed, _rng.DGP, 1)
    rng_w = _rng.substream(seed, _rng.DGP, 2)
    rng_e = _rng.substream(seed, _rng.DGP, 3)

    eps = mvn_equicorrelated(p, 0.2, N + 1, rng_y)
    y = eps[:, 1:] + 0.6 * eps[:, :-1]

    n2 = N - n_change
    ew = rng_w.standard_normal(n2 + 1)
    w = ew[1:] - 0.6 * ew[:-1]
    noise = math.sqrt(0.2) * rng_e.standard_normal((p, n2))

    series = _change_series(p, k0)
    gamma = np.zeros(p)
    gamma[list(series)] = 1.0 / math.sqrt(k0)

    x = y.copy()
    x[:, n_change:] += gamma[:, None] * w[None, :] + noise
    truth = GroundTruth(
        dgp="factor", N=N, p=p, k0=k0, seed=seed,
        cp_times=(n_change + 1,), cp_fractions=(n_change / N,),
        cp_series=series, gamma=gamma,
    )
    return SeriesMatrix(x), truth, gamma


def simulate(dgp, N, p, k0, Q, seed):
    """Dispatch by generator name; returns (SeriesMatrix, GroundTruth)."""
    if dgp == "dgp1":
        return simulate_dgp1(N, p, k0, Q, seed)
    if dgp == "dgp2":
        return simulate_dgp2(N, p, k0, Q, seed)
    if dgp == "factor":
        x, truth, _ = simulate_factor(N, p, k0, seed)
        return x, truth
    raise ConfigError(f"unknown generator {dgp!r}")


# ---------------------------------------------------------------------------
# Spectral density oracles (closed forms used as test references)

def ma1_spectrum(omega, theta, sigma2=1.0):
    """Spectral density of x_n = e_n + theta*e_{n-1} with Var(e) = sigma2."""
    return sigma2 * (1.0 + theta**2 + 2.0 * theta * np.cos(omega)) / (2.0 * np.pi)


def ar2_spectrum(omega, phi1, phi2, sigma2=1.0):
    """Spectral density of x_n = phi1*x_{n-1} + phi2*x_{n-2} + e_n."""
    z = 1.0 - phi1 * np.exp(-1j * np.asarray(omega)) - phi2 * np.exp(-2j * np.asarray(omega))
    return sigma2 / (2.0 * np.pi * np.abs(z) ** 2)


# ---------------------------------------------------------------------------
# Evaluation metrics

def segments_from_cps(cp_times, N):
    """Label each time 1..N by the number of change times at or before it."""
    cps = [int(t) for t in cp_times]
    if any(cps[i] >= cps[i + 1] for i in range(len(cps) - 1)):
        raise InputError(f"change times must be strictly increasing, got {cps}")
    if any(t <= 1 or t >= N for t in cps):
        raise InputError(f"change times must lie strictly inside (1, N), got {cps}")
    labels = np.zeros(N, dtype=np.int64)
    for t in cps:
        labels[t - 1 :] += 1
    return labels


def adjusted_rand_index(labels_a, labels_b):
    """Permutation-model adjusted Rand index of two partitions.

    Pair counts are computed in exact integer arithmetic.  Returns 1.0 when
    the partitions coincide up to relabeling (including the degenerate case
    of two single-cluster partitions).
    """
    a = np.asarray(labels_a)
    b = np.asarray(labels_b)
    if a.shape != b.shape or a.ndim != 1:
        raise InputError(f"label vectors must share one shape, got {a.shape}, {b.shape}")
    n = a.shape[0]
    if n < 2:
        raise InputError("need at least two items")
    _, ai = np.unique(a, return_inverse=True)
    _, bi = np.unique(b, return_inverse=True)
    na, nb = ai.max() + 1, bi.max() + 1
    table = np.zeros((na, nb), dtype=np.int64)
    np.add.at(table, (ai, bi), 1)

    def comb2(v):
        return sum(int(x) * (int(x) - 1) // 2 for x in v)

    sum_ij = comb2(table.ravel())
    sum_a = comb2(table.sum(axis=1))
    sum_b = comb2(table.sum(axis=0))
    total = n * (n - 1) // 2
    expected = sum_a * sum_b / total
    maximum = (sum_a + sum_b) / 2.0
    if maximum == expected:
        return 1.0
    return float((sum_ij - expected) / (maximum - expected))


def projection_alignment(gamma_true, gamma_hat):
    """Absolute inner product of two unit vectors (sign-invariant overlap)."""
    gt = np.asarray(gamma_true, dtype=np.float64)
    gh = np.asarray(gamma_hat, dtype=np.float64)
    if gt.shape != gh.shape or gt.ndim != 1:
        raise InputError(f"vectors must share one shape, got {gt.shape}, {gh.shape}")
    return float(abs(gt @ gh))


def cp_series_rank(gamma_hat, true_series):
    """Mean reversed rank of the true change series in a projector.

    Entries are ranked by decreasing magnitude (ties: lowest index first);
    a series of rank r scores p + 1 - r, so larger is better and the best
    possible mean is p - (|S| - 1)/2.
    """
    g = np.asarray(gamma_hat, dtype=np.float64)
    idx = [int(i) for i in true_series]
    if not idx:
        raise InputError("the true change-series set is empty")
    if any(not 0 <= i < g.shape[0] for i in idx):
        raise InputError(f"series indices out of range for p={g.shape[0]}")
    p = g.shape[0]
    order = np.argsort(-np.abs(g), kind="stable")
    rank = np.empty(p, dtype=np.int64)
    rank[order] = np.arange(1, p + 1)
    return float(np.mean([p + 1 - rank[i] for i in idx]))
