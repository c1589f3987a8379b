"""Frequency-specific projection and wild sparsified binary segmentation.

Per working frequency, a sparse projector is estimated from the partner
frequency's CUSUM tensor and applied to the working frequency's block
spectra, giving a scalar CUSUM series.  Scaled CUSUM magnitudes above the
threshold are summed across frequencies; the maximiser of that statistic
over randomly drawn sub-intervals yields a change point, and the search
recurses to its left and right.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _kernels, _rng
from ._kernels._fallback import _block_weights
from .cusum import cusum_tensor, cusum_vector
from .errors import ConfigError, IntervalError, ShapeError
from .sparse_decomp import (
    DecompSettings,
    ProjectionVector,
    _random_sparse_unit,
    _ranked_start,
    decompose,
    pilot_init,
    truncate_top_k,
)
from .spectral import SpectralTensor, frequency_split

SIGMA_FLOOR = 1e-12


@dataclass(frozen=True)
class Interval:
    """A block interval 1 <= s < e <= B."""

    s: int
    e: int

    def __post_init__(self):
        if not 1 <= self.s < self.e:
            raise IntervalError(f"need 1 <= s < e, got ({self.s}, {self.e})")


@dataclass(frozen=True)
class ProjectedSeries:
    """Block spectra and CUSUM of one frequency after projection.

    ``f_star`` covers all B blocks; ``t_star`` is the CUSUM of its
    restriction to [s, e].
    """

    f_star: np.ndarray = field(repr=False)
    t_star: np.ndarray = field(repr=False)
    s: int
    e: int
    gamma: ProjectionVector


@dataclass(frozen=True)
class ChangePoint:
    block_index: int
    time_index: int
    source_interval: tuple
    statistic: float
    active_freqs: tuple
    projections: dict = field(repr=False)
    scaled_values: dict = field(repr=False)


@dataclass(frozen=True)
class DetectionReport:
    """Ordered change points plus the configuration that produced them."""

    change_points: tuple
    p: int
    n_blocks: int
    block_length: int
    n_times: int
    seed: int
    config: dict
    freq_omegas: dict = field(repr=False)

    @property
    def q_hat(self):
        return len(self.change_points)

    def as_dict(self):
        from . import __version__

        cps = []
        for cp in self.change_points:
            freqs = []
            for l in cp.active_freqs:
                gamma = cp.projections[l].values
                nz = np.flatnonzero(gamma)
                freqs.append(
                    {
                        "index": int(l),
                        "omega": float(self.freq_omegas[l]),
                        "scaled_cusum": float(cp.scaled_values[l]),
                        "projection": [[int(i), float(gamma[i])] for i in nz],
                    }
                )
            cps.append(
                {
                    "block_index": int(cp.block_index),
                    "time_index": int(cp.time_index),
                    "statistic": float(cp.statistic),
                    "source_interval": [int(cp.source_interval[0]), int(cp.source_interval[1])],
                    "active_frequencies": freqs,
                }
            )
        return {
            "version": __version__,
            "backend": _kernels.BACKEND,
            "p": int(self.p),
            "n_blocks": int(self.n_blocks),
            "block_length": int(self.block_length),
            "n_times": int(self.n_times),
            "seed": int(self.seed),
            "config": self.config,
            "q_hat": self.q_hat,
            "change_points": cps,
        }


# ---------------------------------------------------------------------------
# Projection of block spectra

def project_spectra(f_hat_freq, gamma, s, e):
    """Project a (B, p, p) stack of Hermitian PSD slices through gamma.

    The quadratic form of a Hermitian slice through a real unit vector is
    real; only the real part of the slices enters.  Returns the projected
    spectra over all blocks and the CUSUM of their restriction to [s, e].
    """
    g = np.asarray(gamma.values if isinstance(gamma, ProjectionVector) else gamma)
    slices = np.asarray(f_hat_freq)
    if slices.ndim != 3 or slices.shape[1] != slices.shape[2] or slices.shape[1] != g.shape[0]:
        raise ShapeError(
            f"slice stack {slices.shape} incompatible with projector of length {g.shape[0]}"
        )
    if not 1 <= s < e <= slices.shape[0]:
        raise IntervalError(f"interval ({s}, {e}) invalid for B={slices.shape[0]}")
    f_star = np.einsum("bij,i,j->b", slices.real, g, g)
    t_star = cusum_vector(f_star[s - 1 : e], s, e)
    gvec = gamma if isinstance(gamma, ProjectionVector) else ProjectionVector(g)
    return ProjectedSeries(f_star=f_star, t_star=t_star, s=int(s), e=int(e), gamma=gvec)


def independent_projection(work, partner, k, s, e, settings=None, rng=None):
    """Estimate the projector on one slice stack, project the other.

    ``partner`` supplies the CUSUM tensor from which the sparse projector is
    estimated (pilot start, random fallback); ``work`` supplies the spectra
    that are projected.  Passing the same stack twice gives the same-data
    (no-splitting) variant.
    """
    work = np.asarray(work)
    partner = np.asarray(partner)
    if work.shape != partner.shape:
        raise ShapeError(f"work {work.shape} and partner {partner.shape} differ")
    if settings is None:
        settings = DecompSettings(k=k)
    elif settings.k != k:
        raise ConfigError(f"settings.k={settings.k} does not match k={k}")
    if rng is None:
        rng = np.random.default_rng(0)
    t_partner = cusum_tensor(partner[s - 1 : e], s, e)
    init = pilot_init(t_partner, k, settings)
    if init is None:
        init = ProjectionVector(_random_sparse_unit(partner.shape[1], k, rng))
    gamma = decompose(t_partner, settings, init, rng)
    return project_spectra(work, gamma, s, e)


def aggregate_thresholded(projected, tau):
    """Thresholded sum of scaled CUSUM magnitudes across frequencies.

    Each series is scaled by the interval mean of its projected spectra;
    frequencies whose scale falls below ``SIGMA_FLOOR`` carry no signal and
    are excluded.  Entry b of the result sums the scaled magnitudes that
    strictly exceed ``tau``.
    """
    if tau < 0:
        raise ConfigError(f"threshold must be >= 0, got {tau}")
    projected = list(projected)
    if not projected:
        raise ConfigError("no projected series to aggregate")
    s, e = projected[0].s, projected[0].e
    out = np.zeros(e - s)
    for ps in projected:
        if (ps.s, ps.e) != (s, e):
            raise ShapeError("projected series disagree on the interval")
        out += _scaled_magnitudes(ps.f_star, ps.t_star, s, e)[1] * 1.0
    return out


def _scaled_magnitudes(f_star, t_star, s, e, tau=0.0):
    sigma = float(np.mean(f_star[s - 1 : e]))
    if sigma < SIGMA_FLOOR:
        z = np.zeros(e - s)
        return z, z
    scaled = np.abs(t_star) / sigma
    return scaled, np.where(scaled > tau, scaled, 0.0)


def sample_intervals(B, J, nu2, rng):
    """Draw J intervals i.i.d. uniformly from {(s, e): 1 <= s < e <= B}.

    ``nu2`` does not shape the distribution; short intervals are filtered
    when candidates are evaluated.  Reproducible under the generator.
    """
    if B < 2:
        raise ConfigError(f"need B >= 2, got {B}")
    if J < 0:
        raise ConfigError(f"need J >= 0, got {J}")
    out = []
    while len(out) < J:
        chunk = max(2 * (J - len(out)), 64)
        ss = rng.integers(1, B + 1, size=chunk)
        ee = rng.integers(1, B + 1, size=chunk)
        for si, ei in zip(ss, ee):
            if si < ei:
                out.append(Interval(int(si), int(ei)))
                if len(out) == J:
                    break
    return out


# ---------------------------------------------------------------------------
# Fast rank-one pipeline internals

@dataclass(frozen=True)
class _Panel:
    """Contiguous real/imaginary DFT stacks, the rank-one tensor view."""

    re: np.ndarray = field(repr=False)  # (F, B, p)
    im: np.ndarray = field(repr=False)
    norm: float

    @property
    def p(self):
        return self.re.shape[2]

    @property
    def B(self):
        return self.re.shape[1]

    @classmethod
    def from_tensor(cls, tensor):
        f = tensor.n_freqs
        d = np.stack([tensor.dft(l) for l in range(1, f + 1)])
        return cls(
            re=np.ascontiguousarray(d.real),
            im=np.ascontiguousarray(d.imag),
            norm=tensor.norm,
        )

    def resampled(self, idx):
        return _Panel(
            re=np.ascontiguousarray(self.re[:, idx, :]),
            im=np.ascontiguousarray(self.im[:, idx, :]),
            norm=self.norm,
        )


def _run_rank1(re, im, s, e, nu1, k, g0, tol, max_outer, max_inner, rng):
    # Kernel call with restart-on-degenerate semantics shared across backends.
    budget = max_outer
    g = np.ascontiguousarray(g0, dtype=np.float64)
    p = re.shape[1]
    while True:
        gamma, status, used = _kernels.decompose_rank1(
            re, im, s, e, nu1, k, g, tol, budget, max_inner
        )
        if status != _kernels.STATUS_DEGENERATE:
            break
        budget -= used + 1
        gamma = _random_sparse_unit(p, k, rng)
        if budget <= 0:
            break
        g = gamma
    lead = int(np.argmax(np.abs(gamma)))
    if gamma[lead] < 0:
        gamma = -gamma
    return gamma


def _pilot_matrix(re, im, s, e, nu1):
    """Block-mode contraction of the CUSUM tensor with a trace-derived pilot.

    The trace of the block spectra carries any common change in level, so
    its CUSUM approximates the block-mode profile well enough to seed the
    alternating iteration.  Returns None when the trace CUSUM vanishes.
    """
    m = e - s + 1
    rs = re[s - 1 : e]
    is_ = im[s - 1 : e]
    tr = np.einsum("bi,bi->b", rs, rs) + np.einsum("bi,bi->b", is_, is_)
    a = _kernels.cusum_rows(np.ascontiguousarray(tr[:, None]))[:, 0][nu1 : m - 1 - nu1]
    na = np.linalg.norm(a)
    if na == 0.0:
        return None
    w = _block_weights(a / na, m, nu1, m - 1 - nu1)
    return (rs * w[:, None]).T @ rs + (is_ * w[:, None]).T @ is_


def _offdiag_row_energy(dmat):
    off = dmat - np.diag(np.diag(dmat))
    return np.einsum("ij,ij->i", off, off)


def _pilot_start(dmat, k, pooled_rows, own_energy):
    """k-sparse start: leading eigenvector of the pilot matrix restricted to
    the strongest off-diagonal rows (own and pooled across frequencies)."""
    p = dmat.shape[0]
    own = np.argsort(-own_energy, kind="stable")[:k]
    cand = sorted(set(int(i) for i in own) | set(int(i) for i in pooled_rows))
    sub = dmat[np.ix_(cand, cand)]
    if not np.any(sub):
        return None
    vals, vecs = np.linalg.eigh(sub)
    v = np.zeros(p)
    v[cand] = vecs[:, int(np.argmax(np.abs(vals)))]
    v = truncate_top_k(v, k)
    norm = np.linalg.norm(v)
    return v / norm if norm > 0 else None


def _interval_gammas(panel, pairs, s, e, k, nu1, tol, max_outer, max_inner, seed, threads):
    """Projector per working frequency on [s, e] (partner data only).

    Start vectors come from restricted eigenvectors of the partner's pilot
    matrix; candidate rows use the partner's own off-diagonal row energies
    and their pool across the interval's partner frequencies, since series
    activated by a change tend to recur across the frequencies where it
    shows.  When both starts converge, the one whose projections carry more
    scaled CUSUM mass across the partner frequencies wins; that score never
    touches the working frequencies' data.
    """
    if panel.p == 1:
        one_vec = np.array([1.0])
        return {w: one_vec for w, _ in pairs}
    partners = []
    for _, pt in pairs:
        if pt not in partners:
            partners.append(pt)
    dmats = {}
    energies = {}
    pooled = np.zeros(panel.p)
    for pt in partners:
        dmat = _pilot_matrix(panel.re[pt - 1], panel.im[pt - 1], s, e, nu1)
        dmats[pt] = dmat
        if dmat is None:
            energies[pt] = np.zeros(panel.p)
            continue
        energy = _offdiag_row_energy(dmat)
        energies[pt] = energy
        total = energy.sum()
        if total > 0:
            pooled += energy / total
    pooled_rows = np.argsort(-pooled, kind="stable")[:k]
    no_energy = np.zeros(panel.p)
    m = e - s + 1

    def partner_score(gamma):
        total = 0.0
        for pt in partners:
            u = (panel.re[pt - 1][s - 1 : e] @ gamma) ** 2 + (
                panel.im[pt - 1][s - 1 : e] @ gamma
            ) ** 2
            sigma = u.mean()
            if sigma < SIGMA_FLOOR:
                continue
            cus = _kernels.cusum_rows(np.ascontiguousarray(u[:, None]))[:, 0]
            total += np.linalg.norm(cus[nu1 : m - 1 - nu1]) / sigma
        return total

    def one(pair):
        work_l, partner_l = pair
        rng = _rng.substream(seed, _rng.DECOMP, s, e, work_l)
        re_p = panel.re[partner_l - 1]
        im_p = panel.im[partner_l - 1]
        dmat = dmats[partner_l]
        starts = []
        if dmat is not None:
            own = _pilot_start(dmat, k, pooled_rows, energies[partner_l])
            if own is not None:
                starts.append(own)
            pooled_only = _pilot_start(dmat, k, pooled_rows, no_energy)
            if pooled_only is not None:
                starts.append(pooled_only)
        if not starts:
            order = np.argsort(-energies[partner_l], kind="stable")
            starts.append(_ranked_start(rng.standard_normal(panel.p), order))
        best = None
        for v0 in starts:
            gamma = _run_rank1(re_p, im_p, s, e, nu1, k, v0, tol, max_outer, max_inner, rng)
            if len(starts) == 1:
                return work_l, gamma
            score = partner_score(gamma)
            if best is None or score > best[0]:
                best = (score, gamma)
        return work_l, best[1]

    return dict(_parallel_map(one, list(pairs), threads))


def _work_series(panel, work_l, gamma, s, e):
    rw = panel.re[work_l - 1]
    iw = panel.im[work_l - 1]
    f_star = ((rw @ gamma) ** 2 + (iw @ gamma) ** 2) / panel.norm
    t_star = _kernels.cusum_rows(np.ascontiguousarray(f_star[s - 1 : e])[:, None])[:, 0]
    return f_star, t_star


@dataclass(frozen=True)
class _IntervalStats:
    s: int
    e: int
    aggregate: np.ndarray = field(repr=False)
    scaled: dict = field(repr=False)        # work_l -> (e-s,) scaled |CUSUM|
    gammas: dict = field(repr=False)        # work_l -> unit k-sparse vector


def _parallel_map(fn, items, threads):
    if threads is None or threads <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _interval_stats(panel, pairs, s, e, k, nu1, tau, tol, max_outer, max_inner, seed, threads):
    """Per-interval statistics for every working frequency (ordered reduction)."""
    if panel.p == 1:
        # No projection is needed; process every frequency in one pass.
        works = [w for w, _ in pairs]
        f_all = (
            panel.re[np.array(works) - 1, :, 0] ** 2
            + panel.im[np.array(works) - 1, :, 0] ** 2
        ) / panel.norm  # (Fw, B)
        seg = np.ascontiguousarray(f_all[:, s - 1 : e].T)
        cus = _kernels.cusum_rows(seg)  # (m-1, Fw)
        sigma = seg.mean(axis=0)
        scaled_all = np.zeros_like(cus)
        ok = sigma >= SIGMA_FLOOR
        scaled_all[:, ok] = np.abs(cus[:, ok]) / sigma[ok]
        thresh = np.where(scaled_all > tau, scaled_all, 0.0)
        gamma = np.array([1.0])
        scaled = {w: np.ascontiguousarray(scaled_all[:, i]) for i, w in enumerate(works)}
        gammas = {w: gamma for w in works}
        return _IntervalStats(s=s, e=e, aggregate=thresh.sum(axis=1), scaled=scaled, gammas=gammas)

    gammas = _interval_gammas(
        panel, pairs, s, e, k, nu1, tol, max_outer, max_inner, seed, threads
    )
    aggregate = np.zeros(e - s)
    scaled = {}
    for work_l, _ in pairs:
        f_star, t_star = _work_series(panel, work_l, gammas[work_l], s, e)
        sc, th = _scaled_magnitudes(f_star, t_star, s, e, tau)
        aggregate += th
        scaled[work_l] = sc
    return _IntervalStats(s=s, e=e, aggregate=aggregate, scaled=scaled, gammas=gammas)


def _split_pairs(tensor, split):
    if split:
        return frequency_split(tensor)
    return [(int(l), int(l)) for l in tensor.grid.indices]


def interval_projections(tensor, s, e, k, settings=None, seed=0, split=False):
    """Projected series (with projectors) for every working frequency on [s, e].

    This is the projection stage run once on a fixed interval, without any
    segmentation; useful for inspecting which series drive which frequency.
    """
    if settings is None:
        settings = DecompSettings(k=k)
    if not 1 <= s < e <= tensor.B:
        raise IntervalError(f"interval ({s}, {e}) invalid for B={tensor.B}")
    panel = _Panel.from_tensor(tensor)
    pairs = _split_pairs(tensor, split)
    gammas = _interval_gammas(
        panel, pairs, s, e, settings.k, settings.nu1,
        settings.tol, settings.max_outer, settings.max_inner, seed, None,
    )
    out = []
    for work_l, _ in pairs:
        f_star, t_star = _work_series(panel, work_l, gammas[work_l], s, e)
        out.append(
            (work_l, ProjectedSeries(f_star=f_star, t_star=t_star, s=s, e=e,
                                     gamma=ProjectionVector(gammas[work_l])))
        )
    return out


# ---------------------------------------------------------------------------
# Wild sparsified binary segmentation

def _resolve_nu2(nu2, B):
    return int(B**0.6 / 2) if nu2 is None else int(nu2)


def detect_changepoints(tensor, config, n_times=None):
    """Detect multiple spectral change points in a periodogram tensor.

    Parameters
    ----------
    tensor : SpectralTensor
        Block periodogram tensor of the (preprocessed) series.
    config : DetectionConfig-like
        Must carry resolved numeric ``k`` and ``tau`` plus ``J``, ``nu1``,
        ``nu2``, ``split``, ``seed``, ``threads``, ``tol``, ``max_outer``,
        ``max_inner``.  Auto values must be resolved beforehand.
    n_times : int, optional
        Original series length recorded in the report (defaults to B*L).

    Returns
    -------
    DetectionReport
        Change points sorted by block index.  Block b maps to time
        ``L*b + 1``, the first time point after the last pre-change block.
    """
    if not isinstance(tensor, SpectralTensor):
        raise ConfigError("detect_changepoints expects a SpectralTensor")
    k = config.k
    tau = config.tau
    if not isinstance(k, (int, np.integer)) or isinstance(k, bool):
        raise ConfigError(f"k must be resolved to an integer, got {k!r}")
    if isinstance(tau, str) or tau is None:
        raise ConfigError(f"tau must be resolved to a number, got {tau!r}")
    tau = float(tau)
    if tau < 0:
        raise ConfigError(f"tau must be >= 0, got {tau}")
    if not 1 <= k <= tensor.p:
        raise ConfigError(f"need 1 <= k <= p={tensor.p}, got k={k}")
    if config.J < 0:
        raise ConfigError(f"need J >= 0, got {config.J}")
    if config.seed is None:
        raise ConfigError("a resolved integer seed is required")
    B = tensor.B
    nu2 = _resolve_nu2(config.nu2, B)
    if nu2 < 0:
        raise ConfigError(f"nu2 must be >= 0, got {nu2}")
    if B < 2 * nu2 + 2:
        raise ConfigError(f"need B >= 2*nu2 + 2, got B={B}, nu2={nu2}")
    nu1 = int(config.nu1)
    if nu1 < 0:
        raise ConfigError(f"nu1 must be >= 0, got {nu1}")
    seed = int(config.seed)
    threads = config.threads

    pairs = _split_pairs(tensor, config.split)
    panel = _Panel.from_tensor(tensor)
    intervals = sample_intervals(B, config.J, nu2, _rng.substream(seed, _rng.INTERVALS))

    memo = {}

    def stats_for(si, ei):
        key = (si, ei)
        if key not in memo:
            memo[key] = _interval_stats(
                panel, pairs, si, ei, k, nu1, tau,
                config.tol, config.max_outer, config.max_inner, seed, threads,
            )
        return memo[key]

    found = []

    def speccp(s, e):
        if e - s + 1 <= 2 * nu2 + 1:
            return
        candidates = [(0, s, e)]
        for j, iv in enumerate(intervals, start=1):
            if s <= iv.s and iv.e <= e and iv.e - iv.s + 1 > 2 * nu2:
                candidates.append((j, iv.s, iv.e))
        best = None
        for j, sj, ej in candidates:
            lo = sj + nu2
            hi = min(ej - nu2, ej - 1)
            if hi < lo:
                continue
            st = stats_for(sj, ej)
            seg = st.aggregate[lo - sj : hi - sj + 1]
            rel = int(np.argmax(seg))
            val = float(seg[rel])
            if best is None or val > best[0]:
                best = (val, j, sj, ej, lo + rel)
        if best is None or best[0] <= 0.0:
            return
        _, _, sj, ej, u = best
        st = stats_for(sj, ej)
        off = u - sj
        active = tuple(l for l in st.scaled if st.scaled[l][off] > tau)
        found.append(
            ChangePoint(
                block_index=u,
                time_index=tensor.grid.L * u + 1,
                source_interval=(sj, ej),
                statistic=best[0],
                active_freqs=active,
                projections={l: ProjectionVector(st.gammas[l]) for l in active},
                scaled_values={l: float(st.scaled[l][off]) for l in active},
            )
        )
        speccp(s, u)
        speccp(u + 1, e)

    speccp(1, B)
    found.sort(key=lambda cp: cp.block_index)
    omegas = {int(l): float(w) for l, w in zip(tensor.grid.indices, tensor.grid.omegas)}
    echo = {
        "k": int(k),
        "tau": float(tau),
        "J": int(config.J),
        "nu1": nu1,
        "nu2": nu2,
        "split": bool(config.split),
        "L": int(tensor.grid.L),
        "tol": float(config.tol),
        "max_outer": int(config.max_outer),
        "max_inner": int(config.max_inner),
    }
    return DetectionReport(
        change_points=tuple(found),
        p=tensor.p,
        n_blocks=B,
        block_length=tensor.grid.L,
        n_times=int(n_times) if n_times is not None else B * tensor.grid.L,
        seed=seed,
        config=echo,
        freq_omegas=omegas,
    )
