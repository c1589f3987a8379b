"""Data-driven hyper-parameters: bootstrap threshold, sparsity heuristic, defaults.

The threshold is the upper quantile of the maximal thresholdless statistic
over block-resampled tensors; the sparsity budget counts how many component
series show at least one change when segmented one at a time.
"""

from dataclasses import dataclass, replace

import numpy as np

from . import _kernels, _rng
from .detect import (
    SIGMA_FLOOR,
    _interval_gammas,
    _Panel,
    _resolve_nu2,
    _split_pairs,
    detect_changepoints,
)
from .errors import ConfigError
from .ingest import SeriesMatrix, partition_blocks
from .spectral import SpectralTensor, make_grid, make_taper, periodogram_tensor

_CONFIG_FIELD_TYPES = {
    "L": int,
    "k": "int_or_auto",
    "J": int,
    "tau": "float_or_auto",
    "bootstrap_samples": int,
    "bootstrap_quantile": float,
    "series_bootstrap_samples": int,
    "nu1": int,
    "nu2": "int_or_none",
    "split": bool,
    "normalize": bool,
    "center": bool,
    "seed": "int_or_none",
    "threads": "int_or_none",
    "tol": float,
    "max_outer": int,
    "max_inner": int,
}


@dataclass(frozen=True)
class DetectionConfig:
    """All knobs of the detection pipeline; ``"auto"`` values are resolved
    from data before detection."""

    L: int = 75
    k: object = "auto"
    J: int = 500
    tau: object = "auto"
    bootstrap_samples: int = 1000
    bootstrap_quantile: float = 0.95
    series_bootstrap_samples: int = 200
    nu1: int = 0
    nu2: object = None
    split: bool = True
    normalize: bool = False
    center: bool = True
    seed: object = None
    threads: object = None
    tol: float = 1e-8
    max_outer: int = 50
    max_inner: int = 100

    def __post_init__(self):
        if not 0.0 < self.bootstrap_quantile <= 1.0:
            raise ConfigError(
                f"bootstrap quantile must be in (0, 1], got {self.bootstrap_quantile}"
            )
        if self.J < 0:
            raise ConfigError(f"J must be >= 0, got {self.J}")
        if self.tau == "auto" and self.bootstrap_samples < 1:
            raise ConfigError("auto threshold needs bootstrap_samples >= 1")
        if self.k != "auto" and (not isinstance(self.k, (int, np.integer)) or self.k < 1):
            raise ConfigError(f"k must be 'auto' or a positive integer, got {self.k!r}")
        if self.tau != "auto":
            if not isinstance(self.tau, (int, float, np.floating)) or self.tau < 0:
                raise ConfigError(f"tau must be 'auto' or >= 0, got {self.tau!r}")
        if self.seed is not None and (not isinstance(self.seed, (int, np.integer)) or self.seed < 0):
            raise ConfigError(f"seed must be a non-negative integer, got {self.seed!r}")
        if self.nu1 < 0:
            raise ConfigError(f"nu1 must be >= 0, got {self.nu1}")


def default_config(N, p):
    """Defaults for a series of length N: L = 75 clipped to [50, 100] and to
    at most N/4, 500 random intervals, trims nu1 = 0 and nu2 = floor(B^0.6/2),
    bootstrap threshold at the 95% quantile of 1000 samples, auto sparsity."""
    L = min(75, N // 4)
    if L < 50:
        raise ConfigError(f"series too short for spectral blocks: N={N}")
    L = min(L, 100)
    B = N // L
    return DetectionConfig(L=int(L), nu2=_resolve_nu2(None, B))


def build_tensor(x, config):
    """Block periodogram tensor of a (preprocessed) series under a config."""
    plan = partition_blocks(x, config.L)
    taper = make_taper(config.L)
    return periodogram_tensor(x, plan, taper, make_grid(config.L))


def bootstrap_threshold(tensor, k, n_boot, quantile, seed, *, nu2=None, split=True,
                        nu1=0, tol=1e-8, max_outer=50, max_inner=100):
    """Threshold from block-index resampling of the projected spectra.

    The k-sparse projector of every working frequency is estimated once on
    the full range [1, B].  Each bootstrap sample then redraws the B block
    indices with replacement (one common draw shared by every frequency,
    preserving cross-frequency alignment) and records the largest scaled
    CUSUM magnitude that a thresholdless, interval-free run examines on the
    resampled projected spectra.  The threshold is the requested empirical
    quantile (linear interpolation between order statistics) of the
    recorded maxima, which puts it on the scale of the per-frequency ratios
    it gates; re-fitting the projectors on every resample would instead
    calibrate against an adaptive supremum no attainable signal can reach.
    """
    if not isinstance(tensor, SpectralTensor):
        raise ConfigError("bootstrap_threshold expects a SpectralTensor")
    if n_boot < 1:
        raise ConfigError(f"need n_boot >= 1, got {n_boot}")
    if not 0.0 < quantile <= 1.0:
        raise ConfigError(f"quantile must be in (0, 1], got {quantile}")
    if not 1 <= k <= tensor.p:
        raise ConfigError(f"need 1 <= k <= p={tensor.p}, got k={k}")
    B = tensor.B
    nu2 = _resolve_nu2(nu2, B)
    lo = 1 + nu2
    hi = min(B - nu2, B - 1)
    if hi < lo:
        raise ConfigError(f"nu2={nu2} leaves no admissible split for B={B}")
    pairs = _split_pairs(tensor, split)
    panel = _Panel.from_tensor(tensor)

    gammas = _interval_gammas(
        panel, pairs, 1, B, k, nu1, tol, max_outer, max_inner, seed, None
    )
    proj = np.empty((len(pairs), B))
    for i, (work_l, _) in enumerate(pairs):
        gamma = gammas[work_l]
        proj[i] = (
            (panel.re[work_l - 1] @ gamma) ** 2 + (panel.im[work_l - 1] @ gamma) ** 2
        ) / panel.norm

    idx = np.stack(
        [_rng.substream(seed, _rng.BOOTSTRAP, m).integers(0, B, size=B) for m in range(n_boot)]
    )
    fb = proj[:, idx]  # (Fw, n_boot, B)
    nfw, nb = fb.shape[0], fb.shape[1]
    flat = fb.reshape(nfw * nb, B)
    cus = _kernels.cusum_rows(np.ascontiguousarray(flat.T))  # (B-1, Fw*n_boot)
    sigma = flat.mean(axis=1)
    scaled = np.zeros_like(cus)
    ok = sigma >= SIGMA_FLOOR
    scaled[:, ok] = np.abs(cus[:, ok]) / sigma[ok]
    stats = scaled[lo - 1 : hi].reshape(hi - lo + 1, nfw, nb).max(axis=(0, 1))
    return float(np.quantile(stats, quantile, method="linear"))


def estimate_sparsity(x, config):
    """Sparsity budget: the number of component series with change points.

    Each series is segmented on its own (k = 1) with the same block length
    and interval count as the joint run and its own bootstrap threshold
    (``series_bootstrap_samples`` draws).  The budget is the number of
    flagged series, floored at one.
    """
    if not isinstance(x, SeriesMatrix):
        raise ConfigError("estimate_sparsity expects a SeriesMatrix")
    if config.seed is None:
        raise ConfigError("a resolved integer seed is required")
    tensor = build_tensor(x, config)
    count = 0
    for i in range(x.p):
        sub = tensor.select_series([i])
        tau_i = bootstrap_threshold(
            sub, 1, config.series_bootstrap_samples, config.bootstrap_quantile,
            _rng.derive_seed(config.seed, _rng.SERIES_TUNE, i, 0),
            nu2=config.nu2, split=config.split, nu1=config.nu1,
            tol=config.tol, max_outer=config.max_outer, max_inner=config.max_inner,
        )
        sub_cfg = replace(
            config, k=1, tau=tau_i,
            seed=_rng.derive_seed(config.seed, _rng.SERIES_TUNE, i, 1),
        )
        report = detect_changepoints(sub, sub_cfg)
        if report.q_hat > 0:
            count += 1
    return max(1, count)


def resolve_config(x, tensor, config):
    """Resolve ``"auto"`` sparsity and threshold against prepared data."""
    cfg = config
    if cfg.nu2 is None:
        cfg = replace(cfg, nu2=_resolve_nu2(None, tensor.B))
    if cfg.k == "auto":
        cfg = replace(cfg, k=min(estimate_sparsity(x, cfg), tensor.p))
    if cfg.tau == "auto":
        tau = bootstrap_threshold(
            tensor, cfg.k, cfg.bootstrap_samples, cfg.bootstrap_quantile,
            _rng.derive_seed(cfg.seed, _rng.BOOTSTRAP, 0, 0),
            nu2=cfg.nu2, split=cfg.split, nu1=cfg.nu1,
            tol=cfg.tol, max_outer=cfg.max_outer, max_inner=cfg.max_inner,
        )
        cfg = replace(cfg, tau=tau)
    return cfg


# ---------------------------------------------------------------------------
# Flat key=value config files

def parse_config_text(text):
    """Parse ``key = value`` lines into a dict of typed config overrides."""
    out = {}
    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"config line {ln}: expected key = value, got {raw!r}")
        key, val = (part.strip() for part in line.split("=", 1))
        if key not in _CONFIG_FIELD_TYPES:
            raise ConfigError(f"config line {ln}: unknown key {key!r}")
        out[key] = _parse_value(key, val, ln)
    return out


def _parse_value(key, val, ln):
    spec = _CONFIG_FIELD_TYPES[key]
    low = val.lower()
    try:
        if spec is bool:
            if low in ("true", "1", "yes", "on"):
                return True
            if low in ("false", "0", "no", "off"):
                return False
            raise ValueError(val)
        if spec is int:
            return int(val)
        if spec is float:
            return float(val)
        if spec == "int_or_auto":
            return "auto" if low == "auto" else int(val)
        if spec == "float_or_auto":
            return "auto" if low == "auto" else float(val)
        if spec == "int_or_none":
            return None if low in ("none", "auto") else int(val)
    except ValueError:
        raise ConfigError(f"config line {ln}: bad value {val!r} for {key}") from None
    raise ConfigError(f"unhandled config key {key!r}")


def load_config_file(path):
    with open(path, encoding="utf-8") as fh:
        return parse_config_text(fh.read())
