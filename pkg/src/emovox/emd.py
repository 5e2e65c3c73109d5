"""Empirical mode decomposition by envelope sifting.

A signal is split into intrinsic mode functions (IMFs) plus a residual
such that the parts sum back to the input exactly. Each IMF is produced
by repeatedly subtracting the mean of the cubic-spline envelopes through
the local maxima and minima until the detail oscillates symmetrically
around zero.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from emovox.signal_io import AudioBuffer

# validity tolerance a detail must meet before it is emitted as an IMF
_EMIT_TOL = 0.1


@dataclass
class SiftConfig:
    """Knobs for the sifting loop.

    sd_threshold: normalized squared change between consecutive sifts
        below which the detail is considered settled.
    max_sift_iters: hard cap on sifts per IMF.
    max_imfs: hard cap on the number of IMFs per decomposition.
    boundary_reflect_count: extrema mirrored across each signal end
        before spline fitting, to tame envelope end swings.
    """

    sd_threshold: float = 0.2
    max_sift_iters: int = 100
    max_imfs: int = 10
    boundary_reflect_count: int = 2

    def __post_init__(self):
        if self.sd_threshold <= 0:
            raise ValueError("sd_threshold must be positive")
        if self.max_sift_iters < 1 or self.max_imfs < 1:
            raise ValueError("iteration caps must be at least 1")
        if self.boundary_reflect_count < 0:
            raise ValueError("boundary_reflect_count must be non-negative")


@dataclass
class ExtremaSet:
    """Interior local maxima and minima of a signal, as parallel
    index/value arrays. Plateaus are collapsed to their midpoint."""

    max_indices: np.ndarray
    max_values: np.ndarray
    min_indices: np.ndarray
    min_values: np.ndarray

    @property
    def num_extrema(self) -> int:
        return len(self.max_indices) + len(self.min_indices)


@dataclass
class ImfDecomposition:
    """Ordered IMFs (fastest oscillation first) plus the residual."""

    imfs: list = field(default_factory=list)
    residual: np.ndarray = None
    original_len: int = 0

    @property
    def num_imfs(self) -> int:
        return len(self.imfs)


def find_extrema(signal: np.ndarray) -> ExtremaSet:
    """Locate interior local maxima and minima.

    A run of equal values flanked by a rise and a fall (or fall and
    rise) counts as a single extremum at the plateau midpoint. Signal
    ends never qualify. Constant signals have no extrema.
    """
    x = np.asarray(signal, dtype=np.float64)
    if len(x) < 3:
        raise ValueError("need at least 3 samples to find interior extrema")
    empty = np.array([], dtype=np.int64)
    d = np.diff(x)
    nz = np.flatnonzero(d)
    if nz.size < 2:
        return ExtremaSet(empty, np.array([]), empty, np.array([]))
    s = np.sign(d[nz])
    flip = s[:-1] != s[1:]
    # plateau spans [nz[i]+1, nz[i+1]]; midpoint is its representative
    mids = (nz[:-1] + 1 + nz[1:]) // 2
    max_idx = mids[flip & (s[:-1] > 0)]
    min_idx = mids[flip & (s[:-1] < 0)]
    return ExtremaSet(max_idx, x[max_idx], min_idx, x[min_idx])


def zero_crossing_count(signal: np.ndarray) -> int:
    """Sign changes along the signal, ignoring exact zeros."""
    s = np.sign(np.asarray(signal))
    s = s[s != 0]
    if s.size < 2:
        return 0
    return int(np.count_nonzero(s[:-1] != s[1:]))


def _fit_envelope(n: int, idx: np.ndarray, val: np.ndarray,
                  reflect: int) -> np.ndarray:
    """Natural cubic spline through (idx, val) sampled at 0..n-1, with
    up to `reflect` knots mirrored across each signal end."""
    t = idx.astype(np.float64)
    v = np.asarray(val, dtype=np.float64)
    if reflect > 0:
        lt, lv = t[:reflect], v[:reflect]
        keep = lt > 0          # a knot on the end maps onto itself; skip it
        lt, lv = -lt[keep][::-1], lv[keep][::-1]
        rt, rv = t[-reflect:], v[-reflect:]
        keep = rt < n - 1
        rt, rv = (2.0 * (n - 1) - rt[keep])[::-1], rv[keep][::-1]
        t = np.concatenate([lt, t, rt])
        v = np.concatenate([lv, v, rv])
    grid = np.arange(n, dtype=np.float64)
    if len(t) == 2:
        # natural spline through two knots is the straight line
        return v[0] + (v[1] - v[0]) * (grid - t[0]) / (t[1] - t[0])
    return CubicSpline(t, v, bc_type="natural")(grid)


def spline_envelope(n: int, knots, reflect: int = 2) -> np.ndarray:
    """Envelope through (index, value) knots, evaluated at 0..n-1."""
    knots = list(knots)
    if len(knots) < 2:
        raise ValueError("envelope needs at least 2 knots")
    idx = np.array([k[0] for k in knots], dtype=np.int64)
    val = np.array([k[1] for k in knots], dtype=np.float64)
    order = np.argsort(idx)
    idx, val = idx[order], val[order]
    if np.any(np.diff(idx) == 0):
        raise ValueError("knot indices must be distinct")
    return _fit_envelope(n, idx, val, reflect)


def _mean_envelope(x: np.ndarray, ext: ExtremaSet, reflect: int) -> np.ndarray:
    n = len(x)
    upper = _fit_envelope(n, ext.max_indices, ext.max_values, reflect)
    lower = _fit_envelope(n, ext.min_indices, ext.min_values, reflect)
    return 0.5 * (upper + lower)


def _is_imf_given(x: np.ndarray, ext: ExtremaSet, mean_env: np.ndarray,
                  tol: float) -> bool:
    """IMF test with precomputed extrema and mean envelope."""
    if abs(ext.num_extrema - zero_crossing_count(x)) > 1:
        return False
    peak = float(np.abs(x).max())
    if peak == 0.0:
        return True
    return float(np.abs(mean_env).max()) <= tol * peak


def sift_once(signal: np.ndarray, cfg: SiftConfig = SiftConfig()):
    """Subtract the mean envelope from the signal once.

    Returns the new detail, or None when either envelope cannot be
    built (fewer than 2 maxima or 2 minima).
    """
    x = np.asarray(signal, dtype=np.float64)
    ext = find_extrema(x)
    if len(ext.max_indices) < 2 or len(ext.min_indices) < 2:
        return None
    return x - _mean_envelope(x, ext, cfg.boundary_reflect_count)


def is_imf(signal: np.ndarray, tol: float = _EMIT_TOL,
           reflect: int = 2) -> bool:
    """Check the two IMF conditions: extrema and zero-crossing counts
    differ by at most one, and the envelope mean stays within
    tol * max|signal| everywhere."""
    x = np.asarray(signal, dtype=np.float64)
    if len(x) < 3:
        return False
    ext = find_extrema(x)
    if len(ext.max_indices) < 2 or len(ext.min_indices) < 2:
        return False
    return _is_imf_given(x, ext, _mean_envelope(x, ext, reflect), tol)


def extract_imf(signal: np.ndarray, cfg: SiftConfig = SiftConfig()):
    """Sift one IMF out of the signal.

    The loop tracks the normalized squared change between consecutive
    details, SD = sum(mean_env^2) / sum(detail^2), and emits the current
    detail once SD falls below cfg.sd_threshold and the detail passes
    the IMF validity test. If the envelopes vanish mid-loop or the
    iteration cap is reached, the most recent valid detail is emitted
    instead; with no valid detail at all the extraction reports failure
    by returning None, and the caller should stop decomposing.

    Returns (imf, remainder) with imf + remainder == signal exactly, or
    None when no valid IMF can be produced.
    """
    x = np.asarray(signal, dtype=np.float64)
    if len(x) < 3:
        raise ValueError("need at least 3 samples to sift")
    d = x
    last_valid = None
    reflect = cfg.boundary_reflect_count
    for _ in range(cfg.max_sift_iters):
        ext = find_extrema(d)
        if len(ext.max_indices) < 2 or len(ext.min_indices) < 2:
            break
        m = _mean_envelope(d, ext, reflect)
        valid = _is_imf_given(d, ext, m, _EMIT_TOL)
        if valid:
            last_valid = d
        denom = float(np.dot(d, d))
        sd = float(np.dot(m, m)) / denom if denom > 0.0 else 0.0
        if valid and sd < cfg.sd_threshold:
            return d, x - d
        d = d - m
    if last_valid is None:
        return None
    return last_valid, x - last_valid


def decompose(signal, cfg: SiftConfig = SiftConfig()) -> ImfDecomposition:
    """Full decomposition: extract IMFs until the remainder is monotone
    or flat, extraction fails, or cfg.max_imfs is reached.

    Accepts an AudioBuffer or a plain array. Degenerate inputs (fewer
    than 3 samples, or no extrema) produce zero IMFs with the input as
    residual.
    """
    if isinstance(signal, AudioBuffer):
        signal = signal.samples
    x = np.asarray(signal, dtype=np.float64)
    imfs = []
    remainder = x.copy()
    if len(x) >= 3:
        while len(imfs) < cfg.max_imfs:
            result = extract_imf(remainder, cfg)
            if result is None:
                break
            imf, remainder = result
            imfs.append(imf)
    return ImfDecomposition(imfs, remainder, len(x))


def reconstruct(decomp: ImfDecomposition) -> np.ndarray:
    """Sum of all IMFs plus the residual."""
    out = decomp.residual.copy()
    for imf in decomp.imfs:
        out += imf
    return out


def imf_stats(decomp: ImfDecomposition):
    """Per-component (name, rms, extrema count, zero crossings) rows for
    reporting; components are imf_1..imf_M then residual."""
    rows = []
    parts = [(f"imf_{i + 1}", imf) for i, imf in enumerate(decomp.imfs)]
    parts.append(("residual", decomp.residual))
    for name, x in parts:
        rms = float(np.sqrt(np.mean(np.square(x)))) if len(x) else 0.0
        if len(x) >= 3:
            n_ext = find_extrema(x).num_extrema
        else:
            n_ext = 0
        rows.append((name, rms, n_ext, zero_crossing_count(x)))
    return rows
