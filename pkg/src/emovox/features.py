"""Frame-level and utterance-level acoustic features.

Each windowed frame is summarized by a 66-entry vector: 13 mel cepstral
coefficients, their deltas, 13 gammatone cepstral coefficients, their
deltas, seven spectral shape descriptors, harmonic ratio, pitch,
log-energy, and four reserved slots kept at zero. An utterance is the
per-dimension mean and population variance of its frame vectors, giving
132 entries.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.fft import dct

from emovox import emd
from emovox.emd import SiftConfig
from emovox.signal_io import (
    CANONICAL_RATE, FFT_SIZE, FRAME_LEN, HOP,
    AudioBuffer, FrameSequence, Spectrum, frame_signal, magnitude_spectrum,
)

FRAME_FEATURE_SIZE = 66
UTTERANCE_FEATURE_SIZE = 2 * FRAME_FEATURE_SIZE

# frame vector layout
MFCC_SLICE = slice(0, 13)
DMFCC_SLICE = slice(13, 26)
GTCC_SLICE = slice(26, 39)
DGTCC_SLICE = slice(39, 52)
CENTROID_IDX = 52
SPREAD_IDX = 53
ENTROPY_IDX = 54
FLUX_IDX = 55
ROLLOFF_IDX = 56
FLATNESS_IDX = 57
SKEWNESS_IDX = 58
HARMONIC_RATIO_IDX = 59
PITCH_IDX = 60
LOG_ENERGY_IDX = 61
RESERVED_SLICE = slice(62, 66)

_LOG_FLOOR = 1e-10

_SOURCE_KINDS = ("raw", "emd_detrend", "imf_sum")


def parse_source_mode(mode: str):
    """Split a source mode string into (kind, n_imfs).

    Accepted: "raw", "emd_detrend", "imf_sum:N" (hyphens work too).
    """
    text = str(mode).strip().lower().replace("-", "_")
    if text in ("raw", "emd_detrend"):
        return text, None
    if text.startswith("imf_sum:"):
        try:
            n = int(text.split(":", 1)[1])
        except ValueError:
            raise ValueError(f"bad IMF count in source mode {mode!r}")
        if n < 1:
            raise ValueError("imf_sum needs at least 1 IMF")
        return "imf_sum", n
    raise ValueError(
        f"unknown source mode {mode!r}; expected raw, emd_detrend, or imf_sum:N"
    )


@dataclass
class FeatureConfig:
    """Feature extraction knobs; defaults give the 66/132 layout."""

    n_mfcc: int = 13
    n_gtcc: int = 13
    n_mel_filters: int = 26
    n_gt_filters: int = 32
    delta_window: int = 9
    rolloff_fraction: float = 0.95
    pitch_min: float = 50.0
    pitch_max: float = 400.0
    source_mode: str = "emd_detrend"
    frame_len: int = FRAME_LEN
    hop: int = HOP
    fft_size: int = FFT_SIZE

    def __post_init__(self):
        if not (0 < self.n_mfcc <= self.n_mel_filters):
            raise ValueError("need 0 < n_mfcc <= n_mel_filters")
        if not (0 < self.n_gtcc <= self.n_gt_filters):
            raise ValueError("need 0 < n_gtcc <= n_gt_filters")
        if self.delta_window < 3 or self.delta_window % 2 == 0:
            raise ValueError("delta_window must be odd and at least 3")
        if not (0.0 < self.rolloff_fraction <= 1.0):
            raise ValueError("rolloff_fraction must be in (0, 1]")
        if not (0.0 < self.pitch_min < self.pitch_max):
            raise ValueError("need 0 < pitch_min < pitch_max")
        parse_source_mode(self.source_mode)


@dataclass
class UtteranceFeatures:
    """Mean-and-variance summary of one utterance."""

    vector: np.ndarray   # (132,) frame means then population variances
    num_frames: int
    source_path: str = ""


def mel_of(freq):
    return 2595.0 * np.log10(1.0 + np.asarray(freq, dtype=np.float64) / 700.0)


def mel_to_freq(mel):
    return 700.0 * (10.0 ** (np.asarray(mel, dtype=np.float64) / 2595.0) - 1.0)


def erb_rate_of(freq):
    return 21.4 * np.log10(1.0 + 0.00437 * np.asarray(freq, dtype=np.float64))


def erb_rate_to_freq(rate):
    return (10.0 ** (np.asarray(rate, dtype=np.float64) / 21.4) - 1.0) / 0.00437


def erb_bandwidth(freq):
    return 24.7 * (1.0 + 4.37 * np.asarray(freq, dtype=np.float64) / 1000.0)


@lru_cache(maxsize=8)
def _mel_bank(n_filters: int, fft_size: int, sample_rate: int,
              f_lo: float, f_hi: float) -> np.ndarray:
    """Triangular filters with corners uniform on the mel scale,
    linear in Hz between corners; rows are filters over rfft bins."""
    freqs = np.arange(fft_size // 2 + 1) * (sample_rate / fft_size)
    edges = mel_to_freq(np.linspace(mel_of(f_lo), mel_of(f_hi), n_filters + 2))
    bank = np.zeros((n_filters, len(freqs)))
    for m in range(n_filters):
        lo, mid, hi = edges[m], edges[m + 1], edges[m + 2]
        rise = (freqs - lo) / (mid - lo)
        fall = (hi - freqs) / (hi - mid)
        bank[m] = np.maximum(0.0, np.minimum(rise, fall))
    return bank


@lru_cache(maxsize=8)
def _gammatone_bank(n_filters: int, fft_size: int, sample_rate: int,
                    f_lo: float, f_hi: float) -> np.ndarray:
    """Fourth-order gammatone magnitude responses on the rfft bins.

    Center frequencies are uniform on the ERB-rate scale. The response
    (1 + ((f - fc) / (b ERB(fc)))^2)^-2 with b = 1.019 peaks at exactly
    1 at the center frequency.
    """
    freqs = np.arange(fft_size // 2 + 1) * (sample_rate / fft_size)
    centers = erb_rate_to_freq(
        np.linspace(erb_rate_of(f_lo), erb_rate_of(f_hi), n_filters))
    bank = np.zeros((n_filters, len(freqs)))
    for c, fc in enumerate(centers):
        u = (freqs - fc) / (1.019 * erb_bandwidth(fc))
        bank[c] = (1.0 + u * u) ** -2.0
    return bank


def mel_filterbank(cfg: FeatureConfig = FeatureConfig(),
                   sample_rate: int = CANONICAL_RATE) -> np.ndarray:
    return _mel_bank(cfg.n_mel_filters, cfg.fft_size, sample_rate, 0.0, 8000.0)


def gammatone_filterbank(cfg: FeatureConfig = FeatureConfig(),
                         sample_rate: int = CANONICAL_RATE) -> np.ndarray:
    return _gammatone_bank(cfg.n_gt_filters, cfg.fft_size, sample_rate,
                           50.0, 8000.0)


def cepstral_from_energies(band_energies: np.ndarray, n_keep: int) -> np.ndarray:
    """log(E + 1e-10) followed by an orthonormal DCT-II, truncated."""
    logs = np.log(np.asarray(band_energies, dtype=np.float64) + _LOG_FLOOR)
    return dct(logs, type=2, norm="ortho")[:n_keep]


def mfcc(spectrum: Spectrum, cfg: FeatureConfig = FeatureConfig()) -> np.ndarray:
    """Mel cepstral coefficients of one magnitude spectrum.

    Band energies are the mel filters applied to squared magnitudes.
    """
    bank = _mel_bank(cfg.n_mel_filters, spectrum.fft_size,
                     _rate_of(spectrum), 0.0, 8000.0)
    energies = bank @ np.square(spectrum.magnitudes)
    return cepstral_from_energies(energies, cfg.n_mfcc)


def gtcc(spectrum: Spectrum, cfg: FeatureConfig = FeatureConfig()) -> np.ndarray:
    """Gammatone cepstral coefficients of one magnitude spectrum.

    Band energy is the energy of the magnitude-weighted spectrum,
    sum_k (|G(f_k)| s_k)^2.
    """
    bank = _gammatone_bank(cfg.n_gt_filters, spectrum.fft_size,
                           _rate_of(spectrum), 50.0, 8000.0)
    energies = np.square(bank) @ np.square(spectrum.magnitudes)
    return cepstral_from_energies(energies, cfg.n_gtcc)


def _rate_of(spectrum: Spectrum) -> int:
    # bin_freqs[1] is sample_rate / fft_size
    if spectrum.num_bins < 2:
        return CANONICAL_RATE
    return int(round(spectrum.bin_freqs[1] * spectrum.fft_size))


def delta(track: np.ndarray, window: int = 9) -> np.ndarray:
    """Least-squares local slope along the frame axis.

    d_t = sum_m m c_{t+m} / sum_m m^2 over m in [-M, M], with edge
    frames replicated; window = 2 M + 1.
    """
    track = np.asarray(track, dtype=np.float64)
    if window < 3 or window % 2 == 0:
        raise ValueError("window must be odd and at least 3")
    squeeze = track.ndim == 1
    if squeeze:
        track = track[:, None]
    if track.shape[0] == 0:
        return np.zeros(0) if squeeze else track.copy()
    m = (window - 1) // 2
    padded = np.pad(track, ((m, m), (0, 0)), mode="edge")
    out = np.zeros_like(track)
    for k in range(1, m + 1):
        out += k * (padded[m + k:m + k + len(track)]
                    - padded[m - k:m - k + len(track)])
    out /= 2.0 * sum(k * k for k in range(1, m + 1))
    return out[:, 0] if squeeze else out


def spectral_descriptors(spectrum: Spectrum, prev: Spectrum = None,
                         cfg: FeatureConfig = FeatureConfig()) -> np.ndarray:
    """Seven shape descriptors of one magnitude spectrum.

    Order: centroid, spread, entropy, flux, rolloff, flatness, skewness.
    Centroid, spread, and skewness are magnitude-weighted moments of the
    bin frequencies; entropy and flatness work on the power distribution
    (entropy normalized by ln num_bins, flatness is the geometric over
    arithmetic power mean with a 1e-10 floor inside the geometric mean);
    flux is the Euclidean distance to the previous frame's magnitudes
    (0 for the first frame); rolloff is the smallest bin frequency below
    which the configured fraction of the energy lies. An all-zero
    spectrum maps to all seven values 0. Skewness of a zero-spread
    spectrum is 0.
    """
    s = spectrum.magnitudes
    f = spectrum.bin_freqs
    out = np.zeros(7)
    total_mag = float(s.sum())
    power = np.square(s)
    total_pow = float(power.sum())
    if total_mag == 0.0 or total_pow == 0.0:
        return out

    centroid = float((f * s).sum()) / total_mag
    spread = float(np.sqrt(((f - centroid) ** 2 * s).sum() / total_mag))
    if spread > 0.0:
        skewness = float(((f - centroid) ** 3 * s).sum()) / (spread ** 3 * total_mag)
    else:
        skewness = 0.0

    p = power / total_pow
    nonzero = p > 0.0
    entropy = float(-(p[nonzero] * np.log(p[nonzero])).sum() / np.log(len(s)))

    flux = 0.0
    if prev is not None:
        flux = float(np.sqrt(np.square(s - prev.magnitudes).sum()))

    cum = np.cumsum(power)
    idx = int(np.searchsorted(cum, cfg.rolloff_fraction * total_pow))
    rolloff = float(f[min(idx, len(f) - 1)])

    geo = float(np.exp(np.mean(np.log(power + _LOG_FLOOR))))
    flatness = geo / (total_pow / len(s))

    out[:] = (centroid, spread, entropy, flux, rolloff, flatness, skewness)
    return out


def pitch_and_harmonic_ratio(frame: np.ndarray,
                             sample_rate: int = CANONICAL_RATE,
                             cfg: FeatureConfig = FeatureConfig()):
    """Autocorrelation pitch tracker over the configured pitch band.

    rho(tau) = sum_t x_t x_{t+tau} / sqrt(sum x_t^2 sum x_{t+tau}^2)
    over lags in [sample_rate / pitch_max, sample_rate / pitch_min]
    clipped to the frame length. Returns (pitch_hz, harmonic_ratio)
    where harmonic_ratio = max(0, max rho) and pitch is the lag of the
    maximum (ties to the lowest lag). All-zero frames give (0, 0).
    """
    x = np.asarray(frame, dtype=np.float64)
    n = len(x)
    if n < 2 or not np.any(x):
        return 0.0, 0.0
    lag_lo = max(1, int(np.ceil(sample_rate / cfg.pitch_max)))
    lag_hi = min(int(sample_rate // cfg.pitch_min), n - 1)
    if lag_hi < lag_lo:
        return 0.0, 0.0
    sq = np.square(x)
    head = np.cumsum(sq)                 # head[i] = sum sq[0..i]
    best_rho = -np.inf
    best_lag = lag_lo
    for lag in range(lag_lo, lag_hi + 1):
        num = float(np.dot(x[:n - lag], x[lag:]))
        e_head = float(head[n - lag - 1])
        e_tail = float(head[n - 1] - (head[lag - 1] if lag > 0 else 0.0))
        if e_head == 0.0 or e_tail == 0.0:
            rho = 0.0
        else:
            rho = num / np.sqrt(e_head * e_tail)
        if rho > best_rho:
            best_rho = rho
            best_lag = lag
    return sample_rate / best_lag, max(0.0, best_rho)


def log_energy(frame: np.ndarray) -> float:
    """ln(sum x^2 + 1e-10)."""
    x = np.asarray(frame, dtype=np.float64)
    return float(np.log(np.square(x).sum() + _LOG_FLOOR))


def frame_feature_matrix(frames: FrameSequence,
                         cfg: FeatureConfig = FeatureConfig()) -> np.ndarray:
    """Per-frame 66-entry feature vectors, one row per frame."""
    num = frames.num_frames
    out = np.zeros((num, FRAME_FEATURE_SIZE))
    mfccs = np.zeros((num, cfg.n_mfcc))
    gtccs = np.zeros((num, cfg.n_gtcc))
    prev = None
    for t in range(num):
        frame = frames.frames[t]
        spec = magnitude_spectrum(frame, cfg.fft_size, frames.sample_rate)
        mfccs[t] = mfcc(spec, cfg)
        gtccs[t] = gtcc(spec, cfg)
        out[t, CENTROID_IDX:SKEWNESS_IDX + 1] = spectral_descriptors(spec, prev, cfg)
        pitch, hr = pitch_and_harmonic_ratio(frame, frames.sample_rate, cfg)
        out[t, HARMONIC_RATIO_IDX] = hr
        out[t, PITCH_IDX] = pitch
        out[t, LOG_ENERGY_IDX] = log_energy(frame)
        prev = spec
    out[:, MFCC_SLICE] = mfccs
    out[:, DMFCC_SLICE] = delta(mfccs, cfg.delta_window)
    out[:, GTCC_SLICE] = gtccs
    out[:, DGTCC_SLICE] = delta(gtccs, cfg.delta_window)
    return out


def aggregate_frame_features(matrix: np.ndarray) -> np.ndarray:
    """Utterance vector: per-dimension mean then population variance."""
    matrix = np.asarray(matrix, dtype=np.float64)
    if matrix.shape[0] == 0:
        raise ValueError("cannot aggregate zero frames")
    return np.concatenate([matrix.mean(axis=0), matrix.var(axis=0)])


def apply_source_mode(buffer: AudioBuffer, cfg: FeatureConfig,
                      sift_cfg: SiftConfig = SiftConfig()) -> np.ndarray:
    """Signal conditioning before framing.

    raw passes the samples through; emd_detrend subtracts the EMD
    residual (equivalently, sums all IMFs); imf_sum:N sums the first N
    IMFs (all of them when fewer exist).
    """
    kind, n_imfs = parse_source_mode(cfg.source_mode)
    if kind == "raw":
        return buffer.samples
    decomp = emd.decompose(buffer.samples, sift_cfg)
    if kind == "emd_detrend":
        return buffer.samples - decomp.residual
    picked = decomp.imfs[:n_imfs]
    if not picked:
        return np.zeros_like(buffer.samples)
    return np.sum(picked, axis=0)


def extract_utterance(buffer: AudioBuffer,
                      cfg: FeatureConfig = FeatureConfig(),
                      sift_cfg: SiftConfig = SiftConfig()) -> UtteranceFeatures:
    """Full utterance feature vector from a 16 kHz buffer.

    Applies the configured source mode, frames and windows the signal,
    computes per-frame features, and aggregates them. Raises ValueError
    for audio at any other rate (resample first) or shorter than one
    frame.
    """
    if buffer.sample_rate != CANONICAL_RATE:
        raise ValueError(
            f"expected {CANONICAL_RATE} Hz audio, got {buffer.sample_rate};"
            " resample before feature extraction"
        )
    conditioned = apply_source_mode(buffer, cfg, sift_cfg)
    frames = frame_signal(AudioBuffer(conditioned, buffer.sample_rate),
                          cfg.frame_len, cfg.hop)
    if frames.num_frames == 0:
        raise ValueError(
            f"utterance too short: {len(buffer)} samples < one {cfg.frame_len}"
            " sample frame"
        )
    matrix = frame_feature_matrix(frames, cfg)
    return UtteranceFeatures(aggregate_frame_features(matrix),
                             frames.num_frames, buffer.source_path)
