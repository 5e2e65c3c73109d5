"""WAV decoding, resampling, framing, and magnitude spectra.

Every signal entering the toolkit passes through this module: decode to
float mono, resample to the canonical 16 kHz processing rate, slice into
windowed frames, and transform each frame to a one-sided magnitude
spectrum.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass
from math import gcd
from pathlib import Path

import numpy as np

CANONICAL_RATE = 16000
FRAME_LEN = 400   # 25 ms at 16 kHz
HOP = 160         # 10 ms at 16 kHz
FFT_SIZE = 512

# resampler prototype filter: Kaiser window, 32 taps per output sample
_RESAMPLE_TAPS = 32
_RESAMPLE_HALF = _RESAMPLE_TAPS // 2
_KAISER_BETA = 8.0
_RESAMPLE_CHUNK = 65536


class WavError(Exception):
    """Base class for WAV decoding failures."""


class WavHeaderError(WavError):
    """File is not a RIFF/WAVE container or its structure is malformed."""


class WavCodecError(WavError):
    """Valid container but unsupported codec, bit depth, or channel count."""


@dataclass
class AudioBuffer:
    """Mono float64 signal with its sample rate.

    Samples produced by :func:`load_wav` are normalized to [-1, 1].
    Resampled buffers may overshoot unity slightly (filter ringing).
    """

    samples: np.ndarray
    sample_rate: int
    source_path: str = ""

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)
        if self.samples.ndim != 1:
            raise ValueError("AudioBuffer samples must be one-dimensional")
        if self.sample_rate <= 0:
            raise ValueError("sample_rate must be positive")

    def __len__(self) -> int:
        return self.samples.shape[0]

    @property
    def duration(self) -> float:
        return len(self) / self.sample_rate


@dataclass
class FrameSequence:
    """Windowed analysis frames, one per row."""

    frames: np.ndarray   # (num_frames, frame_len), window already applied
    frame_len: int
    hop: int
    sample_rate: int

    @property
    def num_frames(self) -> int:
        return self.frames.shape[0]


@dataclass
class Spectrum:
    """One-sided magnitude spectrum of a single frame."""

    magnitudes: np.ndarray   # (fft_size // 2 + 1,), non-negative
    bin_freqs: np.ndarray    # Hz, bin k at k * sample_rate / fft_size
    fft_size: int

    @property
    def num_bins(self) -> int:
        return self.magnitudes.shape[0]


def load_wav(path) -> AudioBuffer:
    """Decode a RIFF/WAVE file to a mono float64 buffer in [-1, 1].

    Supports PCM 16-bit (format tag 1) and IEEE float32 (format tag 3),
    1 or 2 channels. Stereo is averaged to mono. Unknown chunks are
    skipped. Raises FileNotFoundError for a missing file,
    WavHeaderError for structural problems, and WavCodecError for
    unsupported encodings.
    """
    raw = Path(path).read_bytes()
    if len(raw) < 12 or raw[:4] != b"RIFF" or raw[8:12] != b"WAVE":
        raise WavHeaderError(f"{path}: not a RIFF/WAVE file")

    fmt = None
    data = None
    pos = 12
    while pos + 8 <= len(raw):
        chunk_id = raw[pos:pos + 4]
        (size,) = struct.unpack_from("<I", raw, pos + 4)
        body = raw[pos + 8:pos + 8 + size]
        if len(body) < size:
            raise WavHeaderError(
                f"{path}: chunk {chunk_id!r} claims {size} bytes but file is truncated"
            )
        if chunk_id == b"fmt ":
            if size < 16:
                raise WavHeaderError(f"{path}: fmt chunk shorter than 16 bytes")
            fmt = struct.unpack_from("<HHIIHH", body, 0)
        elif chunk_id == b"data":
            data = body
        if fmt is not None and data is not None:
            break   # ignore trailing bytes after the needed chunks
        pos += 8 + size + (size & 1)   # chunks are word-aligned

    if fmt is None:
        raise WavHeaderError(f"{path}: missing fmt chunk")
    if data is None:
        raise WavHeaderError(f"{path}: missing data chunk")

    audio_format, channels, rate, _byte_rate, _block_align, bits = fmt
    if rate <= 0:
        raise WavHeaderError(f"{path}: invalid sample rate {rate}")
    if channels not in (1, 2):
        raise WavCodecError(f"{path}: {channels} channels unsupported (need 1 or 2)")

    if audio_format == 1:
        if bits != 16:
            raise WavCodecError(f"{path}: PCM bit depth {bits} unsupported (need 16)")
        width = 2 * channels
        usable = (len(data) // width) * width
        x = np.frombuffer(data[:usable], dtype="<i2").astype(np.float64) / 32768.0
    elif audio_format == 3:
        if bits != 32:
            raise WavCodecError(f"{path}: float bit depth {bits} unsupported (need 32)")
        width = 4 * channels
        usable = (len(data) // width) * width
        x = np.frombuffer(data[:usable], dtype="<f4").astype(np.float64)
        x = np.clip(x, -1.0, 1.0)
    else:
        raise WavCodecError(f"{path}: codec tag {audio_format} unsupported (need 1 or 3)")

    if channels == 2:
        x = x.reshape(-1, 2).mean(axis=1)
    return AudioBuffer(x, rate, str(path))


def write_wav(path, buffer: AudioBuffer) -> None:
    """Write a mono buffer as PCM 16-bit; inverse of load_wav within one
    quantization step (1/32768)."""
    pcm = np.clip(np.round(buffer.samples * 32768.0), -32768, 32767).astype("<i2")
    data = pcm.tobytes()
    header = b"RIFF" + struct.pack("<I", 36 + len(data)) + b"WAVE"
    header += b"fmt " + struct.pack(
        "<IHHIIHH", 16, 1, 1, buffer.sample_rate,
        buffer.sample_rate * 2, 2, 16,
    )
    header += b"data" + struct.pack("<I", len(data))
    Path(path).write_bytes(header + data)


def _kaiser_window(tau: np.ndarray) -> np.ndarray:
    inside = np.maximum(0.0, 1.0 - (tau / _RESAMPLE_HALF) ** 2)
    return np.i0(_KAISER_BETA * np.sqrt(inside)) / np.i0(_KAISER_BETA)


def resample(buffer: AudioBuffer, target_rate: int) -> AudioBuffer:
    """Rational-rate resampling with a Kaiser windowed-sinc kernel.

    Each output sample is a 32-tap dot product against the input; taps
    are normalized to unit sum so constant signals pass through exactly
    away from the edges. Output length is round(n * target / source).
    When target_rate equals the buffer rate the buffer is returned
    unchanged.
    """
    if target_rate <= 0:
        raise ValueError("target_rate must be positive")
    src = buffer.sample_rate
    if target_rate == src:
        return buffer
    x = buffer.samples
    ratio = target_rate / src
    n_out = int(np.floor(len(x) * ratio + 0.5))
    if n_out == 0 or len(x) == 0:
        return AudioBuffer(np.zeros(0), target_rate, buffer.source_path)

    g = gcd(src, target_rate)
    up, down = target_rate // g, src // g
    scale = min(1.0, ratio)   # anti-alias cutoff when decimating
    offs = np.arange(-(_RESAMPLE_HALF - 1), _RESAMPLE_HALF + 1)
    pad = np.concatenate([np.zeros(_RESAMPLE_HALF), x, np.zeros(_RESAMPLE_HALF)])

    out = np.empty(n_out)
    for start in range(0, n_out, _RESAMPLE_CHUNK):
        n = np.arange(start, min(start + _RESAMPLE_CHUNK, n_out), dtype=np.int64)
        pos = (n * down) / up
        base = np.floor(pos).astype(np.int64)
        tau = pos[:, None] - (base[:, None] + offs[None, :])
        taps = scale * np.sinc(scale * tau) * _kaiser_window(tau)
        taps /= taps.sum(axis=1, keepdims=True)
        rows = pad[base[:, None] + offs[None, :] + _RESAMPLE_HALF]
        out[n] = np.einsum("ij,ij->i", rows, taps)
    return AudioBuffer(out, target_rate, buffer.source_path)


def hamming_window(frame_len: int) -> np.ndarray:
    """Periodic Hamming window: 0.54 - 0.46 cos(2 pi n / frame_len)."""
    n = np.arange(frame_len)
    return 0.54 - 0.46 * np.cos(2.0 * np.pi * n / frame_len)


def frame_signal(buffer: AudioBuffer, frame_len: int = FRAME_LEN,
                 hop: int = HOP) -> FrameSequence:
    """Slice into hop-spaced frames and apply the periodic Hamming window.

    A trailing partial frame is discarded; signals shorter than one
    frame produce an empty sequence.
    """
    if frame_len <= 0 or hop <= 0:
        raise ValueError("frame_len and hop must be positive")
    x = buffer.samples
    n = len(x)
    if n < frame_len:
        frames = np.zeros((0, frame_len))
    else:
        num = 1 + (n - frame_len) // hop
        starts = np.arange(num) * hop
        idx = starts[:, None] + np.arange(frame_len)[None, :]
        frames = x[idx] * hamming_window(frame_len)[None, :]
    return FrameSequence(frames, frame_len, hop, buffer.sample_rate)


def magnitude_spectrum(frame: np.ndarray, fft_size: int = FFT_SIZE,
                       sample_rate: int = CANONICAL_RATE) -> Spectrum:
    """One-sided magnitude spectrum of a zero-padded frame.

    fft_size must be a power of two and at least the frame length.
    """
    frame = np.asarray(frame, dtype=np.float64)
    if fft_size < len(frame):
        raise ValueError("fft_size smaller than frame")
    if fft_size <= 0 or fft_size & (fft_size - 1):
        raise ValueError("fft_size must be a power of two")
    mags = np.abs(np.fft.rfft(frame, n=fft_size))
    freqs = np.arange(fft_size // 2 + 1) * (sample_rate / fft_size)
    return Spectrum(mags, freqs, fft_size)
