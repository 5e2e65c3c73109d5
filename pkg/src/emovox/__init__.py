"""Speech emotion recognition toolkit.

Pipeline stages: WAV decoding and resampling (``signal_io``), empirical
mode decomposition (``emd``), frame-level and utterance-level feature
extraction (``features``), four classifier families behind a shared
normalization and persistence layer (``classifiers``), and corpus
ingestion / evaluation / CLI plumbing (``dataset``, ``evaluation``,
``cli``).
"""

__version__ = "0.1.0"

from emovox.signal_io import AudioBuffer, load_wav, write_wav, resample
from emovox.emd import SiftConfig, decompose, reconstruct
from emovox.features import FeatureConfig, extract_utterance

__all__ = [
    "AudioBuffer",
    "load_wav",
    "write_wav",
    "resample",
    "SiftConfig",
    "decompose",
    "reconstruct",
    "FeatureConfig",
    "extract_utterance",
    "__version__",
]
