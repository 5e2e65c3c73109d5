"""Feature extraction tests against independent oracles and frozen values.

The frozen coefficient lists below were produced by the loop-based
reference implementations in oracles.py; they pin the mel and gammatone
cepstra, the descriptor vector, and the auditory scale maps so that a
regression in either route is caught.
"""
import numpy as np
import pytest

import oracles
from emovox.features import (
    FRAME_FEATURE_SIZE, UTTERANCE_FEATURE_SIZE,
    FeatureConfig, UtteranceFeatures,
    aggregate_frame_features, cepstral_from_energies, delta,
    erb_rate_of, erb_rate_to_freq, extract_utterance, frame_feature_matrix,
    gammatone_filterbank, gtcc, log_energy, mel_filterbank, mel_of,
    mel_to_freq, mfcc, parse_source_mode, pitch_and_harmonic_ratio,
    spectral_descriptors,
)
from emovox.signal_io import (
    AudioBuffer, Spectrum, frame_signal, hamming_window, magnitude_spectrum,
)


def _test_frame():
    n = np.arange(400)
    return (np.sin(0.05 * n) + 0.3 * np.sin(0.31 * n + 1.0)
            + 0.01 * np.cos(7.7 * n))


# Reference cepstra of _test_frame at 16 kHz, fft 512 (loop oracle).
MFCC13 = [
    -1.7736772689703657, 16.066019192268204, 6.672667164905888,
    2.6110394650946915, -1.8261024424780854, 4.02576074114924,
    6.968686834297053, 4.636312194438327, 4.618910985279783,
    -2.021684088496097, -5.010239791559722, -1.816409360195563,
    -2.192894871666371,
]
GTCC13 = [
    2.5529724885474487, 19.088468337799807, 3.2616832704607748,
    0.9539279961982616, 2.9164003249007964, 8.387237638356694,
    -0.04876227221429219, -6.196025282719967, -4.751593519167637,
    -3.630744836663958, 1.274112851317356, -0.11183078628251297,
    -3.5478846398721875,
]


class TestAuditoryScales:
    def test_frozen_spot_values(self):
        assert mel_of(4000.0) == pytest.approx(2146.06452750619, rel=1e-12)
        assert mel_to_freq(2000.0) == pytest.approx(3428.677394901048, rel=1e-12)
        assert erb_rate_of(1000.0) == pytest.approx(15.621449713970488, rel=1e-12)
        assert erb_rate_to_freq(10.0) == pytest.approx(442.29956714831576, rel=1e-12)

    def test_round_trips(self):
        freqs = np.array([31.25, 125.0, 1000.0, 4000.0, 7968.75])
        np.testing.assert_allclose(mel_to_freq(mel_of(freqs)), freqs, rtol=1e-12)
        np.testing.assert_allclose(erb_rate_to_freq(erb_rate_of(freqs)),
                                   freqs, rtol=1e-12)

    def test_against_oracle(self):
        for f in (50.0, 440.0, 3000.0):
            assert mel_of(f) == pytest.approx(oracles.mel(f), rel=1e-15)
            assert erb_rate_of(f) == pytest.approx(oracles.erb_rate(f),
                                                   rel=1e-15)


class TestFilterbanks:
    def test_mel_bank_shape_and_range(self):
        bank = mel_filterbank()
        assert bank.shape == (26, 257)
        assert np.all(bank >= 0.0) and np.all(bank <= 1.0)
        assert np.all(bank.sum(axis=1) > 0.0)

    def test_mel_energies_match_oracle(self):
        rng = np.random.default_rng(11)
        mags = rng.uniform(0.0, 2.0, size=257)
        got = mel_filterbank() @ np.square(mags)
        want = oracles.mel_energies(mags, 16000, 512, 26)
        np.testing.assert_allclose(got, want, rtol=1e-10)

    def test_gammatone_bank_shape_and_peaks(self):
        bank = gammatone_filterbank()
        assert bank.shape == (32, 257)
        assert np.all(bank > 0.0) and np.all(bank <= 1.0)
        # the unit response at each center lands between bins; the
        # narrowest (lowest) filter still keeps most of it, and the
        # peak bin sits within one bin spacing of the center
        centers = erb_rate_to_freq(
            np.linspace(erb_rate_of(50.0), erb_rate_of(8000.0), 32))
        freqs = np.arange(257) * (16000.0 / 512)
        assert np.all(bank.max(axis=1) > 0.6)
        peak_freqs = freqs[np.argmax(bank, axis=1)]
        assert np.all(np.abs(peak_freqs - centers) <= 16000.0 / 512)

    def test_gammatone_energies_match_oracle(self):
        rng = np.random.default_rng(12)
        mags = rng.uniform(0.0, 2.0, size=257)
        bank = gammatone_filterbank()
        got = np.square(bank) @ np.square(mags)
        want = oracles.gammatone_energies(mags, 16000, 512, 32)
        np.testing.assert_allclose(got, want, rtol=1e-10)


class TestCepstra:
    def test_mfcc_matches_frozen(self):
        spec = magnitude_spectrum(hamming_window(400) * _test_frame(),
                                  512, 16000)
        np.testing.assert_allclose(mfcc(spec), MFCC13, rtol=0, atol=1e-10)

    def test_gtcc_matches_frozen(self):
        spec = magnitude_spectrum(hamming_window(400) * _test_frame(),
                                  512, 16000)
        np.testing.assert_allclose(gtcc(spec), GTCC13, rtol=0, atol=1e-10)

    def test_random_frames_match_oracle(self):
        rng = np.random.default_rng(3)
        for _ in range(3):
            frame = rng.normal(scale=0.3, size=400)
            spec = magnitude_spectrum(hamming_window(400) * frame, 512, 16000)
            np.testing.assert_allclose(
                mfcc(spec), oracles.mfcc(frame, 16000, 512),
                rtol=0, atol=1e-8)
            np.testing.assert_allclose(
                gtcc(spec), oracles.gtcc(frame, 16000, 512),
                rtol=0, atol=1e-8)

    def test_cepstral_matches_oracle_dct(self):
        rng = np.random.default_rng(4)
        energies = rng.uniform(0.01, 5.0, size=26)
        got = cepstral_from_energies(energies, 13)
        want = oracles.dct_ortho(np.log(energies + 1e-10), 13)
        np.testing.assert_allclose(got, want, rtol=0, atol=1e-12)

    def test_zero_energy_hits_log_floor(self):
        out = cepstral_from_energies(np.zeros(26), 13)
        # log floor makes the log vector constant, so only the DC
        # cepstral coefficient survives
        assert out[0] == pytest.approx(np.sqrt(26.0) * np.log(1e-10))
        np.testing.assert_allclose(out[1:], 0.0, atol=1e-12)


class TestDelta:
    def test_matches_polyfit_oracle(self):
        rng = np.random.default_rng(5)
        track = rng.normal(size=(12, 4))
        np.testing.assert_allclose(delta(track, 9),
                                   oracles.delta(track, 9),
                                   rtol=0, atol=1e-10)

    def test_constant_track_is_zero(self):
        track = np.full((10, 3), 2.5)
        np.testing.assert_allclose(delta(track, 9), 0.0, atol=1e-12)

    def test_linear_ramp_interior_slope(self):
        track = (0.7 * np.arange(20.0))[:, None]
        out = delta(track, 9)
        # edge replication bends the first and last half-windows
        np.testing.assert_allclose(out[4:16, 0], 0.7, rtol=1e-12)

    def test_one_dimensional_squeeze(self):
        out = delta(np.arange(10.0), 5)
        assert out.shape == (10,)
        np.testing.assert_allclose(out[2:8], 1.0, rtol=1e-12)

    def test_empty_track(self):
        assert delta(np.zeros((0, 5)), 9).shape == (0, 5)
        assert delta(np.zeros(0), 9).shape == (0,)

    def test_window_validation(self):
        with pytest.raises(ValueError):
            delta(np.zeros((4, 2)), 4)
        with pytest.raises(ValueError):
            delta(np.zeros((4, 2)), 1)


class TestSpectralDescriptors:
    MAGS = np.array([0.0, 1.0, 2.0, 4.0, 2.0, 1.0, 0.5, 0.0])
    PREV = np.array([0.5, 0.5, 1.0, 3.0, 2.5, 0.5, 0.25, 0.125])
    FREQS = np.arange(8) * 1000.0
    # centroid, spread, entropy, flux, rolloff, flatness, skewness
    FROZEN = [
        3142.8571428571427, 1245.3996981544783, 0.5618913630315648,
        1.7544586059522749, 4000.0, 0.001620813987773334,
        0.319974576187889,
    ]

    def _spec(self, mags):
        return Spectrum(np.asarray(mags, dtype=np.float64), self.FREQS, 16)

    def test_matches_frozen(self):
        out = spectral_descriptors(self._spec(self.MAGS),
                                   self._spec(self.PREV))
        np.testing.assert_allclose(out, self.FROZEN, rtol=1e-12)

    def test_matches_oracle(self):
        rng = np.random.default_rng(6)
        mags = rng.uniform(0.0, 3.0, size=8)
        prev = rng.uniform(0.0, 3.0, size=8)
        got = spectral_descriptors(self._spec(mags), self._spec(prev))
        want = oracles.descriptors(mags, self.FREQS, prev, 0.95)
        np.testing.assert_allclose(got, want, rtol=1e-10)

    def test_all_zero_spectrum(self):
        np.testing.assert_array_equal(
            spectral_descriptors(self._spec(np.zeros(8))), np.zeros(7))

    def test_point_mass(self):
        mags = np.zeros(8)
        mags[3] = 1.0
        out = spectral_descriptors(self._spec(mags))
        assert out[0] == 3000.0          # centroid at the mass
        assert out[1] == 0.0             # spread
        assert out[2] == 0.0             # entropy
        assert out[4] == 3000.0          # rolloff
        assert out[6] == 0.0             # skewness of zero spread

    def test_flat_spectrum(self):
        mags = np.ones(257)
        freqs = np.arange(257) * (16000.0 / 512)
        out = spectral_descriptors(Spectrum(mags, freqs, 512))
        assert abs(out[2] - 1.0) < 1e-9      # entropy
        assert abs(out[5] - 1.0) < 1e-9      # flatness
        assert out[0] == pytest.approx(freqs.mean(), rel=1e-12)

    def test_first_frame_flux_is_zero(self):
        out = spectral_descriptors(self._spec(self.MAGS), None)
        assert out[3] == 0.0

    def test_flux_euclidean(self):
        out = spectral_descriptors(self._spec(self.MAGS),
                                   self._spec(self.PREV))
        want = float(np.sqrt(np.sum((self.MAGS - self.PREV) ** 2)))
        assert out[3] == pytest.approx(want, rel=1e-15)


class TestPitch:
    def test_pure_tone_exact_lag(self):
        # 150 samples keep only one multiple of the 80-sample period in
        # the lag range, so rounding noise cannot pick a subharmonic
        t = np.arange(150) / 16000.0
        pitch, hr = pitch_and_harmonic_ratio(np.sin(2 * np.pi * 200 * t))
        assert pitch == 200.0
        assert hr > 0.999

    def test_periodic_integer_pattern_exact(self):
        # 45-sample integer pattern with no shorter period; tiling makes
        # the lag-45 correlation exactly 1 in float arithmetic
        rng = np.random.default_rng(7)
        pattern = (rng.integers(1, 4, size=45)
                   * rng.choice([-1, 1], size=45)).astype(np.float64)
        tiled = np.tile(pattern, 9)[:400]
        pitch, hr = pitch_and_harmonic_ratio(tiled)
        assert pitch == 16000.0 / 45.0
        assert hr == 1.0

    def test_silent_frame(self):
        assert pitch_and_harmonic_ratio(np.zeros(400)) == (0.0, 0.0)

    def test_too_short_frame(self):
        assert pitch_and_harmonic_ratio(np.ones(30)) == (0.0, 0.0)

    def test_matches_oracle_on_noisy_tones(self):
        rng = np.random.default_rng(8)
        t = np.arange(400) / 16000.0
        for f0 in (110.0, 237.0, 390.0):
            frame = np.sin(2 * np.pi * f0 * t) + 0.05 * rng.normal(size=400)
            got = pitch_and_harmonic_ratio(frame)
            want = oracles.pitch_and_harmonic_ratio(frame, 16000)
            assert got[0] == want[0]
            assert got[1] == pytest.approx(want[1], rel=1e-10)


class TestLogEnergy:
    def test_identity(self):
        x = np.array([0.5, -0.25, 0.125])
        assert log_energy(x) == pytest.approx(
            np.log(0.25 + 0.0625 + 0.015625 + 1e-10), rel=1e-15)

    def test_silence_floor(self):
        assert log_energy(np.zeros(400)) == pytest.approx(np.log(1e-10))


class TestFrameFeatureMatrix:
    def _frames(self):
        t = np.arange(4000) / 16000.0
        x = (np.sin(2 * np.pi * 220 * t)
             + 0.4 * np.sin(2 * np.pi * 1800 * t + 0.3))
        return frame_signal(AudioBuffer(x, 16000))

    def test_layout(self):
        frames = self._frames()
        cfg = FeatureConfig()
        matrix = frame_feature_matrix(frames, cfg)
        assert matrix.shape == (frames.num_frames, FRAME_FEATURE_SIZE)
        np.testing.assert_array_equal(matrix[:, 62:66], 0.0)

        mfccs = np.zeros((frames.num_frames, 13))
        gtccs = np.zeros((frames.num_frames, 13))
        prev = None
        for i in range(frames.num_frames):
            frame = frames.frames[i]
            spec = magnitude_spectrum(frame, cfg.fft_size, 16000)
            mfccs[i] = mfcc(spec, cfg)
            gtccs[i] = gtcc(spec, cfg)
            np.testing.assert_array_equal(
                matrix[i, 52:59], spectral_descriptors(spec, prev, cfg))
            pitch, hr = pitch_and_harmonic_ratio(frame, 16000, cfg)
            assert matrix[i, 59] == hr
            assert matrix[i, 60] == pitch
            assert matrix[i, 61] == log_energy(frame)
            prev = spec
        np.testing.assert_array_equal(matrix[:, 0:13], mfccs)
        np.testing.assert_array_equal(matrix[:, 26:39], gtccs)
        np.testing.assert_allclose(matrix[:, 13:26],
                                   delta(mfccs, cfg.delta_window),
                                   rtol=0, atol=1e-12)
        np.testing.assert_allclose(matrix[:, 39:52],
                                   delta(gtccs, cfg.delta_window),
                                   rtol=0, atol=1e-12)


class TestAggregate:
    def test_mean_then_population_variance(self):
        rng = np.random.default_rng(9)
        matrix = rng.normal(size=(5, 66))
        vec = aggregate_frame_features(matrix)
        assert vec.shape == (132,)
        np.testing.assert_allclose(vec[:66], matrix.mean(axis=0), rtol=1e-15)
        np.testing.assert_allclose(vec[66:], matrix.var(axis=0, ddof=0),
                                   rtol=1e-12)

    def test_zero_frames_raise(self):
        with pytest.raises(ValueError):
            aggregate_frame_features(np.zeros((0, 66)))


class TestExtractUtterance:
    def test_vector_shape_and_frame_count(self):
        t = np.arange(16000) / 16000.0
        buf = AudioBuffer(0.4 * np.sin(2 * np.pi * 300 * t), 16000)
        feats = extract_utterance(buf)
        assert isinstance(feats, UtteranceFeatures)
        assert feats.vector.shape == (UTTERANCE_FEATURE_SIZE,)
        assert feats.num_frames == 1 + (16000 - 400) // 160

    def test_rejects_other_rates(self):
        buf = AudioBuffer(np.zeros(8000), 8000)
        with pytest.raises(ValueError, match="16000"):
            extract_utterance(buf)

    def test_rejects_too_short(self):
        buf = AudioBuffer(np.zeros(300), 16000)
        with pytest.raises(ValueError, match="short"):
            extract_utterance(buf)

    def test_source_modes_agree_on_pure_tone(self):
        # one sinusoid is already a single oscillatory mode with zero
        # trend, so every source mode conditions it to the same samples
        t = np.arange(8000) / 16000.0
        x = 0.5 * np.sin(2 * np.pi * 250 * t)
        vecs = []
        for mode in ("raw", "emd_detrend", "imf_sum:1"):
            cfg = FeatureConfig(source_mode=mode)
            vecs.append(extract_utterance(AudioBuffer(x, 16000), cfg).vector)
        np.testing.assert_array_equal(vecs[0], vecs[1])
        np.testing.assert_array_equal(vecs[0], vecs[2])


class TestSourceModeParsing:
    def test_accepted_forms(self):
        assert parse_source_mode("raw") == ("raw", None)
        assert parse_source_mode("EMD-detrend") == ("emd_detrend", None)
        assert parse_source_mode("imf_sum:3") == ("imf_sum", 3)
        assert parse_source_mode(" imf-sum:2 ") == ("imf_sum", 2)

    def test_rejects_bad_modes(self):
        with pytest.raises(ValueError):
            parse_source_mode("banana")
        with pytest.raises(ValueError):
            parse_source_mode("imf_sum:x")
        with pytest.raises(ValueError):
            parse_source_mode("imf_sum:0")


class TestFeatureConfigValidation:
    def test_rejects_bad_settings(self):
        with pytest.raises(ValueError):
            FeatureConfig(n_mfcc=30, n_mel_filters=26)
        with pytest.raises(ValueError):
            FeatureConfig(delta_window=4)
        with pytest.raises(ValueError):
            FeatureConfig(rolloff_fraction=0.0)
        with pytest.raises(ValueError):
            FeatureConfig(pitch_min=500.0, pitch_max=400.0)
        with pytest.raises(ValueError):
            FeatureConfig(source_mode="nonsense")
