import numpy as np
import pytest

from speechfeatures import Audio, FrameOptions, extract_frames, num_frames, window_function
from speechfeatures.framing import frame_times

from conftest import make_tone


def enumerate_frames_snip(num_samples, size, shift):
    """Oracle: count frame start positions 0, shift, ... fully inside."""
    count = 0
    start = 0
    while start + size <= num_samples:
        count += 1
        start += shift
    return count


def enumerate_frames_centered(num_samples, shift):
    """Oracle: count frames whose center shift*i + shift/2 is in the signal."""
    count = 0
    i = 0
    while i * shift + shift / 2 <= num_samples:
        count += 1
        i += 1
    return count


class TestNumFrames:
    def test_one_second_snip(self):
        assert num_frames(16000, FrameOptions()) == 98

    def test_too_short(self):
        assert num_frames(399, FrameOptions()) == 0

    def test_one_second_no_snip(self):
        assert num_frames(16000, FrameOptions(snip_edges=False)) == 100

    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            num_frames(-1, FrameOptions())

    @pytest.mark.parametrize("snip", [True, False])
    def test_exhaustive_small_instances(self, snip):
        opts = FrameOptions(snip_edges=snip)
        size, shift = opts.window_size, opts.window_shift
        for n in range(0, 2001):
            expected = (enumerate_frames_snip(n, size, shift) if snip
                        else enumerate_frames_centered(n, shift))
            assert num_frames(n, opts) == expected, f"n={n}"


class TestWindowFunction:
    def test_povey_endpoints(self):
        win = window_function("povey", 401)
        assert win[0] == 0.0
        assert win[200] == pytest.approx(1.0, abs=1e-12)

    def test_rectangular(self):
        assert np.array_equal(window_function("rectangular", 64), np.ones(64))

    def test_hanning(self):
        win = window_function("hanning", 101)
        assert win[0] == 0.0
        assert win[50] == pytest.approx(1.0)

    def test_hamming(self):
        win = window_function("hamming", 101)
        assert win[0] == pytest.approx(0.08)
        assert win[50] == pytest.approx(1.0)

    def test_blackman(self):
        win = window_function("blackman", 101)
        assert win[50] == pytest.approx(1.0)
        assert abs(win[0]) < 1e-12

    def test_povey_is_hanning_pow(self):
        hann = window_function("hanning", 101)
        povey = window_function("povey", 101)
        assert np.allclose(povey, hann ** 0.85)

    def test_too_short(self):
        with pytest.raises(ValueError):
            window_function("povey", 1)

    def test_unknown(self):
        with pytest.raises(ValueError):
            FrameOptions(window_type="kaiser")


class TestExtractFrames:
    def test_constant_signal_zeroed_by_dc_removal(self):
        audio = Audio(np.full(16000, 0.25), 16000)
        opts = FrameOptions(dither=0.0)
        frames, _, _ = extract_frames(audio, opts)
        assert np.allclose(frames, 0.0)

    def test_identity_path(self):
        audio = make_tone(100)
        opts = FrameOptions(dither=0.0, preemph_coeff=0.0,
                            remove_dc_offset=False, window_type="rectangular")
        frames, _, _ = extract_frames(audio, opts)
        for i in (0, 7, 97):
            start = i * opts.window_shift
            expected = audio.samples[start:start + opts.window_size] * 32768.0
            assert np.array_equal(frames[i], expected)

    def test_same_seed_bit_identical(self):
        audio = make_tone(220)
        opts = FrameOptions()
        a, ea, _ = extract_frames(audio, opts, seed=42)
        b, eb, _ = extract_frames(audio, opts, seed=42)
        assert np.array_equal(a, b)
        assert np.array_equal(ea, eb)

    def test_different_seed_differs(self):
        audio = make_tone(220)
        a, _, _ = extract_frames(audio, FrameOptions(), seed=1)
        b, _, _ = extract_frames(audio, FrameOptions(), seed=2)
        assert not np.array_equal(a, b)

    def test_zero_dither_ignores_seed(self):
        audio = make_tone(220)
        opts = FrameOptions(dither=0.0)
        a, _, _ = extract_frames(audio, opts, seed=1)
        b, _, _ = extract_frames(audio, opts, seed=2)
        assert np.array_equal(a, b)

    def test_energy_scales_quadratically(self):
        samples = make_tone(220).samples
        opts = FrameOptions(dither=0.0)
        _, energy_full, _ = extract_frames(Audio(samples, 16000), opts)
        _, energy_half, _ = extract_frames(Audio(0.5 * samples, 16000), opts)
        assert np.allclose(energy_half, energy_full + 2 * np.log(0.5), atol=1e-9)

    def test_sample_rate_mismatch(self):
        with pytest.raises(ValueError, match="resample"):
            extract_frames(make_tone(220, rate=8000), FrameOptions())

    def test_times_are_frame_centers(self):
        audio = make_tone(220)
        _, _, times = extract_frames(audio, FrameOptions(dither=0.0))
        assert times[0] == pytest.approx(0.0125)
        assert times[1] == pytest.approx(0.0225)
        assert len(times) == 98

    def test_no_snip_covers_whole_signal(self):
        audio = make_tone(220, duration=1.0)
        opts = FrameOptions(dither=0.0, snip_edges=False)
        frames, _, times = extract_frames(audio, opts)
        assert frames.shape == (100, 400)
        assert times[0] == pytest.approx(0.005)

    def test_frame_starts_match_num_frames(self):
        # frame i covers [i*shift, i*shift + size) for every valid length
        opts = FrameOptions(sample_rate=100, frame_shift=0.03, frame_length=0.07,
                            dither=0.0, preemph_coeff=0.0,
                            remove_dc_offset=False, window_type="rectangular")
        size, shift = opts.window_size, opts.window_shift
        rng = np.random.default_rng(0)
        for n in range(size, 300):
            samples = rng.standard_normal(n)
            frames, _, _ = extract_frames(Audio(samples, 100), opts)
            assert frames.shape[0] == num_frames(n, opts)
            for i in range(frames.shape[0]):
                expected = samples[i * shift:i * shift + size] * 32768.0
                assert np.array_equal(frames[i], expected)


class TestFrameOptions:
    def test_shift_must_not_exceed_length(self):
        with pytest.raises(ValueError):
            FrameOptions(frame_shift=0.05, frame_length=0.025)

    def test_negative_dither(self):
        with pytest.raises(ValueError):
            FrameOptions(dither=-1.0)

    def test_window_size(self):
        opts = FrameOptions()
        assert opts.window_size == 400
        assert opts.window_shift == 160
