"""The four spectro-temporal feature types and how they compose.

Builds a vowel-like signal (harmonics under formant resonances), runs the
spectrogram, mel filterbank, MFCC and PLP processors over it, and shows the
shared time axis that makes their outputs concatenable.
"""

import numpy as np

from speechfeatures import (Audio, FilterbankOptions, MfccOptions, PlpOptions,
                            concatenate, filterbank, mfcc, plp, spectrogram)


def vowel(f0, formants, duration=1.0, rate=16000, seed=0):
    rng = np.random.default_rng(seed)
    t = np.arange(int(duration * rate)) / rate
    signal = np.zeros_like(t)
    k = 1
    while k * f0 < 0.45 * rate:
        gain = sum(1.0 / (1.0 + ((k * f0 - f) / 120.0) ** 2) for f in formants)
        signal += gain * np.sin(2 * np.pi * k * f0 * t + rng.uniform(0, 2 * np.pi))
        k += 1
    return Audio(0.3 * signal / np.abs(signal).max(), rate)


audio = vowel(120, [730, 1090, 2440])  # an /a/-ish spectrum
print(f"input: {audio}")

spec = spectrogram(audio)
print(f"spectrogram: {spec.data.shape}  (log energy + log power bins)")

fbank = filterbank(audio)
print(f"filterbank:  {fbank.data.shape}  (23 log mel energies)")

ceps = mfcc(audio)
print(f"mfcc:        {ceps.data.shape}  (13 cepstra, liftered)")

lpc = plp(audio, PlpOptions(rasta=True))
print(f"rasta-plp:   {lpc.data.shape}  (13 cepstra from an all-pole fit)")

# identical frame options give identical times, so features concatenate
assert np.array_equal(ceps.times, fbank.times)
combined = concatenate(ceps, fbank)
print(f"mfcc + filterbank over the channel axis: {combined.data.shape}")

# the hottest mel bin should sit on the first formant region
hottest = np.argmax(fbank.data.mean(axis=0))
print(f"hottest mel bin on average: {hottest}")

# options are plain frozen dataclasses; derived variants are cheap
wide = mfcc(audio, MfccOptions(num_ceps=20))
print(f"mfcc with num_ceps=20: {wide.data.shape}")

linear = filterbank(audio, FilterbankOptions(use_log_fbank=False))
print(f"linear filterbank positive everywhere: {bool((linear.data >= 0).all())}")
