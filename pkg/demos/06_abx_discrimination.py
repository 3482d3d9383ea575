"""Scoring feature quality with DTW divergences and an ABX test.

Builds repeated tokens of two vowel categories, extracts MFCCs, and checks
that the dynamic-time-warping cosine divergence separates the categories:
within-category distances stay under between-category ones, driving the ABX
error toward zero. Random features score around 50% by construction.
"""

import numpy as np

from speechfeatures import (AbxTriplet, Audio, Features, abx_score,
                            dtw_cosine, mfcc)

rate = 16000
rng = np.random.default_rng(0)


def token(formants, f0, duration, seed):
    local = np.random.default_rng(seed)
    t = np.arange(int(duration * rate)) / rate
    signal = np.zeros_like(t)
    k = 1
    while k * f0 < 0.45 * rate:
        gain = sum(1.0 / (1.0 + ((k * f0 - f) / 120.0) ** 2) for f in formants)
        signal += gain * np.sin(2 * np.pi * k * f0 * t + local.uniform(0, 2 * np.pi))
        k += 1
    return mfcc(Audio(0.3 * signal / np.abs(signal).max(), rate))


# tokens of /a/ and /i/ with varying pitch and duration
a_tokens = [token([730, 1090, 2440], 110 + 10 * i, 0.4 + 0.05 * i, seed=i)
            for i in range(4)]
i_tokens = [token([270, 2290, 3010], 115 + 10 * i, 0.45 + 0.05 * i, seed=10 + i)
            for i in range(4)]

within = dtw_cosine(a_tokens[0], a_tokens[1])
between = dtw_cosine(a_tokens[0], i_tokens[0])
print(f"divergence /a/ vs /a/: {within:.4f}")
print(f"divergence /a/ vs /i/: {between:.4f}")

# every (A, B, X): A and X are /a/ tokens, B an /i/ token
triplets = [AbxTriplet(a, b, x)
            for a in a_tokens for b in i_tokens for x in a_tokens if x is not a]
print(f"ABX error over {len(triplets)} vowel triplets: "
      f"{abx_score(triplets):.1f} % (0 = perfectly discriminable)")

# uninformative representations sit at chance
random_triplets = []
for _ in range(500):
    a, b, x = (Features(rng.standard_normal((12, 6)),
                        np.arange(12, dtype=np.float64)) for _ in range(3))
    random_triplets.append(AbxTriplet(a, b, x))
print(f"ABX error over random features: {abx_score(random_triplets):.1f} % "
      f"(chance is 50%)")
