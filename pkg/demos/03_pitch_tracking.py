"""Pitch tracking on a signal with a known frequency jump.

Estimates pitch on one second of 220 Hz followed by one second of 330 Hz,
post-processes the track into the three downstream channels, and scores the
raw estimates against the known ground truth with MAE and the gross error
rate.
"""

import numpy as np

from speechfeatures import (Audio, PitchEval, PostPitchOptions, estimate_pitch,
                            ger, mae, nccf_to_pov, postprocess_pitch)

rate = 16000
t = np.arange(rate) / rate
audio = Audio(np.concatenate([0.5 * np.sin(2 * np.pi * 220 * t),
                              0.5 * np.sin(2 * np.pi * 330 * t)]), rate)

raw = estimate_pitch(audio)
nccf, f0 = raw.data[:, 0], raw.data[:, 1]
print(f"{raw.nframes} frames tracked")
print(f"first-half median f0: {np.median(f0[:raw.nframes // 2]):7.2f} Hz "
      f"(true 220)")
print(f"second-half median f0: {np.median(f0[raw.nframes // 2:]):6.2f} Hz "
      f"(true 330)")
print(f"voicing evidence: median NCCF {np.median(nccf):.3f}, "
      f"median probability of voicing {np.median(nccf_to_pov(nccf)):.4f}")

# score against the construction: 220 Hz then 330 Hz at the frame centers
truth = np.where(raw.times[:, 0] < 1.0, 220.0, 330.0)
evaluation = PitchEval(truth, f0)
print(f"MAE {mae(evaluation):.2f} Hz, GER {ger(evaluation):.1f} % "
      f"(errors above 5% count)")

# the post-processor emits what downstream models consume:
# warped probability of voicing, normalized log pitch, delta log pitch
post = postprocess_pitch(raw, PostPitchOptions(), seed=0)
print(f"post-processed channels: {post.data.shape}")
print(f"normalized log pitch straddles zero: "
      f"min {post.data[:, 1].min():.2f}, max {post.data[:, 1].max():.2f}")
print(f"delta log pitch spikes at the jump: "
      f"argmax frame {int(np.argmax(post.data[:, 2]))} of {post.nframes} "
      f"(jump at frame {raw.nframes // 2})")
