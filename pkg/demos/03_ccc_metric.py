#!/usr/bin/env python3
# The concordance correlation coefficient and why evaluation concatenates
# tracks instead of averaging per-track scores.

import numpy as np

from framedrop import ccc, evaluate_concat, overlap_rate

print("CCC rewards correlation AND agreement in mean/scale:")
x = np.linspace(-1, 1, 200)
print(f"  ccc(x, x)        = {ccc(x, x):.4f}")
print(f"  ccc(x, -x)       = {ccc(x, -x):.4f}")
for shift in (0.1, 0.5, 1.0):
    print(f"  ccc(x, x + {shift:<4}) = {ccc(x, x + shift):.4f}   (Pearson would stay 1)")

print("\nhand-checkable case: ccc([1,2,3,4], [2,3,4,5]) =", ccc([1, 2, 3, 4], [2, 3, 4, 5]))

print("\nEvaluation protocol: concatenate all tracks, then score once.")
rng = np.random.RandomState(3)
track_a = rng.uniform(-0.3, 0.1, size=(80, 2))
track_b = rng.uniform(0.2, 0.7, size=(120, 2))

perfect = evaluate_concat([(track_a, track_a.copy()), (track_b, track_b.copy())])
print(f"  perfect per-track predictions -> concat ccc "
      f"({perfect.arousal:.4f}, {perfect.valence:.4f})")

offset = evaluate_concat([(track_a, track_a + 0.2), (track_b, track_b - 0.2)])
print(f"  per-track constant offsets    -> concat ccc "
      f"({offset.arousal:.4f}, {offset.valence:.4f})")
print("  (a per-track average of CCCs would hide that global disagreement)")

print("\nConv-block overlap rates for the kernel/pool pairs used downstream:")
for k, p in [(27, 40), (14, 20), (3, 4)]:
    print(f"  kernel {k:>2}, pool {p:>2} -> R = {overlap_rate(k, p):.4f}")
