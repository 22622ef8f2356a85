"""Tuning the retrieval trigger with the two-stage hybrid search.

The search needs only a validation cache: per sample, the three confidence
scores plus whether the plain and the retrieval-augmented predictions were
correct.  Here the cache is synthetic with a planted sweet spot: retrieval
fixes exactly the samples whose scores all sit below (0.5, 0.5, 0.5) and
breaks a handful of very confident ones.
"""

import numpy as np

from exdr import ConfidenceTriple, SearchConfig, ValidationCache, hybrid_search, score
from exdr.trigger import ThresholdTriple

rng = np.random.default_rng(42)
n = 400

taus = rng.uniform(0, 1, size=(n, 3))
in_box = np.all(taus < 0.5, axis=1)          # samples retrieval would fix
harm = np.any(taus > 0.92, axis=1) & ~in_box  # samples retrieval would break

cache = ValidationCache(
    sample_ids=[f"v{i:03d}" for i in range(n)],
    triples=[ConfidenceTriple(*row) for row in taus],
    correct_plain=(~in_box).tolist(),
    correct_aug=(~harm).tolist(),
)

never = score(ThresholdTriple(0, 0, 0), cache)
always = score(ThresholdTriple(2, 2, 2), cache)
best, best_score = hybrid_search(cache, SearchConfig(n_iter=100, rng_seed=7))

print(f"never trigger : {never}/{n} correct")
print(f"always trigger: {always}/{n} correct")
print(f"tuned trigger : {best_score}/{n} correct at "
      f"label<{best.theta_label:.3f} token<{best.theta_tok:.3f} sent<{best.theta_sent:.3f}")
print()
print("The tuned thresholds sit between the planted box corner (0.5) and the")
print("harmful high-confidence shell (0.92), as they should.")
