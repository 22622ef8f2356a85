"""From a model explanation to a contrastive in-context prompt.

Once retrieval fires, the engine (1) votes a fine-grained deception label
from the nearest corpus explanations, (2) picks a positive example with that
label and a negative example of the opposite binary verdict, and (3) builds
the augmented request: positive example, negative example, then the query.
"""

import numpy as np

from exdr import BinaryLabel, infer_fine_label, retrieve_contrastive
from exdr.backends import generation_payload
from exdr.core import CorpusEntry, FineGrainedLabel, Sample
from exdr.index import ExplanationRecord, IndexRecord
from exdr.retrieval import assemble_augmented_prompt

F = FineGrainedLabel

corpus = {
    "e1": CorpusEntry("e1", "img://e1", "mayor opens museum",
                      "the person shown is not the mayor", F.ENTITY_INCONSISTENCY),
    "e2": CorpusEntry("e2", "img://e2", "senator visits plant",
                      "the figure in the image is misidentified", F.ENTITY_INCONSISTENCY),
    "e3": CorpusEntry("e3", "img://e3", "storm floods village",
                      "image and report match", F.REAL_NEWS),
    "e4": CorpusEntry("e4", "img://e4", "old photo reused",
                      "the picture predates the event", F.TIME_OR_SPACE_INCONSISTENCY),
}

def unit(v):
    v = np.asarray(v, dtype=float)
    return v / np.linalg.norm(v)

expl_vectors = {
    "e1": unit([1.0, 0.1, 0.0]),
    "e2": unit([0.9, 0.3, 0.1]),
    "e3": unit([0.0, 1.0, 0.0]),
    "e4": unit([0.0, 0.1, 1.0]),
}
fused_vectors = expl_vectors  # one space is enough for a demo

expl_index = [ExplanationRecord(cid, expl_vectors[cid], corpus[cid].fine_label)
              for cid in corpus]
fused_index = [IndexRecord(cid, fused_vectors[cid], corpus[cid].fine_label)
               for cid in corpus]

# The model called this sample real, but its explanation reads like an
# entity mix-up; the explanation embedding lands near e1/e2.
query_expl = unit([1.0, 0.2, 0.05])
inferred = infer_fine_label(query_expl, expl_index, k=3)
print("vote histogram:", {lab.value: n for lab, n in inferred.votes.items()})
print("inferred label:", inferred.label.value)

pair = retrieve_contrastive(query_expl, inferred.label, BinaryLabel.REAL, fused_index)
print(f"positive: {pair.positive} (score {pair.pos_score:.3f})   "
      f"negative: {pair.negative} (score {pair.neg_score:.3f})")

sample = Sample("q1", "img://q1", "mayor opens new bridge")
request = assemble_augmented_prompt(sample, pair, corpus)
print()
print("augmented prompt turns:")
for turn in request.turns:
    tag = f"[{turn.role}]"
    image = f" +image({turn.image})" if turn.image else ""
    print(f"  {tag:>12}{image} {turn.text.splitlines()[0][:60]}")

payload = generation_payload(request)
print()
print(f"wire payload: {len(payload['turns'])} turns, "
      f"top_k={payload['top_k']}, logprobs={payload['logprobs']}")
