"""Three confidence scores from one model response.

A detection response carries three usable uncertainty signals: the log-odds
gap between the verdict words, the agreement of the top candidate tokens
with the verdict, and the geometric-mean probability of the explanation.
This script builds two synthetic responses (one shaky, one confident) and
prints all three scores for each.
"""

import math

from exdr import TokenSupportClassifier, confidence_of, parse_response
from exdr.core import TokenInfo


def build_response(verdict, verdict_prob, other_prob, explanation_probs, fillers):
    words = ["The", " pair", " is", f" {verdict}", " because", " the", " cues", " say", " so"]
    other = "fake" if verdict == "real" else "real"
    top = [{"t": verdict, "logprob": math.log(verdict_prob)},
           {"t": other, "logprob": math.log(other_prob)}]
    top += [{"t": w, "logprob": math.log(0.002) - 0.01 * i} for i, w in enumerate(fillers)]
    tokens = []
    for i, w in enumerate(words):
        obj = {"t": w, "logprob": -0.05}
        if i == 3:
            obj["top"] = top
        if i >= 5:
            obj["logprob"] = math.log(explanation_probs)
        tokens.append(TokenInfo.from_wire(obj))
    return parse_response("".join(words), tokens)


# The classifier's semantic stage needs a sentence-embedding backend, but all
# candidate tokens below are lexicon words, so stage 1 decides everything.
classifier = TokenSupportClassifier(backend=None)

shaky = build_response(
    "real", verdict_prob=0.48, other_prob=0.52, explanation_probs=0.35,
    fillers=["false", "fabric", "fraud", "inconsistent", "fictional", "missing", "unrelated", "fict"],
)
confident = build_response(
    "real", verdict_prob=0.97, other_prob=0.0004, explanation_probs=0.92,
    fillers=["genuine", "authentic", "true", "accurate", "legit", "fact", "consistent", "plausible"],
)

for name, resp in [("shaky", shaky), ("confident", confident)]:
    triple = confidence_of(resp, classifier, k_tok=10)
    print(f"{name:>9}: verdict={resp.predicted.value:<4} "
          f"label={triple.tau_label:.4f} token={triple.tau_tok:.2f} "
          f"sentence={triple.tau_sent:.4f}")

print()
print("Low scores on all three axes are what trips the retrieval trigger;")
print("the confident response clears every axis by a wide margin.")
