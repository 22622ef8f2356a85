"""The whole engine end to end, fully offline.

Builds a small world of recorded traces (a fixture backend), runs the three
modes (no retrieval, full retrieval, dynamic retrieval) over eight labeled
samples in one invocation, and prints the per-mode reports.  The plain pass
is shared across modes, so no sample ever costs more than two generation
calls.
"""

import math

from exdr import FixtureBackend, Mode, RunConfig, run
from exdr.core import BinaryLabel, CorpusEntry, FineGrainedLabel, Sample
from exdr.index import build_index
from exdr.retrieval import ContrastivePair, assemble_augmented_prompt, assemble_plain_prompt
from exdr.trigger import ThresholdTriple

F = FineGrainedLabel
REAL_WORDS = ["genuine", "authentic", "true", "legitimate", "realistic", "legit", "fact", "accurate"]
FAKE_WORDS = ["false", "fabric", "fict", "fraud", "unrelated", "fictional", "inconsistent", "missing"]


def basis(k, dim=4):
    v = [0.0] * dim
    v[k] = 1.0
    return v


def stream(verdict, expl_text, confident):
    other = "fake" if verdict == "real" else "real"
    if confident:
        top = [(verdict, math.log(0.97))]
        top += [(w, math.log(4e-4) - 0.01 * i) for i, w in enumerate(
            REAL_WORDS if verdict == "real" else FAKE_WORDS)]
        top += [(other, math.log(1e-4))]
        expl_prob = 0.9
    else:
        top = [(other, math.log(0.55)), (verdict, math.log(0.45))]
        top += [(w, math.log(1e-3) - 0.01 * i) for i, w in enumerate(
            FAKE_WORDS if verdict == "real" else REAL_WORDS)]
        expl_prob = 0.3
    words = [("The", -0.01), (" pair", -0.01), (" is", -0.01),
             (f" {verdict}", top[0][1]), (" because", -0.01)]
    words += [(f" {w}", math.log(expl_prob)) for w in expl_text.split()]
    text = "".join(w for w, _ in words)
    tokens = []
    for i, (w, lp) in enumerate(words):
        obj = {"t": w, "logprob": lp}
        if i == 3:
            obj["top"] = [{"t": t, "logprob": p} for t, p in top]
        tokens.append(obj)
    return text, tokens


fb = FixtureBackend()
cfg = RunConfig(
    modes=(Mode.NO, Mode.FULL, Mode.DYNAMIC),
    thresholds=ThresholdTriple(0.5, 0.5, 0.5),
)

# Corpus: one real entry, three deception entries, each on its own axis.
corpus = [
    CorpusEntry("ok", "img://ok", "corpus ok", "image and text agree", F.REAL_NEWS),
    CorpusEntry("fab", "img://fab", "corpus fab", "the image was doctored", F.IMAGE_FABRICATION),
    CorpusEntry("ent", "img://ent", "corpus ent", "wrong person in the photo", F.ENTITY_INCONSISTENCY),
    CorpusEntry("old", "img://old", "corpus old", "photo from years earlier", F.TIME_OR_SPACE_INCONSISTENCY),
]
for k, entry in enumerate(corpus):
    vec = basis(k)
    fb.set_image_vector(entry.image, vec)
    fb.set_text_vector(entry.text, vec)
    fb.set_text_vector(entry.explanation, vec)
    fb.set_entities(entry.explanation, [entry.id.title()])
    fb.set_text_vector(entry.id.title(), vec)

index, explanations = build_index(corpus, fb)
corpus_by_id = {e.id: e for e in corpus}

# Eight samples: the two shaky ones aim at the "fab" corpus axis.
# (gold, plain verdict, confident, augmented verdict)
table = {
    "s1": ("fake", "real", False, "fake"),   # wrong, shaky -> retrieval fixes it
    "s2": ("real", "fake", False, "real"),   # wrong, shaky -> retrieval fixes it
    "s3": ("real", "real", True, "real"),
    "s4": ("fake", "fake", True, "fake"),
    "s5": ("real", "real", True, "fake"),    # full retrieval would break this one
    "s6": ("fake", "fake", True, "fake"),
    "s7": ("real", "real", True, "real"),
    "s8": ("fake", "real", True, "real"),    # wrong but confident; never triggers
}

samples = []
for sid, (gold, plain, confident, aug) in table.items():
    sample = Sample(sid, f"img://{sid}", f"claim {sid}",
                    gold_binary=BinaryLabel.parse(gold))
    samples.append(sample)
    vec = basis(1)  # every sample's query vectors point at "fab"
    fb.set_image_vector(sample.image, vec)
    fb.set_text_vector(sample.text, vec)

    expl_text = f"evidence for {sid}"
    text, tokens = stream(plain, expl_text, confident)
    fb.set_generation(assemble_plain_prompt(sample, cfg.prompts, cfg.k_tok), text, tokens)
    fb.set_text_vector(expl_text, vec)
    fb.set_entities(expl_text, ["Fab"])

    # Hand-known retrieval outcome: positive "fab" (dot 1.0); negative is the
    # first record of opposite binary ("ok" when the plain verdict is fake,
    # otherwise the first other fake entry, "ent").
    neg = "ok" if plain == "fake" else "ent"
    pair = ContrastivePair(positive="fab", negative=neg, pos_score=1.0, neg_score=0.0)
    aug_req = assemble_augmented_prompt(sample, pair, corpus_by_id, cfg.prompts,
                                        k_tok=cfg.k_tok)
    aug_text, aug_tokens = stream(aug, f"augmented for {sid}", True)
    fb.set_generation(aug_req, aug_text, aug_tokens)

result = run(samples, fb, cfg, corpus=corpus, index=index, explanations=explanations)

for mode in ("no", "full", "dynamic"):
    report = result.summary["modes"][mode]
    ri = report["ri"] if isinstance(report["ri"], str) else f"{report['ri']:.3f}"
    re_val = "-" if report["re"] is None else f"{report['re']['value']:.3f} ({report['re']['annotation']})"
    print(f"{mode:>8}: acc={report['acc']:.3f} f1={report['f1_macro']:.3f} "
          f"ri={ri} re={re_val}")

print()
triggered = [o.sample_id for o in result.outcomes[Mode.DYNAMIC] if o.triggered]
print("dynamic mode triggered:", ", ".join(triggered))
print("generation calls:", sum(1 for ep, _ in fb.calls if ep == "generate"),
      f"for {len(samples)} samples across three modes (plain pass shared)")
