"""Dynamic retrieval-augmented verification of image-text claims.

The engine decides per sample whether to retrieve (three confidence scores
against tuned thresholds), searches an entity-enriched multimodal index for
contrastive positive/negative evidence, re-predicts with the evidence in
context, and scores the whole process with retrieval-specific metrics.
"""

from .backends import (
    Backend,
    EntitySpan,
    FixtureBackend,
    GenerationRequest,
    HttpBackend,
    Turn,
    make_backend,
)
from .confidence import (
    ConfidenceTriple,
    SENTINEL_TRIPLE,
    Support,
    SupportLexicons,
    TokenSupportClassifier,
    confidence_of,
    label_uncertainty,
    sentence_confidence,
    token_support,
)
from .core import (
    BinaryLabel,
    CorpusEntry,
    FineGrainedLabel,
    ModelResponse,
    Sample,
    TokenInfo,
    binary_of,
    load_corpus,
    load_dataset,
    parse_response,
    serialize_response,
)
from .index import (
    ExplanationRecord,
    IndexRecord,
    build_index,
    entity_string,
    fuse_features,
    load_index,
    query_topk,
    save_index,
)
from .metrics import (
    F1Mode,
    ReAnnotation,
    RunCounts,
    accuracy,
    build_report,
    f1,
    retrieval_efficiency,
    retrieval_identification,
)
from .pipeline import Mode, RunConfig, RunResult, SampleOutcome, run, tune
from .prompts import DEFAULT_PROMPTS, PromptSet
from .retrieval import (
    ContrastivePair,
    InferredLabel,
    assemble_augmented_prompt,
    assemble_plain_prompt,
    infer_fine_label,
    retrieve_contrastive,
)
from .trigger import (
    SearchConfig,
    ThresholdTriple,
    ValidationCache,
    hybrid_search,
    score,
    should_trigger,
)

__version__ = "0.1.0"
