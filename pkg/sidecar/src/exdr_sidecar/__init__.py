"""HTTP sidecar serving embeddings, NER, and optional generation.

The service implements the verification engine's backend wire protocol
(POST /generate, /embed_text, /embed_image, /embed_sentence, /ner, plus
GET /health) and can record every request/response pair in the engine's
fixture format for offline replay.
"""

from .app import create_app
from .providers import HashedProvider, RealModelProvider, StubGenerator

__version__ = "0.1.0"
