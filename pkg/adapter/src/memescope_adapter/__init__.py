"""memescope-adapter: corpus encoding and entity extraction for the engine."""

from .encode import CorpusManifest, EncodeReport, encode_corpus
from .encoders import HashEncoder, resolve_encoder
from .entities import extract_entities, gazetteer, recognize, write_entity_lists

__version__ = "0.1.0"
