"""Batch exporter producing attention bundles and token-budget score tables
in the formats consumed by the semcom toolkit."""

from .backend import BackendError, ProceduralBackend, RawGrid, diffusion_backend
from .corpus import CAPTIONS
from .export import (ExportError, ExportJob, content_tokens, export_bundle,
                     export_score_table, image_id_for, run_job, score_rows)
from .linguistics import LinguisticsError, Token, annotate, spacy_annotator, tag, tokenize

__version__ = "0.1.0"
