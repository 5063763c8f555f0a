"""Layout-aware extraction of structured records from form-style PDFs."""

from .pipeline import (
    DocumentResult,
    DocumentSkipped,
    PipelineConfig,
    process_document,
    process_file,
)

__version__ = "0.1.0"

__all__ = ["DocumentResult", "DocumentSkipped", "PipelineConfig", "process_document", "process_file", "__version__"]
