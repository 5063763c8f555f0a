"""Directory-level driver: a worker pool over PDFs, per-file exports and a JSONL journal."""

from __future__ import annotations

import json
import logging
import os
import threading
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .export import tables_to_json, to_csv, to_sql_dump
from .grammar import GrammarRegistry, load_registry
from .pipeline import DocumentResult, DocumentSkipped, PipelineConfig, process_document

logger = logging.getLogger(__name__)

FORMATS = ("csv", "json", "sql")
OUTCOMES = ("Processed", "Skipped", "Failed")

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_ALL_FAILED = 2


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class BatchConfig:
    input_dir: Path
    output_dir: Path
    workers: int = 1
    dpi: int = 300
    grammar_dir: Path | None = None
    formats: tuple[str, ...] = FORMATS
    col_pitch: float = 6.0
    row_pitch: float = 12.0
    ink_threshold: int = 100
    journal: Path | None = None

    def validate(self) -> None:
        if not Path(self.input_dir).is_dir():
            raise ConfigError(f"input directory does not exist: {self.input_dir}")
        if self.workers < 1:
            raise ConfigError("workers must be at least 1")
        unknown = set(self.formats) - set(FORMATS)
        if unknown or not self.formats:
            raise ConfigError(f"formats must be a non-empty subset of {FORMATS}, got {list(self.formats)}")
        if self.grammar_dir is not None and not Path(self.grammar_dir).is_dir():
            raise ConfigError(f"grammar directory does not exist: {self.grammar_dir}")
        try:
            self.pipeline_config()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def pipeline_config(self, registry: GrammarRegistry | None = None) -> PipelineConfig:
        return PipelineConfig(self.dpi, self.col_pitch, self.row_pitch, self.ink_threshold, registry)

    @property
    def journal_path(self) -> Path:
        return Path(self.journal) if self.journal else Path(self.output_dir) / "journal.jsonl"


@dataclass
class JobReport:
    file: str
    outcome: str  # Processed | Skipped | Failed
    wall_time: float
    pages: int = 0
    forms: list[str] = field(default_factory=list)
    reason: str | None = None
    error: str | None = None

    def to_json(self) -> str:
        data = {k: v for k, v in asdict(self).items() if v is not None}
        return json.dumps(data, sort_keys=True)


@dataclass
class RunSummary:
    processed: int = 0
    skipped: int = 0
    failed: int = 0
    pages: int = 0
    workers: int = 1
    elapsed: float = 0.0
    reports: list[JobReport] = field(default_factory=list)

    @property
    def total(self) -> int:
        return self.processed + self.skipped + self.failed

    @property
    def docs_per_second(self) -> float:
        return self.total / self.elapsed if self.elapsed > 0 else 0.0

    @property
    def exit_code(self) -> int:
        return EXIT_ALL_FAILED if self.total and self.failed == self.total else EXIT_OK

    def add(self, report: JobReport) -> None:
        self.reports.append(report)
        self.pages += report.pages
        if report.outcome == "Processed":
            self.processed += 1
        elif report.outcome == "Skipped":
            self.skipped += 1
        else:
            self.failed += 1

    def describe(self) -> str:
        return (
            f"processed={self.processed} skipped={self.skipped} failed={self.failed} "
            f"pages={self.pages} workers={self.workers} "
            f"elapsed={self.elapsed:.2f}s docs/s={self.docs_per_second:.2f}"
        )


def find_pdfs(input_dir) -> list[Path]:
    root = Path(input_dir)
    return sorted(p for p in root.rglob("*") if p.is_file() and p.suffix.lower() == ".pdf")


def write_outputs(result: DocumentResult, out_dir: Path, formats) -> list[Path]:
    """Write the per-document artifacts; content depends only on the document and config."""
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = Path(result.source).stem
    tables = result.table_list()
    written = []
    if "csv" in formats:
        for schema, rows in tables:
            path = out_dir / f"{schema.table_name}.csv"
            path.write_bytes(to_csv(rows, schema))
            written.append(path)
    if "json" in formats:
        path = out_dir / f"{stem}.json"
        path.write_bytes(tables_to_json(tables, {"document": stem}))
        written.append(path)
    if "sql" in formats:
        path = out_dir / f"{stem}.sql"
        path.write_bytes(to_sql_dump(tables))
        written.append(path)
    return written


def output_dir_for(pdf: Path, config: BatchConfig) -> Path:
    rel = pdf.relative_to(Path(config.input_dir))
    return Path(config.output_dir) / rel.parent / rel.stem


def process_one(pdf: Path, config: BatchConfig, registry: GrammarRegistry | None = None) -> JobReport:
    """Process one file; every exception is caught and turned into a Failed report."""
    start = time.perf_counter()
    rel = str(pdf.relative_to(Path(config.input_dir)))
    try:
        if registry is None and config.grammar_dir is not None:
            registry = load_registry(config.grammar_dir)
        result = process_document(pdf.read_bytes(), pdf.name, config.pipeline_config(registry))
        write_outputs(result, output_dir_for(pdf, config), config.formats)
        forms = sorted({p.form_id for p in result.pages if p.status == "Parsed" and p.form_id})
        report = JobReport(rel, "Processed", 0.0, len(result.pages), forms)
    except DocumentSkipped as exc:
        report = JobReport(rel, "Skipped", 0.0, reason=exc.reason)
    except Exception as exc:  # crash isolation: one bad file never aborts the run
        logger.debug("failed on %s", rel, exc_info=True)
        report = JobReport(rel, "Failed", 0.0, error=f"{type(exc).__name__}: {exc}")
    report.wall_time = time.perf_counter() - start
    return report


# worker processes load the grammar directory once
_worker_registry: GrammarRegistry | None = None


def _init_worker(grammar_dir) -> None:
    global _worker_registry
    _worker_registry = load_registry(grammar_dir) if grammar_dir is not None else None


def _worker_job(pdf: Path, config: BatchConfig) -> JobReport:
    return process_one(pdf, config, _worker_registry)


class _Journal:
    """Append-only JSONL sink; appends are serialized by a lock."""

    def __init__(self, path: Path):
        path.parent.mkdir(parents=True, exist_ok=True)
        self._fh = path.open("w", encoding="utf-8")
        self._lock = threading.Lock()

    def append(self, report: JobReport) -> None:
        with self._lock:
            self._fh.write(report.to_json() + "\n")
            self._fh.flush()

    def close(self) -> None:
        self._fh.close()


def run(config: BatchConfig) -> RunSummary:
    """Process every PDF under ``config.input_dir``; raises ConfigError for an invalid config."""
    config.validate()
    registry = load_registry(config.grammar_dir) if config.grammar_dir is not None else None
    pdfs = find_pdfs(config.input_dir)
    Path(config.output_dir).mkdir(parents=True, exist_ok=True)
    summary = RunSummary(workers=config.workers)
    journal = _Journal(config.journal_path)
    start = time.perf_counter()
    try:
        if config.workers == 1 or len(pdfs) <= 1:
            for pdf in pdfs:
                report = process_one(pdf, config, registry)
                journal.append(report)
                summary.add(report)
        else:
            with ProcessPoolExecutor(
                max_workers=config.workers, initializer=_init_worker, initargs=(config.grammar_dir,)
            ) as pool:
                futures = [pool.submit(_worker_job, pdf, config) for pdf in pdfs]
                for pdf, future in zip(pdfs, futures):
                    try:
                        report = future.result()
                    except Exception as exc:  # worker process died
                        rel = str(pdf.relative_to(Path(config.input_dir)))
                        report = JobReport(rel, "Failed", 0.0, error=f"{type(exc).__name__}: {exc}")
                    journal.append(report)
                    summary.add(report)
    finally:
        journal.close()
    summary.elapsed = time.perf_counter() - start
    return summary


def available_cpus() -> int:
    try:
        return len(os.sched_getaffinity(0))
    except AttributeError:
        return os.cpu_count() or 1
