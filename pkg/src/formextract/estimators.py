"""scikit-learn style wrappers around the pipeline stages.

``FormParser.fit`` is the grammar refinement loop: it evaluates every
grammar on the pages it is given and widens literal labels where a single
alternation makes failing pages parse. ``CheckboxClassifier`` has nothing
to learn; the pixel threshold is fixed and only scaled with resolution.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .checkbox import (
    ASPECT_RANGE,
    SIDE_RANGE,
    Component,
    checked_threshold,
    nominal_side,
)
from .grammar import (
    GrammarRegistry,
    ParseFailure,
    default_registry,
    identify_form,
    load_registry,
    refine_registry,
)
from .layout import DEFAULT_COL_PITCH, DEFAULT_ROW_PITCH
from .pdf import PageSkipped, load_document
from .pipeline import PipelineConfig, page_corpora, page_lines, parse_page

NOT_A_CHECKBOX = -1
UNCHECKED = 0
CHECKED = 1


class LayoutTextExtractor(TransformerMixin, BaseEstimator):
    """PDF bytes -> per-page layout lines. Stateless."""

    def __init__(self, col_pitch: float = DEFAULT_COL_PITCH, row_pitch: float = DEFAULT_ROW_PITCH):
        self.col_pitch = col_pitch
        self.row_pitch = row_pitch

    def fit(self, X, y=None):
        return self

    def transform(self, X) -> list[list[list[str]]]:
        config = PipelineConfig(col_pitch=self.col_pitch, row_pitch=self.row_pitch)
        out = []
        for data in X:
            doc = load_document(data)
            pages = []
            for page in doc.pages:
                try:
                    pages.append(page_lines(page, None, config))
                except PageSkipped:
                    pages.append([])
            out.append(pages)
        return out


class FormParser(BaseEstimator):
    """Page lines -> parse results, with ``fit`` running one refinement pass.

    ``X`` is a sequence of pages, each a list of layout lines.
    """

    def __init__(self, grammar_dir=None, refine: bool = True):
        self.grammar_dir = grammar_dir
        self.refine = refine

    def _base_registry(self) -> GrammarRegistry:
        return load_registry(self.grammar_dir) if self.grammar_dir is not None else default_registry()

    def fit(self, X, y=None):
        base = self._base_registry()
        pages = [(identify_form(lines, base), lines) for lines in X]
        corpora = page_corpora(pages, base)
        if self.refine:
            self.registry_, self.reports_ = refine_registry(base, corpora)
        else:
            self.registry_, self.reports_ = base, {}
        self.n_pages_seen_ = len(pages)
        return self

    def predict(self, X) -> list:
        """Per page: ``(form_id, result)``; form_id is None for unknown pages."""
        check_is_fitted(self, "registry_")
        out = []
        for lines in X:
            form_id = identify_form(lines, self.registry_)
            if form_id is None:
                out.append((None, None))
                continue
            head, _ = parse_page(self.registry_.get(form_id), lines, self.registry_)
            out.append((form_id, head))
        return out

    def score(self, X, y=None) -> float:
        """Fraction of identified pages that parse completely."""
        predicted = [r for form_id, r in self.predict(X) if form_id is not None]
        if not predicted:
            return 0.0
        return sum(not isinstance(r, ParseFailure) for r in predicted) / len(predicted)


def component_features(components: list[Component]) -> np.ndarray:
    """Rows of ``(width, height, pixel_count)``, the only inputs the verdict uses."""
    return np.array([[c.width, c.height, c.pixel_count] for c in components], dtype=float).reshape(-1, 3)


class CheckboxClassifier(ClassifierMixin, BaseEstimator):
    """Component features -> 1 checked, 0 unchecked, -1 not checkbox-shaped."""

    def __init__(self, dpi: int = 300):
        self.dpi = dpi

    def fit(self, X, y=None):
        check_array(X, ensure_min_samples=0)
        self.classes_ = np.array([NOT_A_CHECKBOX, UNCHECKED, CHECKED])
        self.threshold_ = checked_threshold(self.dpi)
        self.n_features_in_ = 3
        return self

    def predict(self, X) -> np.ndarray:
        check_is_fitted(self, "threshold_")
        X = check_array(X, ensure_min_samples=0)
        if X.shape[1] != 3:
            raise ValueError(f"expected 3 features (width, height, pixel_count), got {X.shape[1]}")
        w, h, count = X[:, 0], X[:, 1], X[:, 2]
        side = nominal_side(self.dpi)
        lo, hi = SIDE_RANGE[0] * side, SIDE_RANGE[1] * side
        with np.errstate(divide="ignore", invalid="ignore"):
            aspect = np.where(h > 0, w / h, 0.0)
        shaped = (
            (w >= lo) & (w <= hi) & (h >= lo) & (h <= hi) & (aspect >= ASPECT_RANGE[0]) & (aspect <= ASPECT_RANGE[1])
        )
        verdict = np.where(count >= self.threshold_, CHECKED, UNCHECKED)
        return np.where(shaped, verdict, NOT_A_CHECKBOX)
