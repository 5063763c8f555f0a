"""Form grammars: named-capture regular expressions composed line by line.

A grammar is a sequence of per-line patterns. Each line pattern is a full
regular expression for one line of layout text whose named groups are the
form's variable fields. The page-level pattern is the concatenation of the
line patterns with a separator that tolerates blank lines, so a whole page
is parsed with one match; when that match fails the line patterns are
replayed one at a time to find the first line that does not fit.
"""

from __future__ import annotations

import datetime as dt
import difflib
import enum
import logging
import re
from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping

logger = logging.getLogger(__name__)

TITLE_WINDOW = 5
BLANKS = r"(?:[ ]*\n)*"
PAGE_PREFIX = r"\A" + BLANKS
PAGE_SUFFIX = r"\Z"
_GROUP_NAME = re.compile(r"\(\?P<([A-Za-z_]\w*)>")
_PLACEHOLDER = re.compile(r"\{(=[^{}]*|[A-Za-z_]\w*\??)\}")
_NAN_WORDS = frozenset({"nan", "--", "n/a", "na"})


class GrammarError(Exception):
    pass


class PatternCompileError(GrammarError):
    def __init__(self, message: str, fragment: str = ""):
        super().__init__(f"{message}: {fragment!r}" if fragment else message)
        self.fragment = fragment


class DuplicateTokenName(GrammarError):
    def __init__(self, name: str):
        super().__init__(f"token name {name!r} defined more than once")
        self.name = name


class FieldKind(str, enum.Enum):
    CATEGORICAL = "Categorical"
    DATE = "Date"
    TIME = "Time"
    NUMBER = "Number"
    PERSON_NAME = "PersonName"
    FREE_TEXT = "FreeText"
    CHECKBOX_ANCHOR = "CheckboxAnchor"


DEFAULT_PATTERNS = {
    FieldKind.CATEGORICAL: r"\S+",
    FieldKind.DATE: r"\d{4}-\d{2}-\d{2}|\d{1,2}/\d{1,2}/\d{4}",
    FieldKind.TIME: r"\d{1,2}:\d{2}|\d{4}",
    FieldKind.NUMBER: r"[+-]?\d+(?:\.\d+)?",
    FieldKind.PERSON_NAME: r"[A-Z][A-Za-z.'-]*(?: [A-Z][A-Za-z.'-]*)*",
    FieldKind.FREE_TEXT: r"\S(?:.*\S)?",
    FieldKind.CHECKBOX_ANCHOR: "",
}


@dataclass(frozen=True)
class FieldSpec:
    name: str
    kind: FieldKind
    pattern: str = ""
    anchor_hint: tuple[int, int] | None = None
    canon: Mapping[str, str] | None = None
    integer: bool = False

    def __post_init__(self):
        if not re.fullmatch(r"[A-Za-z_]\w*", self.name):
            raise PatternCompileError("invalid field name", self.name)
        kind = FieldKind(self.kind)
        object.__setattr__(self, "kind", kind)
        if kind is FieldKind.CHECKBOX_ANCHOR:
            if self.anchor_hint is None:
                raise GrammarError(f"checkbox anchor {self.name!r} needs an anchor hint")
            return
        if not self.pattern:
            object.__setattr__(self, "pattern", DEFAULT_PATTERNS[kind])
        if _GROUP_NAME.search(self.pattern):
            raise PatternCompileError("field patterns may not define named groups", self.pattern)
        try:
            re.compile(self.pattern)
        except re.error as exc:
            raise PatternCompileError(f"field {self.name!r} pattern does not compile ({exc})", self.pattern) from None


@dataclass(frozen=True)
class LinePattern:
    """One line of a grammar.

    ``regex`` matches the whole line (used with ``fullmatch``); ``block``
    names a repeating table-row line whose groups bind per row.
    """

    regex: str
    source: str = ""
    optional: bool = False
    block: str | None = None
    exact: bool = False

    @property
    def names(self) -> list[str]:
        return _GROUP_NAME.findall(self.regex)


@dataclass(frozen=True)
class Binding:
    raw: str | None
    value: Any = None

    @property
    def missing(self) -> bool:
        return self.raw is None


MISSING = Binding(None, None)


@dataclass
class ParseResult:
    form_id: str
    bindings: dict[str, Any]
    diagnostics: list[str] = field(default_factory=list)

    def value(self, name: str, default=None):
        b = self.bindings.get(name)
        if isinstance(b, Binding):
            return b.value if not b.missing else default
        return default

    def rows(self, block: str) -> list[dict[str, Binding]]:
        b = self.bindings.get(block)
        return list(b.value) if isinstance(b, Binding) and b.value else []

    def __bool__(self) -> bool:
        return True


@dataclass
class ParseFailure:
    form_id: str
    first_unmatched_line: tuple[int, str]
    matched_prefix_lines: int
    reason: str = "NoMatch"  # or "TypedValueError"
    detail: str = ""
    expected: str = ""

    def __bool__(self) -> bool:
        return False


def strip_group_names(regex: str) -> str:
    return _GROUP_NAME.sub("(?:", regex)


def line_item(lp: LinePattern) -> str:
    """The page-level fragment for one line: the line, its newline and any blank lines after it."""
    body = lp.regex if lp.exact else r"[ ]*(?:" + lp.regex + r")[ ]*"
    if lp.block:
        return f"(?P<{lp.block}>(?:{strip_group_names(body)}\\n{BLANKS})*)"
    item = f"{body}\\n{BLANKS}"
    if lp.optional:
        return f"(?:{item})?"
    return item


def compose_pattern(lines: Iterable[LinePattern]) -> str:
    return PAGE_PREFIX + "".join(line_item(lp) for lp in lines) + PAGE_SUFFIX


# -- line templates ------------------------------------------------------


def compile_template(template: str, fields: Mapping[str, FieldSpec], exact: bool = False) -> str:
    """Translate a line template into a line regex.

    Literal text is escaped; ``{name}`` becomes a named group with the
    field's pattern; ``{name?}`` is optional together with the whitespace
    in front of it; ``{=A|B}`` matches either literal. Runs of spaces
    match any run of one or more spaces unless ``exact`` is set.
    """
    parts: list[tuple[str, str]] = []
    pos = 0
    for m in _PLACEHOLDER.finditer(template):
        if m.start() > pos:
            parts.extend(_split_literal(template[pos : m.start()]))
        parts.append(("slot", m.group(1)))
        pos = m.end()
    if pos < len(template):
        parts.extend(_split_literal(template[pos:]))

    out: list[str] = []
    i = 0
    while i < len(parts):
        kind, text = parts[i]
        if kind == "ws":
            nxt = parts[i + 1] if i + 1 < len(parts) else None
            if nxt and nxt[0] == "slot" and nxt[1].endswith("?"):
                spec = _field(fields, nxt[1][:-1])
                ws = f"[ ]{{{len(text)}}}" if exact else "[ ]+"
                out.append(f"(?:{ws}(?P<{spec.name}>{spec.pattern}))?")
                i += 2
                continue
            out.append(f"[ ]{{{len(text)}}}" if exact else "[ ]+")
        elif kind == "lit":
            out.append(re.escape(text))
        elif text.startswith("="):
            alts = [a for a in text[1:].split("|")]
            out.append("(?:" + "|".join(_elastic_literal(a, exact) for a in alts) + ")")
        elif text.endswith("?"):
            spec = _field(fields, text[:-1])
            nxt = parts[i + 1] if i + 1 < len(parts) else None
            if not out and nxt and nxt[0] == "ws":
                ws = f"[ ]{{{len(nxt[1])}}}" if exact else "[ ]+"
                out.append(f"(?:(?P<{spec.name}>{spec.pattern}){ws})?")
                i += 2
                continue
            out.append(f"(?:(?P<{spec.name}>{spec.pattern}))?")
        else:
            spec = _field(fields, text)
            out.append(f"(?P<{spec.name}>{spec.pattern})")
        i += 1
    return "".join(out)


def _split_literal(text: str) -> list[tuple[str, str]]:
    return [("ws" if chunk.isspace() else "lit", chunk) for chunk in re.findall(r" +|[^ ]+", text)]


def _elastic_literal(text: str, exact: bool) -> str:
    if exact:
        return re.escape(text)
    return "[ ]+".join(re.escape(w) for w in text.split())


def _field(fields: Mapping[str, FieldSpec], name: str) -> FieldSpec:
    try:
        spec = fields[name]
    except KeyError:
        raise PatternCompileError("template references an undeclared field", name) from None
    if spec.kind is FieldKind.CHECKBOX_ANCHOR:
        raise PatternCompileError("checkbox anchors cannot appear in line templates", name)
    return spec


# -- grammar -------------------------------------------------------------


@dataclass(frozen=True)
class FormGrammar:
    form_id: str
    title_pattern: str
    lines: tuple[LinePattern, ...]
    composed: str
    fields: Mapping[str, FieldSpec]
    templates: tuple[str, ...] = ()
    priority: int = 0
    parent: str | None = None
    _compiled: Any = field(default=None, repr=False, compare=False)

    @property
    def line_patterns(self) -> list[str]:
        return [lp.regex for lp in self.lines]

    @property
    def token_names(self) -> list[str]:
        names = []
        for lp in self.lines:
            if lp.block:
                names.append(lp.block)
            names.extend(lp.names)
        return names

    @property
    def anchors(self) -> list[FieldSpec]:
        return [f for f in self.fields.values() if f.kind is FieldKind.CHECKBOX_ANCHOR]

    def regex(self) -> re.Pattern:
        return self._compiled[0]

    def line_regex(self, i: int) -> re.Pattern:
        return self._compiled[1][i]


def compose_grammar(
    form_id: str,
    title_pattern: str,
    line_patterns: Iterable,
    fields: Iterable[FieldSpec] | Mapping[str, FieldSpec] = (),
    priority: int = 0,
    templates: Iterable[str] = (),
    parent: str | None = None,
) -> FormGrammar:
    """Build a grammar bottom-up from per-line patterns.

    ``line_patterns`` holds :class:`LinePattern` objects or plain regex
    strings. Group names must be unique across the whole grammar.
    """
    lines = tuple(lp if isinstance(lp, LinePattern) else LinePattern(str(lp), source=str(lp)) for lp in line_patterns)
    if not lines:
        raise PatternCompileError("a grammar needs at least one line pattern", form_id)
    if isinstance(fields, Mapping):
        field_map = dict(fields)
    else:
        field_map = {}
        for spec in fields:
            if spec.name in field_map:
                raise DuplicateTokenName(spec.name)
            field_map[spec.name] = spec
    try:
        re.compile(title_pattern)
    except re.error as exc:
        raise PatternCompileError(f"title pattern does not compile ({exc})", title_pattern) from None
    seen: set[str] = set()
    compiled_lines = []
    for lp in lines:
        try:
            rx = re.compile(lp.regex if lp.exact else r"[ ]*(?:" + lp.regex + r")[ ]*")
        except re.error as exc:
            raise PatternCompileError(f"line pattern does not compile ({exc})", lp.regex) from None
        names = lp.names + ([lp.block] if lp.block else [])
        for name in names:
            if name in seen:
                raise DuplicateTokenName(name)
            seen.add(name)
        compiled_lines.append(rx)
    composed = compose_pattern(lines)
    try:
        page_rx = re.compile(composed)
    except re.error as exc:
        raise PatternCompileError(f"composed pattern does not compile ({exc})", composed) from None
    return FormGrammar(
        form_id=form_id,
        title_pattern=title_pattern,
        lines=lines,
        composed=composed,
        fields=field_map,
        templates=tuple(templates),
        priority=priority,
        parent=parent,
        _compiled=(page_rx, tuple(compiled_lines), re.compile(title_pattern)),
    )


def grammar_from_templates(
    form_id: str,
    title_pattern: str,
    templates: Iterable[tuple[str, str]],
    fields: Iterable[FieldSpec],
    priority: int = 0,
    parent: str | None = None,
) -> FormGrammar:
    """Build a grammar from ``(flags, template)`` pairs.

    ``flags`` may contain ``?`` (optional line), ``=`` (exact columns),
    ``~`` (template is already a regex) and ``*name`` (repeating rows bound
    under ``name``).
    """
    specs = list(fields)
    field_map: dict[str, FieldSpec] = {}
    for spec in specs:
        if spec.name in field_map:
            raise DuplicateTokenName(spec.name)
        field_map[spec.name] = spec
    lines = []
    sources = []
    for flags, template in templates:
        m = re.fullmatch(r"([?=~]*)(?:\*([A-Za-z_]\w*))?([?=~]*)", flags)
        if not m:
            raise PatternCompileError("unknown line flags", flags)
        marks = m.group(1) + m.group(3)
        exact = "=" in marks
        regex = template if "~" in marks else compile_template(template, field_map, exact=exact)
        lines.append(LinePattern(regex, source=template, optional="?" in marks, block=m.group(2), exact=exact))
        sources.append(f"{flags}| {template}")
    return compose_grammar(form_id, title_pattern, lines, field_map, priority, sources, parent)


# -- typed values --------------------------------------------------------


class TypedValueError(ValueError):
    pass


def canonicalize(raw: str, table: Mapping[str, str] | None) -> tuple[str, bool]:
    """Canonical label for ``raw`` and whether the table knew it."""
    text = " ".join(raw.split())
    if not table:
        return text, True
    key = text.casefold()
    if key in table:
        return table[key], True
    return text, False


def parse_time(raw: str) -> dt.time:
    text = raw.strip()
    m = re.fullmatch(r"(\d{1,2}):(\d{2})|(\d{2})(\d{2})", text)
    if not m:
        raise TypedValueError(f"not a time of day: {raw!r}")
    hh, mm = (m.group(1), m.group(2)) if m.group(1) else (m.group(3), m.group(4))
    try:
        return dt.time(int(hh), int(mm))
    except ValueError:
        raise TypedValueError(f"not a time of day: {raw!r}") from None


def parse_date(raw: str) -> dt.date:
    text = raw.strip()
    try:
        if "/" in text:
            month, day, year = (int(p) for p in text.split("/"))
            return dt.date(year, month, day)
        return dt.date.fromisoformat(text)
    except ValueError:
        raise TypedValueError(f"not a calendar date: {raw!r}") from None


def parse_number(raw: str, integer: bool = False):
    text = raw.strip().replace(",", "")
    if text.casefold() in _NAN_WORDS or not text:
        return None
    try:
        if integer or re.fullmatch(r"[+-]?\d+", text):
            return int(text)
        return float(text)
    except ValueError:
        raise TypedValueError(f"not a number: {raw!r}") from None


def convert(spec: FieldSpec, raw: str, diagnostics: list[str]):
    kind = spec.kind
    if kind is FieldKind.NUMBER:
        return parse_number(raw, spec.integer)
    if kind is FieldKind.TIME:
        return parse_time(raw)
    if kind is FieldKind.DATE:
        return parse_date(raw)
    if kind is FieldKind.CATEGORICAL:
        value, known = canonicalize(raw, spec.canon)
        if not known:
            diagnostics.append(f"UnmappedCategorical: {spec.name}={value!r}")
        return value
    if kind is FieldKind.PERSON_NAME:
        return " ".join(raw.split())
    return raw.strip()


def _bind(spec: FieldSpec | None, raw: str | None, diagnostics: list[str]) -> Binding:
    if raw is None:
        return MISSING
    if spec is None:
        return Binding(raw, raw)
    value = convert(spec, raw, diagnostics)
    if value is None:
        return Binding(raw, None)
    return Binding(raw, value)


# -- parsing -------------------------------------------------------------


def page_text(lines: list[str]) -> str:
    return "".join(line.rstrip() + "\n" for line in lines)


def _next_nonblank(lines: list[str], i: int) -> int:
    while i < len(lines) and not lines[i].strip():
        i += 1
    return i


def match_sequential(grammar: FormGrammar, lines: list[str]):
    """Replay the line patterns one at a time.

    Returns ``(ok, line_index, pattern_index, row_matches)`` where on failure
    ``line_index`` is the first text line that could not be matched (or
    ``len(lines)`` when text ran out) and ``pattern_index`` counts the line
    patterns consumed before it.
    """
    i = _next_nonblank(lines, 0)
    rows: dict[str, list] = {}
    for k, lp in enumerate(grammar.lines):
        rx = grammar.line_regex(k)
        if lp.block:
            found = rows.setdefault(lp.block, [])
            while i < len(lines):
                m = rx.fullmatch(lines[i].rstrip())
                if not m:
                    break
                found.append(m)
                i = _next_nonblank(lines, i + 1)
            continue
        m = rx.fullmatch(lines[i].rstrip()) if i < len(lines) else None
        if m is None:
            if lp.optional:
                continue
            return False, i, k, rows
        i = _next_nonblank(lines, i + 1)
    if i < len(lines):
        return False, i, len(grammar.lines), rows
    return True, i, len(grammar.lines), rows


def parse_form(grammar: FormGrammar, lines: list[str]) -> ParseResult | ParseFailure:
    """Parse one page of layout text with ``grammar``.

    The composed page pattern is tried first. Unmatched pages are replayed
    line by line to report the first offending line; values that match
    their pattern but cannot be converted produce a ``TypedValueError``
    failure.
    """
    text = page_text(lines)
    m = grammar.regex().match(text)
    if m is None:
        _, line_idx, pat_idx, _ = match_sequential(grammar, lines)
        line_text = lines[line_idx] if line_idx < len(lines) else ""
        expected = grammar.templates[pat_idx] if pat_idx < len(grammar.templates) else (
            grammar.lines[pat_idx].regex if pat_idx < len(grammar.lines) else "<end of page>"
        )
        return ParseFailure(grammar.form_id, (line_idx, line_text), pat_idx, "NoMatch", "", expected)

    diagnostics: list[str] = []
    bindings: dict[str, Any] = {}
    groups = m.groupdict()
    try:
        for k, lp in enumerate(grammar.lines):
            if lp.block:
                block_text = groups.get(lp.block) or ""
                rx = grammar.line_regex(k)
                rows = []
                for row_line in block_text.split("\n"):
                    if not row_line.strip():
                        continue
                    rm = rx.fullmatch(row_line.rstrip())
                    rows.append(
                        {name: _bind(grammar.fields.get(name), rm.group(name), diagnostics) for name in lp.names}
                    )
                bindings[lp.block] = Binding(block_text, rows)
                continue
            for name in lp.names:
                bindings[name] = _bind(grammar.fields.get(name), groups.get(name), diagnostics)
    except TypedValueError as exc:
        return ParseFailure(grammar.form_id, (-1, ""), len(grammar.lines), "TypedValueError", str(exc))
    return ParseResult(grammar.form_id, bindings, diagnostics)


# -- registry ------------------------------------------------------------


class GrammarRegistry:
    """Ordered grammar collection; earlier grammars win identification."""

    def __init__(self, grammars: Iterable[FormGrammar] = ()):
        self._grammars: list[FormGrammar] = []
        for g in grammars:
            self.register(g)

    def register(self, grammar: FormGrammar) -> None:
        if any(g.form_id == grammar.form_id for g in self._grammars):
            raise GrammarError(f"form {grammar.form_id!r} already registered")
        self._grammars.append(grammar)
        # stable: equal priorities keep registration order
        self._grammars.sort(key=lambda g: -g.priority)

    def replace(self, grammar: FormGrammar) -> None:
        self._grammars = [grammar if g.form_id == grammar.form_id else g for g in self._grammars]

    def __iter__(self):
        return iter(self._grammars)

    def __len__(self) -> int:
        return len(self._grammars)

    def __contains__(self, form_id: str) -> bool:
        return any(g.form_id == form_id for g in self._grammars)

    def get(self, form_id: str) -> FormGrammar:
        for g in self._grammars:
            if g.form_id == form_id:
                return g
        raise KeyError(form_id)

    @property
    def form_ids(self) -> list[str]:
        return [g.form_id for g in self._grammars]

    def subforms(self, parent: str) -> list[FormGrammar]:
        return [g for g in self._grammars if g.parent == parent]


def identify_form(lines: list[str], registry: GrammarRegistry) -> str | None:
    """Form id of the first top-level grammar whose title matches an early line, else ``None``.

    Subform grammars (those with a ``parent``) are never candidates.
    """
    if not len(registry):
        raise GrammarError("grammar registry is empty")
    head = [ln for ln in lines if ln.strip()][:TITLE_WINDOW]
    for grammar in registry:
        if grammar.parent:
            continue
        title_rx = grammar._compiled[2]
        if any(title_rx.search(ln) for ln in head):
            return grammar.form_id
    return None


# -- evaluation and refinement -------------------------------------------


@dataclass
class EvaluationReport:
    form_id: str
    total: int
    successes: int
    clusters: dict[tuple, list[int]]
    failures: dict[int, ParseFailure]

    @property
    def parse_rate(self) -> float:
        return self.successes / self.total if self.total else 0.0


# a label starts a layout column: line start or after a run of two or more spaces
_LABEL = re.compile(r"(?:^|(?<=  ))([A-Za-z][A-Za-z ./()#-]*?:)")


def failure_shape(failure: ParseFailure) -> tuple:
    """Cluster key: which line pattern failed and the fixed labels on the offending line."""
    text = failure.first_unmatched_line[1].strip()
    labels = tuple(lbl.strip() for lbl in _LABEL.findall(text))
    if not labels:
        labels = (re.sub(r"\d+", "9", " ".join(text.split())),)
    return (failure.reason, failure.matched_prefix_lines, labels)


def evaluate_grammar(grammar: FormGrammar, corpus: list[list[str]]) -> EvaluationReport:
    """Parse every page of ``corpus`` and group failures by the shape of the first unmatched line."""
    if not corpus:
        raise ValueError("corpus must not be empty")
    successes = 0
    clusters: dict[tuple, list[int]] = {}
    failures: dict[int, ParseFailure] = {}
    for idx, lines in enumerate(corpus):
        result = parse_form(grammar, lines)
        if isinstance(result, ParseResult):
            successes += 1
            continue
        failures[idx] = result
        clusters.setdefault(failure_shape(result), []).append(idx)
    return EvaluationReport(grammar.form_id, len(corpus), successes, clusters, failures)


def _template_words(template: str) -> list[str]:
    return re.findall(r"\{[^{}]*\}|[^ ]+", template)


def _candidate_alternations(template: str, line: str):
    """Yield templates where one literal word becomes an alternation with text seen in ``line``."""
    t_words = _template_words(template)
    l_words = line.split()
    literal_idx = [i for i, w in enumerate(t_words) if not w.startswith("{")]
    literals = {t_words[i] for i in literal_idx}
    sm = difflib.SequenceMatcher(a=t_words, b=l_words, autojunk=False)
    spans = []
    for tag, i1, i2, j1, j2 in sm.get_opcodes():
        if tag in ("replace", "insert"):
            for a in range(j1, j2):
                for b in range(a + 1, min(j2, a + 3) + 1):
                    spans.append(" ".join(l_words[a:b]))
    for i in literal_idx:
        word = t_words[i]
        if word in l_words:
            continue
        for alt in spans:
            if alt in literals:
                continue
            new_words = list(t_words)
            new_words[i] = "{=" + word + "|" + alt + "}"
            yield _rejoin(template, t_words, new_words)


def _rejoin(template: str, old: list[str], new: list[str]) -> str:
    # keep the original spacing between words
    out, pos = [], 0
    for o, n in zip(old, new):
        idx = template.index(o, pos)
        out.append(template[pos:idx])
        out.append(n)
        pos = idx + len(o)
    out.append(template[pos:])
    return "".join(out)


def refine_grammar(grammar: FormGrammar, report: EvaluationReport, corpus: list[list[str]]) -> FormGrammar:
    """One pass of failure-driven refinement.

    For every failure cluster the offending template line is widened so
    that one fixed label also accepts the alternative wording found on the
    failing line. Changes are kept only when the failing page then parses
    and no previously parsing page breaks.
    """
    if not grammar.templates:
        return grammar
    templates = [tuple(s.split("| ", 1)) if "| " in s else ("", s) for s in grammar.templates]
    current = grammar
    for key, members in sorted(report.clusters.items(), key=lambda kv: -len(kv[1])):
        failure = report.failures[members[0]]
        k = failure.matched_prefix_lines
        if failure.reason != "NoMatch" or k >= len(templates):
            continue
        flags, template = templates[k]
        line = failure.first_unmatched_line[1]
        for candidate in _candidate_alternations(template, line):
            trial = list(templates)
            trial[k] = (flags, candidate)
            try:
                refined = grammar_from_templates(
                    current.form_id,
                    current.title_pattern,
                    trial,
                    current.fields.values(),
                    current.priority,
                    current.parent,
                )
            except GrammarError:
                continue
            if isinstance(parse_form(refined, corpus[members[0]]), ParseResult):
                templates = trial
                current = refined
                logger.info("refined %s line %d: %s", grammar.form_id, k, candidate)
                break
    if current is grammar:
        return grammar
    before = evaluate_grammar(grammar, corpus)
    after = evaluate_grammar(current, corpus)
    lost = [i for i in range(len(corpus)) if i not in before.failures and i in after.failures]
    if lost:
        logger.warning("refinement of %s rejected: %d pages regressed", grammar.form_id, len(lost))
        return grammar
    return current


def refine_registry(
    registry: GrammarRegistry, corpora: Mapping[str, list[list[str]]]
) -> tuple[GrammarRegistry, dict[str, EvaluationReport]]:
    """Evaluate every grammar on its page corpus and apply one refinement pass to each.

    Grammars without pages are carried over unchanged. The returned
    reports describe the grammars before refinement.
    """
    refined = []
    reports = {}
    for grammar in registry:
        pages = corpora.get(grammar.form_id)
        if not pages:
            refined.append(grammar)
            continue
        report = evaluate_grammar(grammar, pages)
        reports[grammar.form_id] = report
        refined.append(refine_grammar(grammar, report, pages) if report.failures else grammar)
    return GrammarRegistry(refined), reports
