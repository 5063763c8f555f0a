"""Reading and writing grammar definition files (``*.grammar``).

One file defines one form. Section keywords start in column 0; section
bodies are indented. Lines whose first non-blank character is ``#`` are
comments::

    FORM liver_data
    PRIORITY 40
    TITLE ^\\s*LIVER DATA\\s*$
    LINES
      | LIVER DATA
      | Donor ID: {donor_id}   Recovery Date: {recovery_date}
      ?| Comments: {comments}
      *rows| {time} {value?}
    FIELDS
      donor_id       FreeText   pattern=[A-Z]{3}\\d{4}
      recovery_date  Date
      steatosis      CheckboxAnchor  anchor=20,6
      weight         Number     int
      sex            Categorical  canon=sex
    CANON sex
      Male = m, male
      Female = f, female

``PARENT id`` marks a subform that is parsed inside its parent's pages.
Each LINES entry is ``flags| template``; see
:func:`~formextract.grammar.engine.grammar_from_templates` for the flags
and :func:`~formextract.grammar.engine.compile_template` for placeholders.
FIELDS options are ``int``, ``canon=NAME``, ``anchor=ROW,COL`` and
``pattern=REGEX``; ``pattern=`` takes the rest of the line.
"""

from __future__ import annotations

import functools
import importlib.resources
from pathlib import Path

from .engine import (
    FieldKind,
    FieldSpec,
    FormGrammar,
    GrammarError,
    GrammarRegistry,
    grammar_from_templates,
)

SUFFIX = ".grammar"


class GrammarFileError(GrammarError):
    def __init__(self, source: str, line_no: int, message: str):
        super().__init__(f"{source}:{line_no}: {message}")
        self.source = source
        self.line_no = line_no


def parse_grammar_text(text: str, source: str = "<string>") -> FormGrammar:
    header: dict[str, str] = {}
    templates: list[tuple[str, str]] = []
    field_lines: list[tuple[int, str]] = []
    canon: dict[str, dict[str, str]] = {}
    section = None
    canon_name = None

    for no, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if not line[0].isspace():
            keyword, _, rest = line.partition(" ")
            rest = rest.strip()
            if keyword in ("FORM", "PRIORITY", "TITLE", "PARENT"):
                if not rest:
                    raise GrammarFileError(source, no, f"{keyword} needs a value")
                if keyword in header:
                    raise GrammarFileError(source, no, f"{keyword} given twice")
                header[keyword] = rest
                section = None
            elif keyword in ("LINES", "FIELDS"):
                section = keyword
            elif keyword == "CANON":
                if not rest:
                    raise GrammarFileError(source, no, "CANON needs a table name")
                section, canon_name = "CANON", rest
                canon.setdefault(canon_name, {})
            else:
                raise GrammarFileError(source, no, f"unknown section {keyword!r}")
            continue
        if section == "LINES":
            flags, bar, template = stripped.partition("|")
            if not bar:
                raise GrammarFileError(source, no, "LINES entries look like 'flags| template'")
            # one separating space after the bar; the rest is significant
            body = line[line.index("|") + 1 :]
            templates.append((flags.strip(), body[1:] if body.startswith(" ") else body))
        elif section == "FIELDS":
            field_lines.append((no, stripped))
        elif section == "CANON":
            label, eq, variants = stripped.partition("=")
            if not eq or not label.strip():
                raise GrammarFileError(source, no, "CANON entries look like 'Label = variant, variant'")
            label = " ".join(label.split())
            table = canon[canon_name]
            for variant in [label, *variants.split(",")]:
                key = " ".join(variant.split()).casefold()
                if key:
                    table[key] = label
        else:
            raise GrammarFileError(source, no, "indented line outside a section")

    for required in ("FORM", "TITLE"):
        if required not in header:
            raise GrammarFileError(source, 0, f"missing {required}")
    fields = [_parse_field(source, no, entry, canon) for no, entry in field_lines]
    try:
        priority = int(header.get("PRIORITY", "0"))
    except ValueError:
        raise GrammarFileError(source, 0, "PRIORITY must be an integer") from None
    try:
        return grammar_from_templates(
            header["FORM"], header["TITLE"], templates, fields, priority, header.get("PARENT")
        )
    except GrammarFileError:
        raise
    except GrammarError as exc:
        raise GrammarFileError(source, 0, str(exc)) from exc


def _parse_field(source: str, no: int, entry: str, canon: dict[str, dict[str, str]]) -> FieldSpec:
    head, _, pattern = entry.partition("pattern=")
    parts = head.split()
    if len(parts) < 2:
        raise GrammarFileError(source, no, "FIELDS entries look like 'name Kind [options]'")
    name, kind_text, options = parts[0], parts[1], parts[2:]
    try:
        kind = FieldKind(kind_text)
    except ValueError:
        raise GrammarFileError(source, no, f"unknown field kind {kind_text!r}") from None
    kwargs: dict = {"pattern": pattern.strip()}
    for opt in options:
        key, _, value = opt.partition("=")
        if key == "int":
            kwargs["integer"] = True
        elif key == "canon":
            if value not in canon:
                raise GrammarFileError(source, no, f"unknown CANON table {value!r}")
            kwargs["canon"] = canon[value]
        elif key == "anchor":
            try:
                row, col = (int(v) for v in value.split(","))
            except ValueError:
                raise GrammarFileError(source, no, "anchor=ROW,COL expects two integers") from None
            kwargs["anchor_hint"] = (row, col)
        else:
            raise GrammarFileError(source, no, f"unknown field option {opt!r}")
    try:
        return FieldSpec(name, kind, **kwargs)
    except GrammarError as exc:
        raise GrammarFileError(source, no, str(exc)) from exc


def load_grammar(path) -> FormGrammar:
    path = Path(path)
    return parse_grammar_text(path.read_text(encoding="utf-8"), str(path))


def dump_grammar(grammar: FormGrammar) -> str:
    """Render ``grammar`` back into the file format (canonical tables are renamed per field)."""
    out = [f"FORM {grammar.form_id}", f"PRIORITY {grammar.priority}"]
    if grammar.parent:
        out.append(f"PARENT {grammar.parent}")
    out.append(f"TITLE {grammar.title_pattern}")
    out.append("LINES")
    out.extend(f"  {t}" for t in grammar.templates)
    out.append("FIELDS")
    tables = {}
    for spec in grammar.fields.values():
        opts = [spec.name, spec.kind.value]
        if spec.integer:
            opts.append("int")
        if spec.anchor_hint is not None:
            opts.append(f"anchor={spec.anchor_hint[0]},{spec.anchor_hint[1]}")
        if spec.canon:
            tables[spec.name] = spec.canon
            opts.append(f"canon={spec.name}")
        if spec.kind is not FieldKind.CHECKBOX_ANCHOR:
            opts.append(f"pattern={spec.pattern}")
        out.append("  " + " ".join(opts))
    for name, table in tables.items():
        out.append(f"CANON {name}")
        labels: dict[str, list[str]] = {}
        for variant, label in table.items():
            labels.setdefault(label, [])
            if variant != label.casefold():
                labels[label].append(variant)
        out.extend(f"  {label} = {', '.join(variants)}" for label, variants in labels.items())
    return "\n".join(out) + "\n"


def load_registry(directory) -> GrammarRegistry:
    """Every ``*.grammar`` file in ``directory``, ordered by priority then file name."""
    directory = Path(directory)
    if not directory.is_dir():
        raise GrammarError(f"grammar directory not found: {directory}")
    grammars = [load_grammar(p) for p in sorted(directory.glob("*" + SUFFIX))]
    if not grammars:
        raise GrammarError(f"no grammar files in {directory}")
    return GrammarRegistry(grammars)


@functools.lru_cache(maxsize=1)
def default_registry() -> GrammarRegistry:
    """The built-in grammars shipped with the package."""
    root = importlib.resources.files("formextract.grammar") / "forms"
    grammars = []
    for entry in sorted(root.iterdir(), key=lambda e: e.name):
        if entry.name.endswith(SUFFIX):
            grammars.append(parse_grammar_text(entry.read_text(encoding="utf-8"), entry.name))
    return GrammarRegistry(grammars)


def builtin_grammar_dir() -> Path:
    return Path(str(importlib.resources.files("formextract.grammar") / "forms"))
