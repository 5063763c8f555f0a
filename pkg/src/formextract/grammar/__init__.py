"""Form grammars: definition files, identification, parsing and refinement."""

from .engine import (
    MISSING,
    Binding,
    DuplicateTokenName,
    EvaluationReport,
    FieldKind,
    FieldSpec,
    FormGrammar,
    GrammarError,
    GrammarRegistry,
    LinePattern,
    ParseFailure,
    ParseResult,
    PatternCompileError,
    TypedValueError,
    canonicalize,
    compile_template,
    compose_grammar,
    compose_pattern,
    evaluate_grammar,
    grammar_from_templates,
    identify_form,
    match_sequential,
    parse_form,
    refine_grammar,
    refine_registry,
)
from .fileformat import (
    GrammarFileError,
    builtin_grammar_dir,
    default_registry,
    dump_grammar,
    load_grammar,
    load_registry,
    parse_grammar_text,
)

__all__ = [name for name in dir() if not name.startswith("_")]
