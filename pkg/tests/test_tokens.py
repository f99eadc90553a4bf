import random

import pytest

from ml1.printer import pretty_print
from ml1.tokens import IDENT, KEYWORD, LITERAL, PUNCT, LexError, string_value, tokenize

from gen import random_unit


def kinds_and_texts(source):
    return [(t.kind, t.text) for t in tokenize(source)]


def test_wildcard_import_tokens():
    assert kinds_and_texts("import a.b._") == [
        (KEYWORD, "import"),
        (IDENT, "a"),
        (PUNCT, "."),
        (IDENT, "b"),
        (PUNCT, "."),
        (PUNCT, "_"),
    ]


def test_empty_input():
    assert tokenize("") == []


def test_annotated_import_leading_tokens():
    tokens = kinds_and_texts("@exported import A._")
    assert tokens[:3] == [(PUNCT, "@"), (IDENT, "exported"), (KEYWORD, "import")]


def test_comments_and_whitespace_are_skipped():
    assert kinds_and_texts("a // trailing comment\n  b") == [(IDENT, "a"), (IDENT, "b")]


def test_arrow_and_equals_are_distinct():
    assert kinds_and_texts("= =>") == [(PUNCT, "="), (PUNCT, "=>")]


def test_string_literal_keeps_raw_text():
    (token,) = tokenize('"hi\\nthere"')
    assert token.kind == LITERAL
    assert token.text == '"hi\\nthere"'
    assert string_value(token.text) == "hi\nthere"


def test_underscore_alone_is_punctuation_but_named_underscores_are_idents():
    assert kinds_and_texts("_ __frame _x") == [
        (PUNCT, "_"),
        (IDENT, "__frame"),
        (IDENT, "_x"),
    ]


def test_unterminated_string_is_a_lex_error():
    with pytest.raises(LexError):
        tokenize('"never closed')


def test_illegal_character_is_a_lex_error():
    with pytest.raises(LexError):
        tokenize("a ? b")


def test_line_numbers_follow_newlines():
    tokens = tokenize("a\nb\n\nc")
    assert [t.line for t in tokens] == [1, 2, 4]


def test_spans_reconstruct_generated_sources():
    rng = random.Random(7)
    for _ in range(50):
        source = pretty_print(random_unit(rng))
        tokens = tokenize(source)
        last_end = 0
        for token in tokens:
            assert token.span.start >= last_end
            assert source[token.span.start : token.span.end] == token.text
            gap = source[last_end : token.span.start]
            assert gap.strip() == "" or gap.lstrip().startswith("//")
            last_end = token.span.end
