"""Tokenizer for GenLang source text."""

import re
from dataclasses import dataclass

from src.errors import CompilationError
from src.utils import RESERVED_WORDS

KEYWORDS = RESERVED_WORDS

# Operators are matched longest first
_TOKEN_RE = re.compile(r'''
    (?P<ws>[ \t\r]+)
  | (?P<newline>\n)
  | (?P<comment>//[^\n]*)
  | (?P<int>-?[0-9]+)
  | (?P<string>"(?:[^"\\\n]|\\.)*")
  | (?P<ident>[A-Za-z][A-Za-z0-9_]*)
  | (?P<punct>==|&&|\+\+|[{}()\[\];,.=+<>])
''', re.VERBOSE)

_ESCAPES = {'n': '\n', 't': '\t', '"': '"', '\\': '\\'}


@dataclass(frozen=True)
class Token:
    kind: str      # ident, keyword, int, string, punct, eof
    value: object
    line: int

    def is_punct(self, text):
        return self.kind == 'punct' and self.value == text

    def is_keyword(self, text):
        return self.kind == 'keyword' and self.value == text


def _unescape(body, line, class_name):
    out = []
    i = 0
    while i < len(body):
        ch = body[i]
        if ch == '\\':
            nxt = body[i + 1]
            if nxt not in _ESCAPES:
                raise CompilationError(f"unknown escape \\{nxt}", 'syntax', line, class_name)
            out.append(_ESCAPES[nxt])
            i += 2
        else:
            out.append(ch)
            i += 1
    return ''.join(out)


def tokenize(source, class_name=None):
    """
    Split source into tokens, ending with an eof token.

    Raises:
        CompilationError(phase='syntax') on characters outside the language
    """
    tokens = []
    line = 1
    pos = 0
    while pos < len(source):
        match = _TOKEN_RE.match(source, pos)
        if not match:
            raise CompilationError(
                f"unexpected character {source[pos]!r}", 'syntax', line, class_name
            )
        kind = match.lastgroup
        text = match.group()
        pos = match.end()
        if kind == 'newline':
            line += 1
        elif kind in ('ws', 'comment'):
            continue
        elif kind == 'int':
            tokens.append(Token('int', int(text), line))
        elif kind == 'string':
            tokens.append(Token('string', _unescape(text[1:-1], line, class_name), line))
        elif kind == 'ident':
            tokens.append(Token('keyword' if text in KEYWORDS else 'ident', text, line))
        else:
            tokens.append(Token('punct', text, line))
    tokens.append(Token('eof', None, line))
    return tokens
