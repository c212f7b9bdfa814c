import hashlib
import re

IDENTIFIER_RE = re.compile(r'^[A-Za-z][A-Za-z0-9_]*$')

# GenLang keywords; usable as attribute names, never as class names
RESERVED_WORDS = frozenset({
    'class', 'implements', 'static', 'public', 'return', 'for', 'if', 'new',
    'true', 'false', 'int', 'text', 'boolean', 'void', 'any', 'seq', 'emit',
})


def is_identifier(name):
    """Identifiers are letters, digits and '_' starting with a letter."""
    return isinstance(name, str) and IDENTIFIER_RE.match(name) is not None


def is_class_name(name):
    """An identifier that is not a reserved word."""
    return is_identifier(name) and name not in RESERVED_WORDS


def fingerprint64(text):
    """Stable 64-bit fingerprint of a text (BLAKE2b, 8-byte digest)."""
    digest = hashlib.blake2b(text.encode('utf-8'), digest_size=8).digest()
    return int.from_bytes(digest, 'big')


def fingerprint_hex(fingerprint):
    """Fingerprint as the 16-digit lowercase hex used for cache file names."""
    return f"{fingerprint:016x}"


def format_ms(milliseconds):
    """Short human-readable duration for a millisecond value."""
    if milliseconds >= 1000.0:
        return f"{milliseconds / 1000.0:.2f} s"
    if milliseconds >= 1.0:
        return f"{milliseconds:.2f} ms"
    return f"{milliseconds * 1000.0:.0f} us"
