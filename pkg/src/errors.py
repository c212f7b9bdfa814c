"""
Error hierarchy
===============
Every failure raised by the engine derives from ReflectJoinError and carries a
short `kind` string so callers (and tests) can tell failures apart without
parsing messages.
"""


class ReflectJoinError(Exception):
    kind = 'error'

    def __init__(self, message=''):
        super().__init__(message)
        self.message = message


# ---------- meta ----------

class DuplicateSchema(ReflectJoinError):
    kind = 'duplicate_schema'


class SchemaNotFound(ReflectJoinError):
    kind = 'schema_not_found'


class IncompatibleDomains(ReflectJoinError):
    kind = 'incompatible_domains'


class InvalidSchema(ReflectJoinError):
    kind = 'invalid_schema'


# ---------- relations ----------

class InvalidRelation(ReflectJoinError):
    kind = 'invalid_relation'


class ParseError(ReflectJoinError):
    """Malformed relation file; `line` is 1-based."""
    kind = 'parse_error'

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class DomainError(ReflectJoinError):
    """A value whose tag does not fit its attribute domain."""
    kind = 'domain_error'

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class SchemaMismatch(ReflectJoinError):
    kind = 'schema_mismatch'


class Infeasible(ReflectJoinError):
    kind = 'infeasible'


# ---------- genlang compile time ----------

class CompilationError(ReflectJoinError):
    """Raised by parse/typecheck/link. `phase` is syntax, type or link."""
    kind = 'compilation_error'

    def __init__(self, message, phase='syntax', line=None, class_name=None):
        location = f"{class_name or '?'}:{line}" if line is not None else (class_name or '?')
        super().__init__(f"{phase} error at {location}: {message}")
        self.phase = phase
        self.line = line
        self.class_name = class_name
        self.detail = message


class ClassFormatError(ReflectJoinError):
    kind = 'class_format_error'


class ClassNotFound(ReflectJoinError):
    kind = 'class_not_found'


# ---------- genlang run time ----------

class NoSuchMethod(ReflectJoinError):
    kind = 'no_such_method'


class GenLangRuntimeError(ReflectJoinError):
    """Errors a well-typed GenLang program may legitimately raise."""
    kind = 'runtime_error'


class ClassCastError(GenLangRuntimeError):
    kind = 'class_cast'


class ArrayBoundsError(GenLangRuntimeError):
    kind = 'array_bounds'


class NullReferenceError(GenLangRuntimeError):
    kind = 'null_reference'


class StackOverflowError(GenLangRuntimeError):
    kind = 'stack_overflow'


class VmFault(ReflectJoinError):
    """A state the verifier should have ruled out. Always a bug."""
    kind = 'vm_fault'


class ArityError(ReflectJoinError):
    kind = 'arity_error'


# ---------- generator / engines ----------

class InterfaceMismatch(ReflectJoinError):
    kind = 'interface_mismatch'


class InvalidJoin(ReflectJoinError):
    """Catch-all for a failed join call; keeps the kind of the original failure."""
    kind = 'invalid_join'

    def __init__(self, message, cause=None):
        super().__init__(message)
        self.cause = cause
        self.cause_kind = getattr(cause, 'kind', None) if cause is not None else None


class InvalidArgument(InvalidJoin):
    kind = 'invalid_argument'


class BuilderUnderflow(ReflectJoinError):
    kind = 'builder_underflow'


class CacheError(ReflectJoinError):
    kind = 'cache_error'


class BenchmarkError(ReflectJoinError):
    """An engine failure during a measured run, tagged with where it happened."""
    kind = 'benchmark_error'

    def __init__(self, message, strategy=None, iteration=None, cause=None):
        super().__init__(f"[{strategy} #{iteration}] {message}")
        self.strategy = strategy
        self.iteration = iteration
        self.cause = cause
