"""GenLang compiler, byte format, verifier and both VM tiers."""

import dataclasses
import struct
import zlib

import pytest
from hypothesis import HealthCheck, given, settings, strategies as st

from src.errors import (
    ArrayBoundsError, ClassCastError, ClassFormatError, CompilationError,
    NoSuchMethod, NullReferenceError, StackOverflowError,
)
from src.genlang import (
    ClassRegistry, CompiledUnit, MethodInfo, Op, compile_classes, compile_count,
    compile_to_bytes, load_batch, read_unit, reset_compile_counter, verify_unit, write_unit,
)
from src.genlang.bytecode import MAGIC, encode_instruction
from src.genlang.vm import VM_MODES
from src.meta import SchemaRegistry, parse_schema_declaration

TOOLKIT = '''
// Exercises the runtime checks of the VM.
class Toolkit {
    static int count(any arg) {
        Job[] rel = (Job[]) arg;
        return rel.length;
    }

    static text postAt(any arg, int i) {
        Job[] rel = (Job[]) arg;
        return rel[i].post();
    }

    static text unset() {
        Job[] rel = new Job[2];
        return rel[1].post();
    }

    static text label(int n, boolean b) {
        return "n=" + n + ", b=" + b;
    }

    static int neg() {
        return -5;
    }

    static void shout(any arg) {
        Job[] rel = (Job[]) arg;
        int size = rel.length;
        for (int i = 0; i < size; i++) {
            emit("post=" + rel[i].post());
        }
    }

    static int picked(any arg) {
        Job[] rel = (Job[]) arg;
        seq<Job> kept = new seq<Job>();
        int size = rel.length;
        for (int i = 0; i < size; i++) {
            if (rel[i].jobId() == 2) {
                kept.add(rel[i]);
            }
        }
        return kept.size();
    }

    static Job seqMiss() {
        seq<Job> kept = new seq<Job>();
        return kept.get(0);
    }

    static int depth(int n) {
        return depth(n);
    }
}
'''


@pytest.fixture
def toolkit(classes):
    return compile_classes(['Toolkit'], [TOOLKIT], classes)[0]


def compile_error(source, name='A', schemas=None):
    with pytest.raises(CompilationError) as info:
        compile_to_bytes([name], [source], schemas or SchemaRegistry())
    return info.value


# =============================================================================
# COMPILE-TIME ERRORS
# =============================================================================

@pytest.mark.parametrize('source', [
    "class A { static int f() { return 1 } }",
    "class A { static int f() { return 1 == 1 == 1; } }",
    "class A { } class B { }",
    "class A { static int f() { return 1; }",
    "class A { static int f() { return 1 # 2; } }",
    "class A { static int f() { for (int i = 0; i < 3; j++) { } return 1; } }",
])
def test_syntax_errors(source):
    assert compile_error(source).phase == 'syntax'


@pytest.mark.parametrize('source', [
    'class A { static int f() { return "x"; } }',
    "class A { static int f() { } }",
    "class A { static int f() { return 1; return 2; } }",
    "class A { static any f() { return new Ghost[1]; } }",
    "class A { static int f() { return g(); } }",
    "class A { static int f() { int x = 1; int x = 2; return x; } }",
    "class A { static void f() { for (int i = 0; i < 3; i++) { i = 2; } } }",
    "class A { static boolean f(any a) { return a == a; } }",
    "class A { static int f(int n) { return n.length; } }",
    "class A { boolean flag(); }",
])
def test_type_errors(source):
    assert compile_error(source).phase == 'type'


def test_error_reports_line():
    error = compile_error("class A {\n    static int f() {\n        return x;\n    }\n}\n")
    assert error.line == 3
    assert error.class_name == 'A'


def test_declared_name_must_match():
    assert compile_error("class B { }", name='A').phase == 'syntax'


def test_interface_must_be_implemented(schemas):
    source = "class Row implements Job { text post(); }"
    assert compile_error(source, 'Row', schemas).phase == 'type'


def test_class_name_already_defined(schemas):
    assert compile_error("class Job { }", 'Job', schemas).phase == 'type'


def test_keywords_are_legal_member_names(classes):
    loaded = compile_classes(['Doc'], ["class Doc { text text(); int seq(); }"], classes)[0]
    assert loaded.schema.attribute_names == ['text', 'seq']
    assert classes.instantiate('Doc', ('body', 3)).values == ('body', 3)


def test_batch_classes_see_each_other(classes):
    pair = "class Pair { int k(); }"
    maker = "class Maker { static Pair make() { return new Pair(7); } }"
    compile_classes(['Maker', 'Pair'], [maker, pair], classes)
    assert classes.invoke_static('Maker', 'make', []).values == (7,)


def test_failed_batch_loads_nothing(classes):
    good = "class Good { int k(); }"
    bad = "class Bad { static int f() { return unknown; } }"
    with pytest.raises(CompilationError):
        compile_classes(['Good', 'Bad'], [good, bad], classes)
    assert 'Good' not in classes
    assert 'Good' not in classes.schemas


def test_compile_counter(schemas):
    reset_compile_counter()
    compile_to_bytes(['P', 'Q'], ["class P { int k(); }", "class Q { text v(); }"], schemas)
    assert compile_count() == 2
    reset_compile_counter()
    assert compile_count() == 0


# =============================================================================
# LOADING
# =============================================================================

def test_link_failure_unloads_batch(schemas):
    units = compile_to_bytes(
        ['Lister'], ["class Lister { static int n(any a) { Job[] r = (Job[]) a; return r.length; } }"],
        schemas,
    )
    empty = ClassRegistry(SchemaRegistry())
    with pytest.raises(CompilationError) as info:
        load_batch(empty, units)
    assert info.value.phase == 'link'
    assert 'Lister' not in empty
    assert 'Lister' not in empty.schemas


def test_fingerprint_mismatch_is_rejected(schemas):
    unit = compile_to_bytes(['Pair'], ["class Pair { int k(); }"], schemas)[0]
    forged = dataclasses.replace(unit, schema_fingerprint=unit.schema_fingerprint ^ 1)
    with pytest.raises(ClassFormatError):
        ClassRegistry(SchemaRegistry()).load(forged)


def test_loading_twice_returns_loaded_class(classes):
    unit = compile_to_bytes(['Pair'], ["class Pair { int k(); }"], classes.schemas)[0]
    first = classes.load(unit)
    assert classes.load(unit) is first


# =============================================================================
# BYTE FORMAT
# =============================================================================

def _hand_unit(code, signature='S()boolean', max_stack=1, max_locals=0, constants=()):
    method = MethodInfo('f', signature, max_stack, max_locals, bytes(code))
    return CompiledUnit('Hand', None, 0, tuple(constants), (method,))


def _with_crc(body):
    return body + struct.pack('>I', zlib.crc32(body) & 0xFFFFFFFF)


VALID_CODE = encode_instruction(Op.TRUE) + encode_instruction(Op.RETURN)


def test_unit_round_trip(schemas):
    for unit in compile_to_bytes(['Toolkit'], [TOOLKIT], schemas):
        assert read_unit(write_unit(unit)) == unit


def test_every_single_byte_change_is_detected():
    data = write_unit(_hand_unit(VALID_CODE))
    for i in range(len(data)):
        corrupt = bytearray(data)
        corrupt[i] ^= 0x5A
        with pytest.raises(ClassFormatError):
            read_unit(bytes(corrupt))


def test_truncation_is_detected():
    data = write_unit(_hand_unit(VALID_CODE))
    for size in range(len(data)):
        with pytest.raises(ClassFormatError):
            read_unit(data[:size])


def test_trailing_bytes_and_version():
    body = write_unit(_hand_unit(VALID_CODE))[:-4]
    with pytest.raises(ClassFormatError, match='trailing'):
        read_unit(_with_crc(body + b'\x00'))
    with pytest.raises(ClassFormatError, match='version'):
        read_unit(_with_crc(body[:4] + struct.pack('>H', 99) + body[6:]))


@settings(max_examples=200, deadline=None)
@given(st.binary(max_size=160))
def test_arbitrary_bytes_never_escape_as_other_errors(payload):
    data = _with_crc(MAGIC + struct.pack('>H', 1) + payload)
    try:
        unit = read_unit(data)
    except ClassFormatError:
        return
    try:
        verify_unit(unit)
    except ClassFormatError:
        pass


# =============================================================================
# VERIFIER
# =============================================================================

def test_verifier_accepts_valid_code():
    assert verify_unit(_hand_unit(VALID_CODE))


@pytest.mark.parametrize('unit', [
    _hand_unit(encode_instruction(Op.RETURN)),
    _hand_unit(encode_instruction(Op.JUMP, 3)),
    _hand_unit(encode_instruction(Op.LOAD, 0) + encode_instruction(Op.RETURN), 'S()int'),
    _hand_unit(encode_instruction(Op.CONST, 0) + encode_instruction(Op.RETURN), 'S()int'),
    _hand_unit(encode_instruction(Op.TRUE)),
    _hand_unit(b''),
    _hand_unit(bytes([0xFF])),
    _hand_unit(encode_instruction(Op.TRUE) + encode_instruction(Op.TRUE)
               + encode_instruction(Op.POP) + encode_instruction(Op.RETURN)),
    _hand_unit(VALID_CODE, signature='S()void'),
    _hand_unit(VALID_CODE, signature='A()boolean'),
    _hand_unit(VALID_CODE, signature='nonsense'),
    _hand_unit(encode_instruction(Op.INVOKE, 0, 0) + encode_instruction(Op.RETURN)),
], ids=[
    'underflow', 'bad-jump', 'bad-local', 'bad-pool-index', 'falls-off-end', 'empty',
    'unknown-opcode', 'max-stack', 'void-mismatch', 'accessor-signature', 'signature',
    'unknown-call',
])
def test_verifier_rejects(unit):
    with pytest.raises(ClassFormatError):
        verify_unit(unit)


# =============================================================================
# EXECUTION (both tiers)
# =============================================================================

def test_cast_and_length(classes, toolkit, jobs):
    assert classes.invoke_static(toolkit, 'count', [jobs]) == 3


def test_bad_cast(classes, toolkit, employees):
    with pytest.raises(ClassCastError):
        classes.invoke_static(toolkit, 'count', [employees])
    with pytest.raises(ClassCastError):
        classes.invoke_static(toolkit, 'count', [42])


def test_array_bounds(classes, toolkit, jobs):
    assert classes.invoke_static(toolkit, 'postAt', [jobs, 2]) == 'ops'
    for index in (3, -1):
        with pytest.raises(ArrayBoundsError):
            classes.invoke_static(toolkit, 'postAt', [jobs, index])


def test_null_slot(classes, toolkit):
    with pytest.raises(NullReferenceError):
        classes.invoke_static(toolkit, 'unset', [])


def test_text_rendering(classes, toolkit):
    assert classes.invoke_static(toolkit, 'label', [3, True]) == 'n=3, b=true'
    assert classes.invoke_static(toolkit, 'neg', []) == -5


def test_emit_goes_to_sink(classes, toolkit, jobs):
    lines = []
    assert classes.invoke_static(toolkit, 'shout', [jobs], sink=lines.append) is None
    assert lines == ['post=dev', 'post=lead', 'post=ops']


def test_seq_operations(classes, toolkit, jobs):
    assert classes.invoke_static(toolkit, 'picked', [jobs]) == 1
    with pytest.raises(ArrayBoundsError):
        classes.invoke_static(toolkit, 'seqMiss', [])


def test_unbounded_recursion(classes, toolkit):
    with pytest.raises(StackOverflowError):
        classes.invoke_static(toolkit, 'depth', [1])


def test_invocation_checks(classes, toolkit, jobs):
    with pytest.raises(NoSuchMethod):
        classes.invoke_static(toolkit, 'missing', [])
    with pytest.raises(NoSuchMethod):
        classes.invoke_static(toolkit, 'count', [jobs, jobs])
    with pytest.raises(ClassCastError):
        classes.invoke_static(toolkit, 'postAt', [jobs, 'x'])


def test_unknown_mode_is_rejected(schemas):
    with pytest.raises(ValueError):
        ClassRegistry(schemas, 'jit')


def test_interface_cast(classes, jobs):
    source = "class Lister { static int n(any a) { Job[] r = (Job[]) a; return r.length; } }"
    compile_classes(['Lister'], [source], classes)
    row = "class JobRow implements Job { text post(); text duties(); int jobId(); }"
    maker = '''
class MakeRows {
    static any make() {
        JobRow[] rows = new JobRow[1];
        rows[0] = new JobRow("p", "d", 4);
        return rows;
    }
}
'''
    compile_classes(['JobRow', 'MakeRows'], [row, maker], classes)
    rows = classes.invoke_static('MakeRows', 'make', [])
    assert classes.invoke_static('Lister', 'n', [rows]) == 1


# =============================================================================
# INTERFACES
# =============================================================================

def test_implementer_must_open_with_interface_attributes(schemas):
    source = "class Swapped implements Job { int jobId(); text post(); text duties(); }"
    assert compile_error(source, 'Swapped', schemas).phase == 'type'


def test_interface_reads_through_wider_class(classes):
    wide = "class WideJob implements Job { text post(); text duties(); int jobId(); text grade(); }"
    reader = '''
class ViaJob {
    static int viaIface(Job j) {
        return j.jobId();
    }

    static int viaWide() {
        return viaIface(new WideJob("p", "d", 7, "senior"));
    }
}
'''
    compile_classes(['WideJob', 'ViaJob'], [wide, reader], classes)
    assert classes.invoke_static('ViaJob', 'viaWide', []) == 7
    job = classes.instantiate('WideJob', ('p', 'd', 8, 'junior'))
    assert classes.invoke_static('ViaJob', 'viaIface', [job]) == 8


def test_loader_checks_interface_layout():
    compiled_against = SchemaRegistry()
    compiled_against.register(parse_schema_declaration("Keyed(k:int)"))
    units = compile_to_bytes(['Row'], ["class Row implements Keyed { int k(); text v(); }"],
                             compiled_against)

    elsewhere = SchemaRegistry()
    elsewhere.register(parse_schema_declaration("Keyed(v:text)"))
    for registry in (elsewhere, SchemaRegistry()):
        classes = ClassRegistry(registry)
        with pytest.raises(CompilationError) as info:
            load_batch(classes, units)
        assert info.value.phase == 'link'
        assert 'Row' not in classes
        assert 'Row' not in registry


MEMBER_NAMES = ('k', 'v', 'post', 'rank', 'jobId', 'zone', 'label', 'x1')
LITERALS = {
    'int': st.integers(-10**6, 10**9),
    'text': st.text(alphabet='abc xyz=', max_size=6),
}


@st.composite
def interface_programs(draw):
    """
    An interface, the layout of a class implementing it (all attributes in a
    drawn order, the interface's among them) and a value per attribute.
    """
    names = draw(st.lists(st.sampled_from(MEMBER_NAMES), min_size=1, max_size=6, unique=True))
    attributes = [(n, draw(st.sampled_from(['int', 'text']))) for n in names]
    width = draw(st.integers(1, len(attributes)))
    layout = draw(st.permutations(attributes))
    values = {n: draw(LITERALS[d]) for n, d in attributes}
    return attributes[:width], list(layout), values


def literal(value):
    return f'"{value}"' if isinstance(value, str) else str(value)


def program_sources(interface, layout, values):
    shape = "class Shape { " + " ".join(f"{d} {n}();" for n, d in interface) + " }"
    impl = "class Impl implements Shape { " + " ".join(f"{d} {n}();" for n, d in layout) + " }"
    args = ', '.join(literal(values[n]) for n, _ in layout)
    methods = [f"    static Shape make() {{ return new Impl({args}); }}"]
    methods += [f"    static {d} via{i}(Shape s) {{ return s.{n}(); }}"
                for i, (n, d) in enumerate(interface)]
    methods += [f"    static {d} own{i}(Impl s) {{ return s.{n}(); }}"
                for i, (n, d) in enumerate(layout)]
    reader = "class Reader {\n" + "\n".join(methods) + "\n}\n"
    return [shape, impl, reader]


@pytest.mark.parametrize('mode', VM_MODES)
@settings(max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(program=interface_programs())
def test_generated_interface_programs(mode, program):
    interface, layout, values = program
    names = ['Shape', 'Impl', 'Reader']
    sources = program_sources(interface, layout, values)
    if layout[:len(interface)] != interface:
        with pytest.raises(CompilationError) as info:
            compile_to_bytes(names, sources, SchemaRegistry())
        assert info.value.phase == 'type'
        return

    units = compile_to_bytes(names, sources, SchemaRegistry())
    for unit in units:
        assert read_unit(write_unit(unit)) == unit
    classes = ClassRegistry(SchemaRegistry(), mode)
    load_batch(classes, units)

    made = classes.invoke_static('Reader', 'make', [])
    for i, (name, domain) in enumerate(interface):
        got = classes.invoke_static('Reader', f'via{i}', [made])
        assert type(got) is (int if domain == 'int' else str)
        assert got == values[name]
    for i, (name, domain) in enumerate(layout):
        got = classes.invoke_static('Reader', f'own{i}', [made])
        assert type(got) is (int if domain == 'int' else str)
        assert got == values[name]
