"""
Compiled units and their byte format
====================================
A CompiledUnit is one class: its name, optional interface, a fingerprint of
its schema, a constant pool and a method table. Units serialize to the RJBC
format:

    "RJBC"  u16 version
    u16 len + UTF-8 className
    u8 hasInterface [u16 len + UTF-8 interfaceName]
    u64 schemaFingerprint
    u16 poolCount, per entry: u8 tag, then
        INT      i64
        TEXT     u32 len + UTF-8
        CLASSREF u16 len + UTF-8
    u16 methodCount, per method:
        u16 len + UTF-8 name, u16 len + UTF-8 signature,
        u16 maxStack, u16 maxLocals, u32 codeLen, code
    u32 CRC-32 of everything before it

All integers are big-endian.
"""

import struct
import zlib
from dataclasses import dataclass
from enum import IntEnum
from typing import Optional

from src.errors import ClassFormatError
from src.utils import fingerprint64

MAGIC = b'RJBC'
FORMAT_VERSION = 1

TAG_INT = 1
TAG_TEXT = 2
TAG_CLASSREF = 3


class Op(IntEnum):
    NOP = 0x00
    CONST = 0x01          # u16 pool index (INT or TEXT)
    TRUE = 0x02
    FALSE = 0x03
    LOAD = 0x04           # u16 slot
    STORE = 0x05          # u16 slot
    POP = 0x06
    DUP = 0x07
    ACCESS = 0x10         # u16 classref, u16 attribute position
    EQ = 0x11
    LT = 0x12
    CONCAT = 0x13
    CAST = 0x14           # u16 classref; any -> C[]
    NEW = 0x15            # u16 classref, u8 argc
    NEWARRAY = 0x16       # u16 classref
    ARRAYLEN = 0x17
    ALOAD = 0x18
    ASTORE = 0x19
    NEWSEQ = 0x1A         # u16 classref
    SEQADD = 0x1B
    SEQSIZE = 0x1C
    SEQGET = 0x1D
    INVOKE = 0x20         # u16 TEXT method name, u8 argc
    JUMP = 0x30           # u32 target offset
    JUMP_IF_FALSE = 0x31  # u32 target offset
    INC = 0x32            # u16 slot
    RETURN = 0x40
    RETURN_VOID = 0x41
    EMIT = 0x42


# Operand layout per opcode, as struct format characters
OPERANDS = {
    Op.CONST: 'H', Op.LOAD: 'H', Op.STORE: 'H', Op.ACCESS: 'HH', Op.CAST: 'H',
    Op.NEW: 'HB', Op.NEWARRAY: 'H', Op.NEWSEQ: 'H', Op.INVOKE: 'HB',
    Op.JUMP: 'I', Op.JUMP_IF_FALSE: 'I', Op.INC: 'H',
}

BRANCHES = (Op.JUMP, Op.JUMP_IF_FALSE)
TERMINATORS = (Op.JUMP, Op.RETURN, Op.RETURN_VOID)


def instruction_size(op):
    return 1 + struct.calcsize('>' + OPERANDS.get(op, ''))


@dataclass(frozen=True)
class Instruction:
    offset: int
    op: Op
    args: tuple

    @property
    def size(self):
        return instruction_size(self.op)


def decode_code(code):
    """
    Split a method body into instructions.

    Raises:
        ClassFormatError on unknown opcodes or truncated operands
    """
    out = []
    pos = 0
    while pos < len(code):
        try:
            op = Op(code[pos])
        except ValueError:
            raise ClassFormatError(f"unknown opcode 0x{code[pos]:02x} at offset {pos}")
        fmt = '>' + OPERANDS.get(op, '')
        size = 1 + struct.calcsize(fmt)
        if pos + size > len(code):
            raise ClassFormatError(f"truncated {op.name} at offset {pos}")
        args = struct.unpack_from(fmt, code, pos + 1) if len(fmt) > 1 else ()
        out.append(Instruction(pos, op, tuple(args)))
        pos += size
    return out


def encode_instruction(op, *args):
    return bytes([op]) + struct.pack('>' + OPERANDS.get(op, ''), *args)


@dataclass(frozen=True)
class Constant:
    tag: int
    value: object


@dataclass(frozen=True)
class MethodInfo:
    name: str
    signature: str
    max_stack: int
    max_locals: int
    code: bytes


@dataclass(frozen=True)
class CompiledUnit:
    class_name: str
    interface_name: Optional[str]
    schema_fingerprint: int
    constants: tuple
    methods: tuple

    def method(self, name):
        for m in self.methods:
            if m.name == name:
                return m
        return None


# ---------- serialization ----------

def _pack_str(text, width='H'):
    data = text.encode('utf-8')
    limit = 0xFFFF if width == 'H' else 0xFFFFFFFF
    if len(data) > limit:
        raise ClassFormatError(f"string of {len(data)} bytes does not fit a {width} length")
    return struct.pack('>' + width, len(data)) + data


def write_unit(unit):
    """Serialize a CompiledUnit to RJBC bytes."""
    parts = [MAGIC, struct.pack('>H', FORMAT_VERSION), _pack_str(unit.class_name)]
    if unit.interface_name is None:
        parts.append(b'\x00')
    else:
        parts.append(b'\x01' + _pack_str(unit.interface_name))
    parts.append(struct.pack('>Q', unit.schema_fingerprint))
    parts.append(struct.pack('>H', len(unit.constants)))
    for const in unit.constants:
        parts.append(bytes([const.tag]))
        if const.tag == TAG_INT:
            parts.append(struct.pack('>q', const.value))
        elif const.tag == TAG_TEXT:
            parts.append(_pack_str(const.value, 'I'))
        elif const.tag == TAG_CLASSREF:
            parts.append(_pack_str(const.value))
        else:
            raise ClassFormatError(f"unknown constant tag {const.tag}")
    parts.append(struct.pack('>H', len(unit.methods)))
    for method in unit.methods:
        parts.append(_pack_str(method.name))
        parts.append(_pack_str(method.signature))
        parts.append(struct.pack('>HHI', method.max_stack, method.max_locals, len(method.code)))
        parts.append(bytes(method.code))
    body = b''.join(parts)
    return body + struct.pack('>I', zlib.crc32(body) & 0xFFFFFFFF)


class _Reader:
    def __init__(self, data):
        self.data = data
        self.pos = 0

    def take(self, count):
        if count < 0 or self.pos + count > len(self.data):
            raise ClassFormatError(f"truncated unit at byte {self.pos}")
        chunk = self.data[self.pos:self.pos + count]
        self.pos += count
        return chunk

    def unpack(self, fmt):
        fmt = '>' + fmt
        values = struct.unpack(fmt, self.take(struct.calcsize(fmt)))
        return values[0] if len(values) == 1 else values

    def string(self, width='H'):
        raw = self.take(self.unpack(width))
        try:
            return raw.decode('utf-8')
        except UnicodeDecodeError:
            raise ClassFormatError(f"invalid UTF-8 before byte {self.pos}")


def read_unit(data):
    """
    Parse RJBC bytes back into a CompiledUnit.

    Raises:
        ClassFormatError on bad magic, version, checksum, truncation or
        trailing bytes
    """
    data = bytes(data)
    if len(data) < len(MAGIC) + 6:
        raise ClassFormatError("unit too short")
    if data[:4] != MAGIC:
        raise ClassFormatError("bad magic")
    body, (crc,) = data[:-4], struct.unpack('>I', data[-4:])
    if zlib.crc32(body) & 0xFFFFFFFF != crc:
        raise ClassFormatError("checksum mismatch")

    reader = _Reader(body)
    reader.take(4)
    version = reader.unpack('H')
    if version != FORMAT_VERSION:
        raise ClassFormatError(f"unsupported format version {version}")
    class_name = reader.string()
    flag = reader.unpack('B')
    if flag not in (0, 1):
        raise ClassFormatError(f"bad interface flag {flag}")
    interface = reader.string() if flag else None
    fingerprint = reader.unpack('Q')

    constants = []
    for _ in range(reader.unpack('H')):
        tag = reader.unpack('B')
        if tag == TAG_INT:
            constants.append(Constant(tag, reader.unpack('q')))
        elif tag == TAG_TEXT:
            constants.append(Constant(tag, reader.string('I')))
        elif tag == TAG_CLASSREF:
            constants.append(Constant(tag, reader.string()))
        else:
            raise ClassFormatError(f"unknown constant tag {tag}")

    methods = []
    for _ in range(reader.unpack('H')):
        name = reader.string()
        signature = reader.string()
        max_stack, max_locals, code_len = reader.unpack('HHI')
        methods.append(MethodInfo(name, signature, max_stack, max_locals, reader.take(code_len)))

    if reader.pos != len(body):
        raise ClassFormatError(f"{len(body) - reader.pos} trailing bytes")
    return CompiledUnit(class_name, interface, fingerprint, tuple(constants), tuple(methods))


def unit_fingerprint(schema):
    """Fingerprint stored in a unit: canonical schema plus interface."""
    return fingerprint64(schema.canonical_form() + '|' + (schema.implements_interface or '-'))
