import hashlib

import pytest

from bintruth.model import (
    DIAGNOSTIC_CODES,
    GT_MISSING_SIZE,
    BinaryImage,
    Diagnostic,
    NoBytesError,
    SectionRecord,
    SymbolRecord,
    digest_binary,
    machine_label,
)


def test_diagnostic_codes_are_a_closed_set():
    assert len(DIAGNOSTIC_CODES) == 15
    assert all(code.startswith("GT_") for code in DIAGNOSTIC_CODES)


def test_diagnostic_rejects_unknown_severity():
    with pytest.raises(ValueError, match="severity"):
        Diagnostic("fatal", GT_MISSING_SIZE, "boom")


def test_diagnostic_rejects_unknown_code():
    with pytest.raises(ValueError, match="diagnostic code"):
        Diagnostic("info", "GT_NOT_A_CODE", "boom")


def test_diagnostic_span_is_optional():
    d = Diagnostic("warning", GT_MISSING_SIZE, "no size")
    assert d.span is None
    d2 = Diagnostic("warning", GT_MISSING_SIZE, "no size", span=(0x100, 4))
    assert d2.span == (0x100, 4)


def test_section_contains_and_end():
    sec = SectionRecord(".text", 0x1000, 0x20, True, False, True, 64)
    assert sec.contains(0x1000)
    assert sec.contains(0x101F)
    assert not sec.contains(0x1020)
    assert not sec.contains(0xFFF)
    assert sec.end == 0x1020


def test_symbol_record_validates_kind_and_binding():
    with pytest.raises(ValueError, match="kind"):
        SymbolRecord("f", 0, 1, "method", "local")
    with pytest.raises(ValueError, match="binding"):
        SymbolRecord("f", 0, 1, "function", "extern")


@pytest.mark.parametrize(
    ("machine", "code", "label"),
    [("x86", 3, "x86"), ("x86_64", 62, "x86_64"), ("other", 40, "other(40)")],
)
def test_machine_label(machine, code, label):
    assert machine_label(machine, code) == label


def _image(sections, raw):
    return BinaryImage(
        source_path="mem",
        content_digest=digest_binary(raw),
        word_size=64,
        endianness="little",
        machine="x86_64",
        machine_code=62,
        sections=sections,
        symbols=(),
        raw=raw,
    )


def test_bytes_at_reads_file_backed_content():
    raw = bytes(range(64))
    sec = SectionRecord(".text", 0x1000, 16, True, False, True, file_offset=8)
    img = _image((sec,), raw)
    assert img.bytes_at(0x1000, 4) == bytes([8, 9, 10, 11])
    assert img.bytes_at(0x100C, 4) == bytes([20, 21, 22, 23])


def test_bytes_at_rejects_unmapped_and_straddling_ranges():
    raw = bytes(64)
    a = SectionRecord(".a", 0x1000, 16, True, False, True, 0)
    b = SectionRecord(".b", 0x1010, 16, True, False, True, 16)
    img = _image((a, b), raw)
    with pytest.raises(NoBytesError):
        img.bytes_at(0x0, 1)
    # Contiguous sections still do not satisfy a single-section read.
    with pytest.raises(NoBytesError):
        img.bytes_at(0x100C, 8)


def test_bytes_at_rejects_nobits_and_negative_length():
    bss = SectionRecord(".bss", 0x2000, 32, False, True, True, file_offset=None)
    img = _image((bss,), b"")
    with pytest.raises(NoBytesError, match="no file-backed"):
        img.bytes_at(0x2000, 4)
    with pytest.raises(NoBytesError, match="negative"):
        img.bytes_at(0x2000, -1)


def test_digest_binary_is_sha256():
    data = b"some binary"
    assert digest_binary(data) == hashlib.sha256(data).digest()
    assert len(digest_binary(b"")) == 32
