import struct

import pytest
from hypothesis import given, strategies as st

from bintruth import dwarf, elf, forge
from bintruth.dwarf import (
    DebugFunctionRecord,
    extract_debug_functions,
    parameter_summary,
    resolve_high_pc,
    sleb_decode,
    sleb_encode,
    uleb_decode,
    uleb_encode,
)
from bintruth.forge import BinarySpec, DwarfFuncSpec, FunctionSpec, SectionSpec, emit
from bintruth.model import (
    GT_DEBUG_OUTSIDE_EXEC,
    GT_DISCONTIGUOUS_RANGE,
    GT_MALFORMED_DEBUG_DATA,
    GT_NO_DEBUG_INFO,
    GT_SUBPROGRAM_NO_ADDRESS,
    BinaryImage,
    SectionRecord,
    digest_binary,
)

# --- LEB128 ---------------------------------------------------------------


@pytest.mark.parametrize(
    ("value", "encoded"),
    [
        (0, b"\x00"),
        (127, b"\x7f"),
        (128, b"\x80\x01"),
        (624485, b"\xe5\x8e\x26"),
    ],
)
def test_uleb_known_vectors(value, encoded):
    assert uleb_encode(value) == encoded
    assert uleb_decode(encoded, 0) == (value, len(encoded))


@pytest.mark.parametrize(
    ("value", "encoded"),
    [
        (0, b"\x00"),
        (2, b"\x02"),
        (-2, b"\x7e"),
        (63, b"\x3f"),
        (-64, b"\x40"),
        (64, b"\xc0\x00"),
        (-65, b"\xbf\x7f"),
        (-123456, b"\xc0\xbb\x78"),
    ],
)
def test_sleb_known_vectors(value, encoded):
    assert sleb_encode(value) == encoded
    assert sleb_decode(encoded, 0) == (value, len(encoded))


@given(st.integers(min_value=0, max_value=2**64 - 1))
def test_uleb_round_trip(value):
    blob = uleb_encode(value)
    assert uleb_decode(blob + b"\xaa", 0) == (value, len(blob))


@given(st.integers(min_value=-(2**63), max_value=2**63 - 1))
def test_sleb_round_trip(value):
    blob = sleb_encode(value)
    assert sleb_decode(blob + b"\xaa", 0) == (value, len(blob))


def test_uleb_decode_rejects_truncation():
    with pytest.raises(dwarf.MalformedDebugDataError):
        uleb_decode(b"\x80", 0)


# --- high-pc resolution ----------------------------------------------------


def test_high_pc_address_class_is_verbatim():
    assert resolve_high_pc(0x1000, "address", 0x1040) == 0x1040


def test_high_pc_constant_class_is_an_offset():
    assert resolve_high_pc(0x1000, "constant", 0x40) == 0x1040


def test_high_pc_may_end_exactly_at_the_address_ceiling():
    assert resolve_high_pc(0xFFFFFFF0, "constant", 0x10, 32) == 1 << 32


def test_high_pc_past_the_ceiling_overflows():
    with pytest.raises(OverflowError):
        resolve_high_pc(0xFFFFFFF0, "constant", 0x11, 32)
    with pytest.raises(OverflowError):
        resolve_high_pc((1 << 64) - 8, "constant", 9)


# --- encodings that must agree ---------------------------------------------


def test_address_and_constant_high_pc_yield_identical_records(preset_images):
    records, diags = extract_debug_functions(preset_images["highpc-twins"])
    assert len(records) == 2
    assert len(set(records)) == 1
    rec = records[0]
    assert rec.name == "twin_view"
    assert rec.low_pc == 0x401000
    assert rec.end_exclusive == 0x401000 + 24
    assert not diags


def _single_fn_spec(dwarf_spec: DwarfFuncSpec, version: int, word_size=64):
    text = SectionSpec(".text", 0x401000, executable=True)
    fn = FunctionSpec("solo", 0, forge._fixed_body(16), dwarf=(dwarf_spec,))
    return BinarySpec(
        sections=(text,),
        functions=(fn,),
        word_size=word_size,
        dwarf_versions=(version,),
        cu_names=("solo.c",),
    )


@pytest.mark.parametrize("version", [2, 3, 4, 5])
def test_all_supported_versions_parse(version):
    spec = _single_fn_spec(DwarfFuncSpec(decl_line=7), version)
    image = elf.parse_image(emit(spec))
    records, diags = extract_debug_functions(image)
    assert [d for d in diags if d.severity == "error"] == []
    (rec,) = records
    assert rec.name == "solo"
    assert rec.low_pc == 0x401000
    assert rec.end_exclusive == 0x401010
    assert rec.decl_file == "solo.c"
    assert rec.decl_line == 7


@pytest.mark.parametrize("version", [2, 3])
def test_constant_high_pc_needs_version_four(version):
    spec = _single_fn_spec(DwarfFuncSpec(highpc_form="data4"), version)
    with pytest.raises(forge.InvalidSpecError, match="version 4"):
        emit(spec)


@pytest.mark.parametrize("version", [3, 4, 5])
def test_range_lists_collapse_to_their_hull(version):
    ranges = ((0x401000, 0x401008), (0x40100C, 0x401010))
    spec = _single_fn_spec(DwarfFuncSpec(ranges=ranges), version)
    image = elf.parse_image(emit(spec))
    records, diags = extract_debug_functions(image)
    (rec,) = records
    assert rec.low_pc == 0x401000
    assert rec.end_exclusive == 0x401010
    hull = [d for d in diags if d.code == GT_DISCONTIGUOUS_RANGE]
    assert len(hull) == 1
    assert hull[0].severity == "warning"
    assert hull[0].span == (0x401000, 0x10)


@pytest.mark.parametrize("via", ["specification", "abstract_origin"])
def test_name_resolves_through_reference_chains(via):
    spec = _single_fn_spec(DwarfFuncSpec(name_via=via), 4)
    image = elf.parse_image(emit(spec))
    records, diags = extract_debug_functions(image)
    # The declaration or abstract-instance DIE itself yields no record.
    assert len(records) == 1
    assert records[0].name == "solo"
    assert not any(d.code == GT_SUBPROGRAM_NO_ADDRESS for d in diags)


def test_parameters_and_their_locations_are_counted():
    params = (("argc", True), ("argv", True), ("unused", False))
    spec = _single_fn_spec(DwarfFuncSpec(params=params), 4)
    image = elf.parse_image(emit(spec))
    records, _diags = extract_debug_functions(image)
    (rec,) = records
    assert [p.name for p in rec.parameters] == ["argc", "argv", "unused"]
    assert parameter_summary(rec) == (3, 2)


def test_noreturn_attribute_is_read():
    spec = _single_fn_spec(DwarfFuncSpec(noreturn=True), 4)
    image = elf.parse_image(emit(spec))
    records, _diags = extract_debug_functions(image)
    assert records[0].noreturn


def test_inlined_copies_are_flagged_not_confused():
    text = SectionSpec(".text", 0x401000, executable=True)
    host = FunctionSpec("host", 0, forge._fixed_body(32), dwarf=(DwarfFuncSpec(),))
    tiny = FunctionSpec("tiny", 32, forge._fixed_body(8), dwarf=(DwarfFuncSpec(),))
    spec = BinarySpec(
        sections=(text,),
        functions=(host, tiny),
        inline_sites=(
            forge.InlineSiteSpec(host="host", origin="tiny", low=0x401008, high=0x401010),
        ),
    )
    image = elf.parse_image(emit(spec))
    records, _diags = extract_debug_functions(image)
    inlined = [r for r in records if r.is_inlined_copy]
    concrete = [r for r in records if not r.is_inlined_copy]
    assert len(inlined) == 1
    assert inlined[0].name == "tiny"  # resolved through the origin link
    assert inlined[0].low_pc == 0x401008
    assert {r.name for r in concrete} == {"host", "tiny"}


def test_missing_debug_info_is_one_warning(preset_images):
    records, diags = extract_debug_functions(preset_images["scaffold"])
    assert records == []
    assert [d.code for d in diags] == [GT_NO_DEBUG_INFO]
    assert diags[0].severity == "warning"


def test_debug_record_outside_executable_sections_is_flagged():
    spec = _single_fn_spec(DwarfFuncSpec(), 4)
    data = emit(spec)
    image = elf.parse_image(data)
    # Re-point .text at a non-executable copy of itself.
    patched = tuple(
        SectionRecord(s.name, s.vaddr, s.size, False, s.writable, s.allocated, s.file_offset)
        if s.name == ".text"
        else s
        for s in image.sections
    )
    import dataclasses

    moved = dataclasses.replace(image, sections=patched)
    records, diags = extract_debug_functions(moved)
    assert len(records) == 1  # still recorded, the flag is advisory
    assert any(d.code == GT_DEBUG_OUTSIDE_EXEC for d in diags)


# --- damage and duplication -------------------------------------------------


def _two_unit_image() -> BinaryImage:
    text = SectionSpec(".text", 0x401000, executable=True)
    first = FunctionSpec("first", 0, forge._fixed_body(16), dwarf=(DwarfFuncSpec(unit=0),))
    second = FunctionSpec(
        "second", 16, forge._fixed_body(16), dwarf=(DwarfFuncSpec(unit=1),)
    )
    spec = BinarySpec(
        sections=(text,),
        functions=(first, second),
        dwarf_versions=(4, 4),
        cu_names=("a.c", "b.c"),
    )
    return elf.parse_image(emit(spec))


def test_damage_in_a_later_unit_keeps_earlier_records():
    image = _two_unit_image()
    info = next(s for s in image.sections if s.name == ".debug_info")
    raw = bytearray(image.raw)
    first_len = struct.unpack_from("<I", raw, info.file_offset)[0]
    second_at = info.file_offset + 4 + first_len
    struct.pack_into("<H", raw, second_at + 4, 0xFF)  # absurd version
    damaged = elf.parse_image(bytes(raw))
    records, diags = extract_debug_functions(damaged)
    assert [r.name for r in records] == ["first"]
    errors = [d for d in diags if d.code == GT_MALFORMED_DEBUG_DATA]
    assert len(errors) == 1
    assert errors[0].severity == "error"


def _synthetic_image(sections_and_blobs: list[tuple[str, bytes]]) -> BinaryImage:
    """An image whose raw bytes are exactly the given named blobs."""
    text_size = 0x40
    raw = bytearray(b"\x90" * text_size)
    sections = [
        SectionRecord("", 0, 0, False, False, False, None),
        SectionRecord(".text", 0x401000, text_size, True, False, True, 0),
    ]
    for name, blob in sections_and_blobs:
        sections.append(
            SectionRecord(name, 0, len(blob), False, False, False, len(raw))
        )
        raw += blob
    return BinaryImage(
        source_path="synthetic",
        content_digest=digest_binary(bytes(raw)),
        word_size=64,
        endianness="little",
        machine="x86_64",
        machine_code=62,
        sections=tuple(sections),
        symbols=(),
        raw=bytes(raw),
    )


def _solo_debug_blobs() -> tuple[bytes, bytes]:
    spec = _single_fn_spec(DwarfFuncSpec(), 4)
    image = elf.parse_image(emit(spec))
    info = next(s for s in image.sections if s.name == ".debug_info")
    abbrev = next(s for s in image.sections if s.name == ".debug_abbrev")
    return (
        image.raw[info.file_offset : info.file_offset + info.size],
        image.raw[abbrev.file_offset : abbrev.file_offset + abbrev.size],
    )


def test_zero_padding_after_the_last_unit_is_tolerated():
    info, abbrev = _solo_debug_blobs()
    image = _synthetic_image(
        [(".debug_info", info + b"\x00" * 7), (".debug_abbrev", abbrev)]
    )
    records, diags = extract_debug_functions(image)
    assert [r.name for r in records] == ["solo"]
    assert [d for d in diags if d.severity == "error"] == []


def test_duplicated_debug_sections_pair_by_position():
    """Two .debug_info sections each read against their own .debug_abbrev."""
    info, abbrev = _solo_debug_blobs()
    once = _synthetic_image([(".debug_info", info), (".debug_abbrev", abbrev)])
    twice = _synthetic_image(
        [
            (".debug_info", info),
            (".debug_abbrev", abbrev),
            (".debug_info", info),
            (".debug_abbrev", abbrev),
        ]
    )
    records_once, _ = extract_debug_functions(once)
    records_twice, _ = extract_debug_functions(twice)
    assert len(records_twice) == 2 * len(records_once)
    assert set(records_twice) == set(records_once)


def test_records_hash_by_content():
    a = DebugFunctionRecord("f", 0x10, 0x20, "a.c", 3, False, False, ())
    b = DebugFunctionRecord("f", 0x10, 0x20, "a.c", 3, False, False, ())
    assert a == b
    assert len({a, b}) == 1
