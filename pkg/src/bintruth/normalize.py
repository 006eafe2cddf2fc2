"""Normalization pipeline: raw symbols plus debug records to ground truth.

Stage order is fixed: alias dedup, fall-through entry merging, boundary
resolution, padding trim, specialization clustering, debug matching,
noreturn and compiler-inserted annotation, call-edge liveness, byte
classification, completeness check. Every stage communicates problems
through diagnostics; nothing raises past :func:`build_ground_truth`.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from importlib import resources

from . import byteclass, elf
from .byteclass import ByteClassMap
from .dwarf import DebugFunctionRecord
from .model import (
    GT_ALIAS_MERGED,
    GT_INCOMPLETE_EXCLUDED,
    GT_MULTI_ENTRY_MERGED,
    GT_PADDING_TRIMMED,
    GT_SIZE_OVERLAP,
    GT_START_MISMATCH,
    BinaryImage,
    Diagnostic,
    NoBytesError,
    SectionRecord,
    SymbolRecord,
)

FUNCTION_FLAGS = frozenset(
    {
        "multi_entry",
        "merged_alias",
        "compiler_inserted",
        "noreturn",
        "uncalled",
        "specialized",
    }
)

PROVENANCE_KINDS = frozenset({"symtab", "dwarf"})

_BINDING_RANK = {"global": 2, "weak": 1, "local": 0}


def parse_name_list(text: str) -> tuple[str, ...]:
    """One name per line; '#' starts a comment."""
    names = []
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            names.append(line)
    return tuple(names)


def _load_name_list(filename: str) -> tuple[str, ...]:
    text = (
        resources.files("bintruth").joinpath("data").joinpath(filename).read_text()
    )
    return parse_name_list(text)


def default_noreturn_seeds() -> tuple[str, ...]:
    return _load_name_list("noreturn.txt")


def default_scaffold_names() -> tuple[str, ...]:
    return _load_name_list("scaffold.txt")


def padding_alphabet(machine: str) -> tuple[bytes, ...]:
    """Padding units for the machine; empty means no trimming happens."""
    if machine not in ("x86", "x86_64"):
        return ()
    text = (
        resources.files("bintruth")
        .joinpath("data")
        .joinpath("padding-x86.txt")
        .read_text()
    )
    units = []
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            units.append(bytes.fromhex(line))
    return tuple(units)


def parse_call_edges(text: str) -> tuple[tuple[int, int], ...]:
    """Caller/callee address pairs, one per line, '#' starts a comment."""
    edges = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ValueError(f"line {lineno}: expected two addresses")
        edges.append((int(parts[0], 0), int(parts[1], 0)))
    return tuple(edges)


@dataclass(frozen=True, slots=True)
class RunConfig:
    """Knobs that change what the pipeline produces."""

    merge_multi_entry: bool = True
    start_mismatch_tolerance: int = 0
    noreturn_seeds: tuple[str, ...] | None = None  # None loads the defaults
    call_edges: tuple[tuple[int, int], ...] | None = None

    def seeds(self) -> tuple[str, ...]:
        if self.noreturn_seeds is None:
            return default_noreturn_seeds()
        return self.noreturn_seeds


@dataclass(frozen=True, slots=True)
class GroundTruthFunction:
    """One normalized function."""

    canonical_name: str
    entry_points: tuple[int, ...]
    end_exclusive_raw: int
    end_exclusive_trimmed: int
    aliases: tuple[str, ...] = ()
    specialization_group: str | None = None
    flags: frozenset[str] = frozenset()
    provenance: frozenset[str] = frozenset({"symtab"})
    source: tuple[str, int] | None = None

    def __post_init__(self) -> None:
        if not self.entry_points:
            raise ValueError("a function needs at least one entry point")
        if tuple(sorted(self.entry_points)) != self.entry_points:
            raise ValueError("entry points must be sorted")
        bad = self.flags - FUNCTION_FLAGS
        if bad:
            raise ValueError(f"unknown flags {sorted(bad)}")
        if self.provenance - PROVENANCE_KINDS:
            raise ValueError("unknown provenance kind")

    @property
    def start(self) -> int:
        return self.entry_points[0]


@dataclass(frozen=True, slots=True)
class BinarySummary:
    source_path: str
    content_digest: bytes
    word_size: int
    machine: str
    machine_code: int


@dataclass(frozen=True, slots=True)
class GroundTruthDocument:
    binary: BinarySummary
    functions: tuple[GroundTruthFunction, ...]
    byte_classes: ByteClassMap
    diagnostics: tuple[Diagnostic, ...]
    complete: bool


@dataclass(slots=True)
class _Working:
    canonical: str
    entries: list[int]
    size: int
    section: SectionRecord
    aliases: list[str] = field(default_factory=list)
    flags: set[str] = field(default_factory=set)
    provenance: set[str] = field(default_factory=lambda: {"symtab"})
    group: str | None = None
    source: tuple[str, int] | None = None
    noreturn: bool = False
    end_raw: int = 0
    end_trimmed: int = 0
    # (name, start, size) of the last merged entry, for cascade merging
    tail: tuple[str, int, int] = ("", 0, 0)

    @property
    def start(self) -> int:
        return self.entries[0]


def dedupe_aliases(
    symbols: list[SymbolRecord], image: BinaryImage
) -> tuple[list[_Working], list[Diagnostic]]:
    """Collapse same-address symbols into one record with aliases."""
    groups: dict[int, list[SymbolRecord]] = {}
    for sym in symbols:
        groups.setdefault(sym.value, []).append(sym)

    works: list[_Working] = []
    diagnostics: list[Diagnostic] = []
    for value in sorted(groups):
        members = sorted(
            groups[value],
            key=lambda s: (-_BINDING_RANK.get(s.binding, 0), s.name),
        )
        canonical = members[0]
        size = canonical.size
        if size == 0:
            size = max(m.size for m in members)
        section = elf.section_of(image, value)
        assert section is not None  # function_symbols filtered the rest
        aliases = sorted(m.name for m in members[1:])
        work = _Working(
            canonical=canonical.name,
            entries=[value],
            size=size,
            section=section,
            aliases=aliases,
            tail=(canonical.name, value, size),
        )
        if aliases:
            work.flags.add("merged_alias")
            diagnostics.append(
                Diagnostic(
                    "info",
                    GT_ALIAS_MERGED,
                    f"{len(aliases)} alias(es) of {canonical.name!r} at "
                    f"{value:#x} merged: {', '.join(aliases)}",
                    span=(value, size),
                )
            )
        works.append(work)
    return works, diagnostics


def merge_fallthrough_entries(
    works: list[_Working],
) -> tuple[list[_Working], list[Diagnostic]]:
    """Fold ``name.`` continuation symbols into their parent function.

    A continuation must sit exactly at the parent's declared end within
    the same section; chains of continuations cascade left to right.
    """
    merged: list[_Working] = []
    diagnostics: list[Diagnostic] = []
    for work in sorted(works, key=lambda w: w.start):
        if merged:
            head = merged[-1]
            tail_name, tail_start, tail_size = head.tail
            if (
                work.canonical == tail_name + "."
                and tail_size > 0
                and work.start == tail_start + tail_size
                and work.section is head.section
            ):
                head.entries.extend(work.entries)
                head.aliases.extend([work.canonical] + work.aliases)
                if work.size > 0:
                    head.size = (work.start + work.size) - head.start
                else:
                    head.size = 0
                head.flags.add("multi_entry")
                head.flags |= work.flags
                head.tail = (work.canonical, work.start, work.size)
                diagnostics.append(
                    Diagnostic(
                        "info",
                        GT_MULTI_ENTRY_MERGED,
                        f"{work.canonical!r} at {work.start:#x} is a "
                        f"fall-through continuation of {head.canonical!r}",
                        span=(head.start, max(head.size, 0)),
                    )
                )
                continue
        merged.append(work)
    return merged, diagnostics


def resolve_boundaries(works: list[_Working]) -> list[Diagnostic]:
    """Fix each function's raw exclusive end.

    Declared sizes are clamped by the next function start and by the
    containing section; missing sizes borrow the next boundary outright.
    """
    diagnostics: list[Diagnostic] = []
    ordered = sorted(works, key=lambda w: w.start)
    for i, work in enumerate(ordered):
        next_start: int | None = None
        for other in ordered[i + 1 :]:
            if other.section is work.section:
                next_start = other.start
                break
        limit = work.section.end if next_start is None else next_start
        if work.size > 0:
            declared = work.start + work.size
            end = min(declared, limit)
            if end < declared:
                diagnostics.append(
                    Diagnostic(
                        "warning",
                        GT_SIZE_OVERLAP,
                        f"{work.canonical!r} declares bytes up to "
                        f"{declared:#x} but the region ends at {end:#x}; clamped",
                        span=(work.start, end - work.start),
                    )
                )
        else:
            end = limit
        work.end_raw = max(end, work.start + 1)
        work.end_trimmed = work.end_raw
    return diagnostics


def trim_padding(
    works: list[_Working],
    image: BinaryImage,
    alphabet: tuple[bytes, ...],
) -> list[Diagnostic]:
    """Shave trailing padding units off each raw boundary.

    The trimmed end never cuts an entry point and always keeps at least
    one byte. Functions whose bytes are not in the file (nobits regions)
    make the ground truth incomplete rather than guessing.
    """
    diagnostics: list[Diagnostic] = []
    for work in works:
        if not alphabet:
            continue
        length = work.end_raw - work.start
        try:
            region = image.bytes_at(work.start, length)
        except NoBytesError:
            diagnostics.append(
                Diagnostic(
                    "error",
                    GT_INCOMPLETE_EXCLUDED,
                    f"bytes of {work.canonical!r} at {work.start:#x} are not "
                    "in the file; padding cannot be inspected",
                    span=(work.start, length),
                )
            )
            continue
        n = len(region)
        ok = [False] * (n + 1)
        ok[n] = True
        for i in range(n - 1, -1, -1):
            for unit in alphabet:
                j = i + len(unit)
                if j <= n and ok[j] and region.startswith(unit, i):
                    ok[i] = True
                    break
        lowest = next(i for i in range(n + 1) if ok[i])
        # Never trim an entry point away, and keep at least one byte.
        floor = max(max(e - work.start for e in work.entries) + 1, 1)
        trimmed = work.start + min(max(lowest, floor), n)
        if trimmed < work.end_raw:
            work.end_trimmed = trimmed
            diagnostics.append(
                Diagnostic(
                    "info",
                    GT_PADDING_TRIMMED,
                    f"{work.end_raw - trimmed} padding byte(s) trimmed off "
                    f"{work.canonical!r}",
                    span=(trimmed, work.end_raw - trimmed),
                )
            )
    return diagnostics


def cluster_specializations(works: list[_Working]) -> None:
    """Group ``base..N`` clones with each other and with their base."""
    bases: set[str] = set()
    for work in works:
        base, sep, suffix = work.canonical.rpartition("..")
        if sep and suffix.isdigit():
            work.group = base
            work.flags.add("specialized")
            bases.add(base)
    for work in works:
        if work.canonical in bases:
            work.group = work.canonical


def match_debug_records(
    works: list[_Working],
    records: list[DebugFunctionRecord],
    tolerance: int,
) -> list[Diagnostic]:
    """Attach out-of-line debug records to their symbol-table functions."""
    diagnostics: list[Diagnostic] = []
    by_entry: dict[int, _Working] = {}
    for work in works:
        for entry in work.entries:
            by_entry[entry] = work
    names: dict[str, _Working] = {}
    for work in works:
        names[work.canonical] = work
        for alias in work.aliases:
            names.setdefault(alias, work)

    for record in records:
        if record.is_inlined_copy:
            continue
        target = by_entry.get(record.low_pc)
        if target is None and tolerance > 0:
            for delta in range(1, tolerance + 1):
                target = by_entry.get(record.low_pc - delta) or by_entry.get(
                    record.low_pc + delta
                )
                if target is not None:
                    break
        if target is not None:
            target.provenance.add("dwarf")
            target.noreturn = target.noreturn or record.noreturn
            if target.source is None and record.decl_file:
                target.source = (record.decl_file, record.decl_line)
            continue
        named = names.get(record.name)
        if named is not None:
            detail = (
                f"debug info puts {record.name!r} at {record.low_pc:#x}, "
                f"symbols at {named.start:#x}"
            )
        else:
            detail = (
                f"debug info describes {record.name or '<anonymous>'!r} at "
                f"{record.low_pc:#x} but no symbol is there"
            )
        diagnostics.append(
            Diagnostic("error", GT_START_MISMATCH, detail, span=(record.low_pc, 0))
        )
        diagnostics.append(
            Diagnostic(
                "error",
                GT_INCOMPLETE_EXCLUDED,
                f"cannot reconcile debug info for "
                f"{record.name or '<anonymous>'!r}; truth is incomplete",
                span=(record.low_pc, 0),
            )
        )
    return diagnostics


def annotate_noreturn(works: list[_Working], seeds: tuple[str, ...]) -> None:
    seed_set = set(seeds)
    for work in works:
        if work.noreturn or work.canonical in seed_set or seed_set & set(work.aliases):
            work.flags.add("noreturn")


def tag_compiler_inserted(works: list[_Working], scaffold: tuple[str, ...]) -> None:
    """Flag functions no source line accounts for.

    Anything the debug info never mentioned counts, as does anything with
    a runtime-scaffold name; in a binary with no debug info at all that
    flags every function, which is exactly what the flag claims.
    """
    scaffold_set = set(scaffold)
    for work in works:
        if "dwarf" not in work.provenance or work.canonical in scaffold_set:
            work.flags.add("compiler_inserted")


def mark_uncalled(works: list[_Working], edges: tuple[tuple[int, int], ...]) -> None:
    targets = {callee for _caller, callee in edges}
    for work in works:
        if not targets & set(work.entries):
            work.flags.add("uncalled")


def _freeze(works: list[_Working]) -> tuple[GroundTruthFunction, ...]:
    out = []
    for work in sorted(works, key=lambda w: w.start):
        out.append(
            GroundTruthFunction(
                canonical_name=work.canonical,
                entry_points=tuple(sorted(work.entries)),
                end_exclusive_raw=work.end_raw,
                end_exclusive_trimmed=work.end_trimmed,
                aliases=tuple(sorted(work.aliases)),
                specialization_group=work.group,
                flags=frozenset(work.flags),
                provenance=frozenset(work.provenance),
                source=work.source,
            )
        )
    return tuple(out)


def build_ground_truth(
    image: BinaryImage,
    debug_records: list[DebugFunctionRecord],
    config: RunConfig | None = None,
    extra_diagnostics: tuple[Diagnostic, ...] = (),
) -> GroundTruthDocument:
    """Run the whole pipeline over one parsed binary."""
    config = config or RunConfig()
    diagnostics: list[Diagnostic] = list(extra_diagnostics)
    diagnostics.extend(image.parse_diagnostics)

    symbols, diags = elf.function_symbols(image)
    diagnostics.extend(diags)

    works, diags = dedupe_aliases(symbols, image)
    diagnostics.extend(diags)

    if config.merge_multi_entry:
        works, diags = merge_fallthrough_entries(works)
        diagnostics.extend(diags)

    diagnostics.extend(resolve_boundaries(works))

    alphabet = padding_alphabet(image.machine)
    diagnostics.extend(trim_padding(works, image, alphabet))

    cluster_specializations(works)
    diagnostics.extend(
        match_debug_records(works, debug_records, config.start_mismatch_tolerance)
    )
    annotate_noreturn(works, config.seeds())
    tag_compiler_inserted(works, default_scaffold_names())
    if config.call_edges is not None:
        mark_uncalled(works, config.call_edges)

    exec_bytes = sum(
        s.size for s in image.sections if s.allocated and s.executable
    )
    if not works and exec_bytes > 0:
        diagnostics.append(
            Diagnostic(
                "error",
                GT_INCOMPLETE_EXCLUDED,
                f"{exec_bytes} executable byte(s) but no function symbols; "
                "the binary looks stripped",
            )
        )

    spans = [
        (w.start, w.end_trimmed, w.end_raw)
        for w in works
        if w.section.executable
    ]
    byte_map = byteclass.classify_bytes(image, spans, alphabet)

    complete = not any(
        d.severity == "error" and d.code == GT_INCOMPLETE_EXCLUDED
        for d in diagnostics
    )
    return GroundTruthDocument(
        binary=BinarySummary(
            source_path=image.source_path,
            content_digest=image.content_digest,
            word_size=image.word_size,
            machine=image.machine,
            machine_code=image.machine_code,
        ),
        functions=_freeze(works),
        byte_classes=byte_map,
        diagnostics=tuple(diagnostics),
        complete=complete,
    )
