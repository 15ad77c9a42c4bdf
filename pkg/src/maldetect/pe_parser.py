"""Hardened parser for Windows Portable Executable images.

Reads the DOS, COFF and optional headers, the data directories, the section
table and the import, export, resource, debug, delay-import and TLS tables.
Every read is bounds-checked against the input; every count taken from the
file is validated before it drives a loop.

Documentation:
* https://learn.microsoft.com/en-us/windows/win32/debug/pe-format
"""
from __future__ import annotations

import struct
from dataclasses import dataclass, field

from .errors import Malformed, NotPeFile, Unsupported

DOS_MAGIC = 0x5A4D
PE_SIGNATURE = b"PE\0\0"
PE32_MAGIC = 0x10B
PE32_PLUS_MAGIC = 0x20B

MAX_IMPORT_DESCRIPTORS = 4096
MAX_NAMES_PER_DLL = 65535
MAX_TOTAL_IMPORTS = 1 << 18
MAX_DLL_NAME = 256
MAX_API_NAME = 4096

IMAGE_SCN_CNT_CODE = 0x00000020
IMAGE_SCN_CNT_INITIALIZED_DATA = 0x00000040
IMAGE_SCN_MEM_EXECUTE = 0x20000000
IMAGE_SCN_MEM_READ = 0x40000000
IMAGE_SCN_MEM_WRITE = 0x80000000

# (name, struct code) in on-disk order
DOS_FIELDS = (
    [(n, "H") for n in (
        "e_magic", "e_cblp", "e_cp", "e_crlc", "e_cparhdr", "e_minalloc",
        "e_maxalloc", "e_ss", "e_sp", "e_csum", "e_ip", "e_cs", "e_lfarlc",
        "e_ovno")]
    + [(f"e_res_{i}", "H") for i in range(4)]
    + [("e_oemid", "H"), ("e_oeminfo", "H")]
    + [(f"e_res2_{i}", "H") for i in range(10)]
    + [("e_lfanew", "I")]
)

COFF_FIELDS = [
    ("Machine", "H"),
    ("NumberOfSections", "H"),
    ("TimeDateStamp", "I"),
    ("PointerToSymbolTable", "I"),
    ("NumberOfSymbols", "I"),
    ("SizeOfOptionalHeader", "H"),
    ("Characteristics", "H"),
]


def _optional_fields(plus: bool):
    wide = "Q" if plus else "I"
    fields = [
        ("Magic", "H"),
        ("MajorLinkerVersion", "B"),
        ("MinorLinkerVersion", "B"),
        ("SizeOfCode", "I"),
        ("SizeOfInitializedData", "I"),
        ("SizeOfUninitializedData", "I"),
        ("AddressOfEntryPoint", "I"),
        ("BaseOfCode", "I"),
    ]
    if not plus:
        fields.append(("BaseOfData", "I"))
    fields += [
        ("ImageBase", wide),
        ("SectionAlignment", "I"),
        ("FileAlignment", "I"),
        ("MajorOperatingSystemVersion", "H"),
        ("MinorOperatingSystemVersion", "H"),
        ("MajorImageVersion", "H"),
        ("MinorImageVersion", "H"),
        ("MajorSubsystemVersion", "H"),
        ("MinorSubsystemVersion", "H"),
        ("Win32VersionValue", "I"),
        ("SizeOfImage", "I"),
        ("SizeOfHeaders", "I"),
        ("CheckSum", "I"),
        ("Subsystem", "H"),
        ("DllCharacteristics", "H"),
        ("SizeOfStackReserve", wide),
        ("SizeOfStackCommit", wide),
        ("SizeOfHeapReserve", wide),
        ("SizeOfHeapCommit", wide),
        ("LoaderFlags", "I"),
        ("NumberOfRvaAndSizes", "I"),
    ]
    return fields


OPTIONAL32_FIELDS = _optional_fields(plus=False)
OPTIONAL64_FIELDS = _optional_fields(plus=True)
# PE32+ has no BaseOfData; it is reported as 0 so both variants share a layout
OPTIONAL_FIELD_NAMES = tuple(n for n, _ in OPTIONAL32_FIELDS)

DATA_DIRECTORY_NAMES = (
    "ExportTable", "ImportTable", "ResourceTable", "ExceptionTable",
    "CertificateTable", "BaseRelocationTable", "Debug", "Architecture",
    "GlobalPtr", "TLSTable", "LoadConfigTable", "BoundImport", "IAT",
    "DelayImportDescriptor", "CLRRuntimeHeader", "Reserved",
)
DIR_EXPORT, DIR_IMPORT, DIR_RESOURCE = 0, 1, 2
DIR_DEBUG, DIR_TLS, DIR_BOUND_IMPORT, DIR_IAT, DIR_DELAY_IMPORT = 6, 9, 11, 12, 13

SECTION_FORMAT = "<8sIIIIIIHHI"
IMPORT_DESCRIPTOR_FIELDS = [
    ("OriginalFirstThunk", "I"), ("TimeDateStamp", "I"),
    ("ForwarderChain", "I"), ("Name", "I"), ("FirstThunk", "I"),
]
EXPORT_FIELDS = [
    ("Characteristics", "I"), ("TimeDateStamp", "I"), ("MajorVersion", "H"),
    ("MinorVersion", "H"), ("Name", "I"), ("Base", "I"),
    ("NumberOfFunctions", "I"), ("NumberOfNames", "I"),
    ("AddressOfFunctions", "I"), ("AddressOfNames", "I"),
    ("AddressOfNameOrdinals", "I"),
]
RESOURCE_FIELDS = [
    ("Characteristics", "I"), ("TimeDateStamp", "I"), ("MajorVersion", "H"),
    ("MinorVersion", "H"), ("NumberOfNamedEntries", "H"),
    ("NumberOfIdEntries", "H"),
]
DEBUG_FIELDS = [
    ("Characteristics", "I"), ("TimeDateStamp", "I"), ("MajorVersion", "H"),
    ("MinorVersion", "H"), ("Type", "I"), ("SizeOfData", "I"),
    ("AddressOfRawData", "I"), ("PointerToRawData", "I"),
]
DELAY_IMPORT_FIELDS = [
    (n, "I") for n in (
        "Attributes", "DllNameRVA", "ModuleHandleRVA", "ImportAddressTableRVA",
        "ImportNameTableRVA", "BoundImportAddressTableRVA",
        "UnloadInformationTableRVA", "TimeDateStamp")
]


def _tls_fields(plus: bool):
    wide = "Q" if plus else "I"
    return [
        ("StartAddressOfRawData", wide), ("EndAddressOfRawData", wide),
        ("AddressOfIndex", wide), ("AddressOfCallBacks", wide),
        ("SizeOfZeroFill", "I"), ("Characteristics", "I"),
    ]


TLS32_FIELDS = _tls_fields(plus=False)
TLS64_FIELDS = _tls_fields(plus=True)


def _layout(fields):
    return struct.Struct("<" + "".join(code for _, code in fields)), [n for n, _ in fields]


_DOS = _layout(DOS_FIELDS)
_COFF = _layout(COFF_FIELDS)
_OPT32 = _layout(OPTIONAL32_FIELDS)
_OPT64 = _layout(OPTIONAL64_FIELDS)
_IMPORT_DESC = _layout(IMPORT_DESCRIPTOR_FIELDS)
_EXPORT = _layout(EXPORT_FIELDS)
_RESOURCE = _layout(RESOURCE_FIELDS)
_DEBUG = _layout(DEBUG_FIELDS)
_DELAY = _layout(DELAY_IMPORT_FIELDS)
_TLS32 = _layout(TLS32_FIELDS)
_TLS64 = _layout(TLS64_FIELDS)
_SECTION = struct.Struct(SECTION_FORMAT)

assert _DOS[0].size == 64 and _COFF[0].size == 20
assert _OPT32[0].size == 96 and _OPT64[0].size == 112
assert len(DOS_FIELDS) == 31 and len(OPTIONAL_FIELD_NAMES) == 30


@dataclass(frozen=True)
class DataDirectory:
    virtual_address: int
    size: int


@dataclass(frozen=True)
class Section:
    name: str
    virtual_size: int
    virtual_address: int
    size_of_raw_data: int
    pointer_to_raw_data: int
    pointer_to_relocations: int
    pointer_to_line_numbers: int
    number_of_relocations: int
    number_of_line_numbers: int
    characteristics: int

    @property
    def executable(self) -> bool:
        return bool(self.characteristics & (IMAGE_SCN_MEM_EXECUTE | IMAGE_SCN_CNT_CODE))

    @property
    def writable(self) -> bool:
        return bool(self.characteristics & IMAGE_SCN_MEM_WRITE)


@dataclass(frozen=True)
class ImportEntry:
    """One import descriptor: the DLL it names and the functions it pulls in."""
    dll_name: str
    api_names: tuple[str, ...]
    original_first_thunk: int = 0
    time_date_stamp: int = 0
    forwarder_chain: int = 0
    name_rva: int = 0
    first_thunk: int = 0


@dataclass(frozen=True)
class PeFile:
    """Parsed view of a PE image. Header maps are keyed by PE field names."""
    dos_header: dict
    coff_header: dict
    optional_header: dict
    data_directories: tuple[DataDirectory, ...]
    sections: tuple[Section, ...]
    imports: tuple[ImportEntry, ...]
    exports: dict
    resource_summary: dict
    debug_info: dict
    delay_imports: dict
    tls_table: dict
    pe32_plus: bool = False


@dataclass(frozen=True)
class PackerHint:
    likely_packed: bool
    evidence: tuple[str, ...] = field(default_factory=tuple)


def _zeros(names):
    return {n: 0 for n in names}


class _Reader:
    """Bounds-checked little-endian reads over an immutable buffer."""

    def __init__(self, data: bytes):
        self.data = data
        self.size = len(data)

    def unpack(self, layout, offset: int, what: str) -> dict:
        st, names = layout
        if offset < 0 or offset + st.size > self.size:
            raise Malformed(f"{what} at offset {offset:#x} extends past end of file")
        return dict(zip(names, st.unpack_from(self.data, offset)))

    def uint(self, offset: int, width: int, what: str) -> int:
        if offset < 0 or offset + width > self.size:
            raise Malformed(f"{what} at offset {offset:#x} extends past end of file")
        return int.from_bytes(self.data[offset:offset + width], "little")

    def cstring(self, offset: int, limit: int, what: str) -> str:
        if offset < 0 or offset >= self.size:
            raise Malformed(f"{what} at offset {offset:#x} is outside the file")
        end = self.data.find(b"\0", offset, min(self.size, offset + limit + 1))
        if end < 0:
            raise Malformed(f"{what} at offset {offset:#x} is unterminated or too long")
        return self.data[offset:end].decode("latin-1")


class _Image:
    def __init__(self, reader: _Reader, sections: tuple[Section, ...]):
        self.reader = reader
        self.sections = sections
        self.first_va = min((s.virtual_address for s in sections), default=None)

    def offset(self, rva: int) -> int | None:
        """Map an RVA to a file offset, or None when it has no file backing."""
        for s in self.sections:
            span = s.virtual_size or s.size_of_raw_data
            if s.virtual_address <= rva < s.virtual_address + span:
                delta = rva - s.virtual_address
                if delta >= s.size_of_raw_data:
                    return None
                off = s.pointer_to_raw_data + delta
                return off if off < self.reader.size else None
        # inside the headers, RVA and file offset coincide
        if (self.first_va is None or rva < self.first_va) and rva < self.reader.size:
            return rva
        return None

    def table(self, directory: DataDirectory, layout, names) -> dict:
        """Read an optional table; anything unreadable comes back zero-filled."""
        if not directory.virtual_address or not directory.size:
            return _zeros(names)
        off = self.offset(directory.virtual_address)
        if off is None:
            return _zeros(names)
        try:
            return self.reader.unpack(layout, off, "table")
        except Malformed:
            return _zeros(names)


def is_pe(data: bytes) -> bool:
    """Cheap check: MZ magic, readable e_lfanew and the PE signature behind it."""
    try:
        if len(data) < 64 or data[:2] != b"MZ":
            return False
        lfanew = int.from_bytes(data[0x3C:0x40], "little")
        return data[lfanew:lfanew + 4] == PE_SIGNATURE
    except Exception:
        return False


def parse_pe(data: bytes) -> PeFile:
    """Parse raw bytes into a :class:`PeFile`.

    Raises NotPeFile, Malformed or Unsupported; never anything else for
    ``bytes`` input.
    """
    data = bytes(data)
    if data[:2] != b"MZ":
        raise NotPeFile("missing MZ magic")
    r = _Reader(data)
    dos = r.unpack(_DOS, 0, "DOS header")
    lfanew = dos["e_lfanew"]
    if lfanew + 4 > r.size:
        raise Malformed("e_lfanew points past end of file")
    if data[lfanew:lfanew + 4] != PE_SIGNATURE:
        raise NotPeFile("missing PE signature")

    coff = r.unpack(_COFF, lfanew + 4, "COFF header")
    opt_off = lfanew + 24
    magic = r.uint(opt_off, 2, "optional header magic")
    if magic == PE32_MAGIC:
        plus, layout = False, _OPT32
    elif magic == PE32_PLUS_MAGIC:
        plus, layout = True, _OPT64
    else:
        raise Unsupported(f"optional header magic {magic:#x}")
    opt_size = coff["SizeOfOptionalHeader"]
    std_size = layout[0].size
    if opt_size < std_size:
        raise Malformed(f"SizeOfOptionalHeader {opt_size} below {std_size}")
    if opt_off + opt_size > r.size:
        raise Malformed("optional header extends past end of file")
    raw_opt = r.unpack(layout, opt_off, "optional header")
    opt = {n: raw_opt.get(n, 0) for n in OPTIONAL_FIELD_NAMES}

    n_dirs = min(opt["NumberOfRvaAndSizes"], 16, (opt_size - std_size) // 8)
    dirs = []
    for i in range(16):
        if i < n_dirs:
            off = opt_off + std_size + 8 * i
            dirs.append(DataDirectory(r.uint(off, 4, "data directory"),
                                      r.uint(off + 4, 4, "data directory")))
        else:
            dirs.append(DataDirectory(0, 0))

    n_sections = coff["NumberOfSections"]
    table_off = opt_off + opt_size
    if table_off + 40 * n_sections > r.size:
        raise Malformed("section table extends past end of file")
    sections = []
    for i in range(n_sections):
        (name, vsize, va, raw_size, raw_ptr, reloc_ptr, line_ptr, n_reloc,
         n_lines, chars) = _SECTION.unpack_from(data, table_off + 40 * i)
        sections.append(Section(
            name=name.split(b"\0", 1)[0].decode("latin-1"), virtual_size=vsize,
            virtual_address=va, size_of_raw_data=raw_size,
            pointer_to_raw_data=raw_ptr, pointer_to_relocations=reloc_ptr,
            pointer_to_line_numbers=line_ptr, number_of_relocations=n_reloc,
            number_of_line_numbers=n_lines, characteristics=chars,
        ))
    sections = tuple(sections)
    image = _Image(r, sections)

    imports = _parse_imports(image, dirs[DIR_IMPORT], plus)
    tls_layout = _TLS64 if plus else _TLS32
    return PeFile(
        dos_header=dos,
        coff_header=coff,
        optional_header=opt,
        data_directories=tuple(dirs),
        sections=sections,
        imports=imports,
        exports=image.table(dirs[DIR_EXPORT], _EXPORT, _EXPORT[1]),
        resource_summary=image.table(dirs[DIR_RESOURCE], _RESOURCE, _RESOURCE[1]),
        debug_info=image.table(dirs[DIR_DEBUG], _DEBUG, _DEBUG[1]),
        delay_imports=image.table(dirs[DIR_DELAY_IMPORT], _DELAY, _DELAY[1]),
        tls_table=image.table(dirs[DIR_TLS], tls_layout, tls_layout[1]),
        pe32_plus=plus,
    )


def _parse_imports(image: _Image, directory: DataDirectory, plus: bool):
    if not directory.virtual_address:
        return ()
    r = image.reader
    base = image.offset(directory.virtual_address)
    if base is None:
        raise Malformed("import directory RVA resolves outside the file")
    width = 8 if plus else 4
    ordinal_flag = 1 << (63 if plus else 31)
    entries = []
    budget = MAX_TOTAL_IMPORTS
    for i in range(MAX_IMPORT_DESCRIPTORS + 1):
        desc = r.unpack(_IMPORT_DESC, base + 20 * i, "import descriptor")
        if desc["Name"] == 0:
            break
        if i == MAX_IMPORT_DESCRIPTORS:
            raise Malformed(f"more than {MAX_IMPORT_DESCRIPTORS} import descriptors")
        name_off = image.offset(desc["Name"])
        if name_off is None:
            raise Malformed("import DLL name RVA resolves outside the file")
        dll = r.cstring(name_off, MAX_DLL_NAME, "import DLL name").lower()
        if not dll:
            raise Malformed("empty import DLL name")
        thunk_rva = desc["OriginalFirstThunk"] or desc["FirstThunk"]
        apis = []
        if thunk_rva:
            thunk_off = image.offset(thunk_rva)
            if thunk_off is None:
                raise Malformed("import thunk RVA resolves outside the file")
            for j in range(MAX_NAMES_PER_DLL + 1):
                value = r.uint(thunk_off + width * j, width, "import thunk")
                if value == 0:
                    break
                if j == MAX_NAMES_PER_DLL:
                    raise Malformed(f"more than {MAX_NAMES_PER_DLL} imports from {dll}")
                budget -= 1
                if budget < 0:
                    raise Malformed("import table exceeds total import budget")
                if value & ordinal_flag:
                    apis.append(f"ord{value & 0xFFFF}")
                    continue
                hint_off = image.offset(value & 0x7FFFFFFF)
                if hint_off is None:
                    raise Malformed("import hint/name RVA resolves outside the file")
                api = r.cstring(hint_off + 2, MAX_API_NAME, "import name")
                if not api:
                    raise Malformed(f"empty import name in {dll}")
                apis.append(api)
        entries.append(ImportEntry(
            dll_name=dll, api_names=tuple(apis),
            original_first_thunk=desc["OriginalFirstThunk"],
            time_date_stamp=desc["TimeDateStamp"],
            forwarder_chain=desc["ForwarderChain"],
            name_rva=desc["Name"], first_thunk=desc["FirstThunk"],
        ))
    return tuple(entries)


PACKER_SECTION_NAMES = (
    "UPX0", "UPX1", "UPX2", ".aspack", ".adata", "pec1", "PEC2", ".packed",
    "MPRESS1", "MPRESS2", ".petite", "FSG!", ".nsp0", ".nsp1",
)
_PACKER_NAMES_FOLDED = {n.lower(): n for n in PACKER_SECTION_NAMES}


def detect_packer(pe: PeFile) -> PackerHint:
    """Flag images that look compressed and would hide their import table."""
    evidence = []
    for s in pe.sections:
        if s.name.lower() in _PACKER_NAMES_FOLDED:
            evidence.append(s.name)
        elif s.executable and s.virtual_size > 0 and s.size_of_raw_data == 0:
            evidence.append(
                f"executable section {s.name!r} has virtual_size "
                f"{s.virtual_size} but no raw data")
    return PackerHint(likely_packed=bool(evidence), evidence=tuple(evidence))
