"""Deterministic generation of small, inert PE images and labelled corpora.

Images carry no code: every section is zero-filled. Imports and the optional
tables requested by a spec are laid out in an appended ``.idata`` section.
"""
from __future__ import annotations

import re
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import pe_parser as pp
from .errors import InvalidSpec
from .features import BENIGN, MALICIOUS

FILE_ALIGNMENT = 0x200
SECTION_ALIGNMENT = 0x1000
E_LFANEW = 0x40
TABLES_SECTION = ".idata"
TABLES_CHARACTERISTICS = (pp.IMAGE_SCN_CNT_INITIALIZED_DATA | pp.IMAGE_SCN_MEM_READ
                          | pp.IMAGE_SCN_MEM_WRITE)
CODE_CHARACTERISTICS = pp.IMAGE_SCN_CNT_CODE | pp.IMAGE_SCN_MEM_EXECUTE | pp.IMAGE_SCN_MEM_READ
DATA_CHARACTERISTICS = TABLES_CHARACTERISTICS

_ORDINAL = re.compile(r"^ord(\d+)$")

# fields the builder owns; overriding them would break the layout
STRUCTURAL_FIELDS = frozenset({
    "e_magic", "e_lfanew", "NumberOfSections", "SizeOfOptionalHeader", "Magic",
    "NumberOfRvaAndSizes",
})
_WIDTHS = {"B": 8, "H": 16, "I": 32, "Q": 64}


def _field_widths(plus: bool) -> dict:
    fields = pp.DOS_FIELDS + pp.COFF_FIELDS + (pp.OPTIONAL64_FIELDS if plus
                                               else pp.OPTIONAL32_FIELDS)
    return {n: _WIDTHS[c] for n, c in fields}


# data directories the builder may fill itself
_BUILDER_DIRECTORIES = {
    pp.DIR_EXPORT: "exports", pp.DIR_IMPORT: "imports", pp.DIR_RESOURCE: "resource",
    pp.DIR_DEBUG: "debug", pp.DIR_TLS: "tls", pp.DIR_IAT: "imports",
    pp.DIR_DELAY_IMPORT: "delay_import",
}
DIRECTORY_SIZE_FIELDS = {f"{n}Size": i for i, n in enumerate(pp.DATA_DIRECTORY_NAMES)}


def align(value: int, alignment: int) -> int:
    return (value + alignment - 1) // alignment * alignment


@dataclass(frozen=True)
class SectionSpec:
    name: str
    virtual_size: int = 0x1000
    raw_size: int = 0x200
    characteristics: int = CODE_CHARACTERISTICS
    pointer_to_relocations: int = 0
    pointer_to_line_numbers: int = 0
    number_of_relocations: int = 0
    number_of_line_numbers: int = 0


def default_sections():
    return [SectionSpec(".text", 0x1000, 0x200, CODE_CHARACTERISTICS),
            SectionSpec(".data", 0x1000, 0x200, DATA_CHARACTERISTICS)]


@dataclass
class PeFileSpec:
    """What to put in a synthetic image.

    ``header`` overrides DOS/COFF/optional header fields by PE field name and
    data-directory sizes by feature name (e.g. ``CertificateTableSize``).
    API names of the form ``ord<N>`` are emitted as ordinal imports.
    ``import_capacity`` fixes the size of the ``.idata`` section so adding
    imports leaves section sizes unchanged.
    """
    header: dict = field(default_factory=dict)
    sections: list = field(default_factory=default_sections)
    imports: dict = field(default_factory=dict)
    exports: list | None = None
    export_name: str = "synthetic.dll"
    resource: dict | None = None
    debug: dict | None = None
    tls: dict | None = None
    delay_import: dict | None = None
    import_capacity: int | None = None
    seed: int = 0
    pe32_plus: bool = False

    @property
    def has_tables(self) -> bool:
        return bool(self.imports) or any(t is not None for t in (
            self.exports, self.resource, self.debug, self.tls, self.delay_import))


class _Blob:
    """Byte buffer addressed by RVA, used to lay out the tables section."""

    def __init__(self, base_rva: int):
        self.base = base_rva
        self.buf = bytearray()

    def rva(self) -> int:
        return self.base + len(self.buf)

    def put(self, data: bytes, alignment: int = 4) -> int:
        self.buf += b"\0" * (align(len(self.buf), alignment) - len(self.buf))
        at = self.rva()
        self.buf += data
        return at

    def patch(self, rva: int, data: bytes):
        off = rva - self.base
        self.buf[off:off + len(data)] = data


def _pack(layout_fields, values: dict, what: str) -> bytes:
    names = [n for n, _ in layout_fields]
    unknown = set(values) - set(names)
    if unknown:
        raise InvalidSpec(f"unknown {what} fields: {sorted(unknown)}")
    fmt = "<" + "".join(c for _, c in layout_fields)
    try:
        return struct.pack(fmt, *(int(values.get(n, 0)) for n in names))
    except struct.error as exc:
        raise InvalidSpec(f"{what}: {exc}") from None


def _build_tables(spec: PeFileSpec, base_rva: int, code_rva: int):
    blob = _Blob(base_rva)
    dirs = {}
    width = 8 if spec.pe32_plus else 4
    ordinal_flag = 1 << (63 if spec.pe32_plus else 31)

    if spec.imports:
        dlls = list(spec.imports.items())
        desc_rva = blob.put(b"\0" * 20 * (len(dlls) + 1))
        ilts = [blob.put(b"\0" * width * (len(apis) + 1), 8) for _, apis in dlls]
        iat_start = blob.rva()
        iats = [blob.put(b"\0" * width * (len(apis) + 1), 8) for _, apis in dlls]
        iat_size = blob.rva() - iat_start
        for k, (dll, apis) in enumerate(dlls):
            if not dll or "\0" in dll:
                raise InvalidSpec(f"invalid DLL name {dll!r}")
            thunks = []
            for api in apis:
                m = _ORDINAL.match(api)
                if m and int(m.group(1)) <= 0xFFFF:
                    thunks.append(ordinal_flag | int(m.group(1)))
                elif not api or "\0" in api:
                    raise InvalidSpec(f"invalid API name {api!r} in {dll}")
                else:
                    thunks.append(blob.put(b"\0\0" + api.encode("latin-1") + b"\0", 2))
            packed = b"".join(t.to_bytes(width, "little") for t in thunks)
            blob.patch(ilts[k], packed)
            blob.patch(iats[k], packed)
            name_rva = blob.put(dll.encode("latin-1") + b"\0", 2)
            blob.patch(desc_rva + 20 * k, struct.pack("<IIIII", ilts[k], 0, 0, name_rva, iats[k]))
        dirs[pp.DIR_IMPORT] = (desc_rva, 20 * (len(dlls) + 1))
        dirs[pp.DIR_IAT] = (iat_start, iat_size)

    if spec.exports is not None:
        names = list(spec.exports)
        n = len(names)
        dir_rva = blob.put(b"\0" * 40)
        funcs = blob.put(struct.pack(f"<{n}I", *([code_rva] * n)))
        name_ptrs = blob.put(b"\0" * 4 * n)
        ordinals = blob.put(struct.pack(f"<{n}H", *range(n)))
        dll_rva = blob.put(spec.export_name.encode("latin-1") + b"\0", 2)
        ptrs = [blob.put(name.encode("latin-1") + b"\0", 2) for name in names]
        blob.patch(name_ptrs, struct.pack(f"<{n}I", *ptrs))
        blob.patch(dir_rva, struct.pack("<IIHHIIIIIII", 0, 0, 0, 0, dll_rva, 1, n, n,
                                        funcs if n else 0, name_ptrs if n else 0,
                                        ordinals if n else 0))
        dirs[pp.DIR_EXPORT] = (dir_rva, blob.rva() - dir_rva)

    tls_fields = pp.TLS64_FIELDS if spec.pe32_plus else pp.TLS32_FIELDS
    for index, values, layout, what in (
            (pp.DIR_RESOURCE, spec.resource, pp.RESOURCE_FIELDS, "resource"),
            (pp.DIR_DEBUG, spec.debug, pp.DEBUG_FIELDS, "debug"),
            (pp.DIR_TLS, spec.tls, tls_fields, "tls")):
        if values is not None:
            packed = _pack(layout, values, what)
            dirs[index] = (blob.put(packed), len(packed))
    if spec.delay_import is not None:
        packed = _pack(pp.DELAY_IMPORT_FIELDS, spec.delay_import, "delay import")
        at = blob.put(packed + b"\0" * 32)
        dirs[pp.DIR_DELAY_IMPORT] = (at, 64)
    return bytes(blob.buf), dirs


def build_pe(spec: PeFileSpec) -> bytes:
    """Serialise ``spec`` into a loader-shaped PE32 (or PE32+) image."""
    plus = spec.pe32_plus
    widths = _field_widths(plus)
    sections = list(spec.sections)
    if not sections:
        raise InvalidSpec("a PE image needs at least one section")
    for s in sections:
        if len(s.name.encode("latin-1")) > 8:
            raise InvalidSpec(f"section name {s.name!r} longer than 8 bytes")
        for attr in ("virtual_size", "raw_size", "characteristics",
                     "pointer_to_relocations", "pointer_to_line_numbers"):
            if not 0 <= getattr(s, attr) < 1 << 32:
                raise InvalidSpec(f"section {s.name!r}: {attr} out of range")
        if not (0 <= s.number_of_relocations < 1 << 16 and 0 <= s.number_of_line_numbers < 1 << 16):
            raise InvalidSpec(f"section {s.name!r}: count out of range")

    header = dict(spec.header)
    dir_overrides = {}
    for key in list(header):
        if key in DIRECTORY_SIZE_FIELDS:
            idx = DIRECTORY_SIZE_FIELDS[key]
            if idx in (pp.DIR_IMPORT, pp.DIR_IAT):
                raise InvalidSpec(f"{key} is reserved for generated imports")
            owner = _BUILDER_DIRECTORIES.get(idx)
            if owner and getattr(spec, owner) is not None:
                raise InvalidSpec(f"{key} is set by the generated {owner} table")
            dir_overrides[idx] = header.pop(key)
        elif key in STRUCTURAL_FIELDS:
            raise InvalidSpec(f"{key} is structural and cannot be overridden")
        elif key not in widths:
            raise InvalidSpec(f"unknown header field {key!r}")
        elif key == "BaseOfData" and plus:
            raise InvalidSpec("PE32+ has no BaseOfData")
    for key, value in list(header.items()) + [(k, v) for k, v in dir_overrides.items()]:
        bits = widths.get(key, 32)
        if not 0 <= int(value) < 1 << bits:
            raise InvalidSpec(f"{key}={value} does not fit in {bits} bits")

    n_sections = len(sections) + (1 if spec.has_tables else 0)
    opt_fields = pp.OPTIONAL64_FIELDS if plus else pp.OPTIONAL32_FIELDS
    opt_size = struct.calcsize("<" + "".join(c for _, c in opt_fields)) + 16 * 8
    headers_end = E_LFANEW + 4 + 20 + opt_size + 40 * n_sections
    size_of_headers = align(headers_end, FILE_ALIGNMENT)

    # lay out sections: virtual addresses, then raw pointers
    records = []
    va, raw_ptr = SECTION_ALIGNMENT, size_of_headers
    for s in sections:
        records.append([s.name, s.virtual_size, va, s.raw_size, raw_ptr if s.raw_size else 0,
                        s.pointer_to_relocations, s.pointer_to_line_numbers,
                        s.number_of_relocations, s.number_of_line_numbers, s.characteristics])
        va += align(max(s.virtual_size, s.raw_size, 1), SECTION_ALIGNMENT)
        raw_ptr += align(s.raw_size, FILE_ALIGNMENT)

    code = [r for r in records if r[9] & pp.IMAGE_SCN_CNT_CODE]
    code_rva = code[0][2] if code else records[0][2]
    tables, dirs = b"", {}
    if spec.has_tables:
        tables, dirs = _build_tables(spec, va, code_rva)
        capacity = len(tables) if spec.import_capacity is None else spec.import_capacity
        if capacity < len(tables):
            raise InvalidSpec(f"import_capacity {capacity} < {len(tables)} bytes of tables")
        capacity = max(capacity, 1)
        raw = align(capacity, FILE_ALIGNMENT)
        records.append([TABLES_SECTION, capacity, va, raw, raw_ptr, 0, 0, 0, 0,
                        TABLES_CHARACTERISTICS])
        va += align(capacity, SECTION_ALIGNMENT)
        raw_ptr += raw
    size_of_image = va

    def section_sum(flag):
        return sum(r[3] for r in records if r[9] & flag) & 0xFFFFFFFF

    non_code = [r for r in records if not r[9] & pp.IMAGE_SCN_CNT_CODE]
    opt = {
        "Magic": pp.PE32_PLUS_MAGIC if plus else pp.PE32_MAGIC,
        "MajorLinkerVersion": 9, "MinorLinkerVersion": 0,
        "SizeOfCode": section_sum(pp.IMAGE_SCN_CNT_CODE),
        "SizeOfInitializedData": section_sum(pp.IMAGE_SCN_CNT_INITIALIZED_DATA),
        "SizeOfUninitializedData": 0,
        "AddressOfEntryPoint": code_rva,
        "BaseOfCode": code_rva,
        "ImageBase": 0x140000000 if plus else 0x400000,
        "SectionAlignment": SECTION_ALIGNMENT, "FileAlignment": FILE_ALIGNMENT,
        "MajorOperatingSystemVersion": 5, "MinorOperatingSystemVersion": 1,
        "MajorSubsystemVersion": 5, "MinorSubsystemVersion": 1,
        "SizeOfImage": size_of_image, "SizeOfHeaders": size_of_headers,
        "Subsystem": 2,
        "SizeOfStackReserve": 0x100000, "SizeOfStackCommit": 0x1000,
        "SizeOfHeapReserve": 0x100000, "SizeOfHeapCommit": 0x1000,
        "NumberOfRvaAndSizes": 16,
    }
    if not plus:
        opt["BaseOfData"] = non_code[0][2] if non_code else 0
    dos = {"e_magic": pp.DOS_MAGIC, "e_cblp": 0x90, "e_cp": 3, "e_cparhdr": 4,
           "e_maxalloc": 0xFFFF, "e_sp": 0xB8, "e_lfarlc": 0x40, "e_lfanew": E_LFANEW}
    coff = {"Machine": 0x8664 if plus else 0x14C, "NumberOfSections": n_sections,
            "TimeDateStamp": spec.seed & 0xFFFFFFFF, "SizeOfOptionalHeader": opt_size,
            "Characteristics": 0x0102 if not plus else 0x0022}
    for key, value in header.items():
        for table in (dos, coff, opt):
            names = {n for n, _ in (pp.DOS_FIELDS if table is dos else
                                    pp.COFF_FIELDS if table is coff else opt_fields)}
            if key in names:
                table[key] = value
                break

    directory = [(0, 0)] * 16
    for idx, size in dir_overrides.items():
        directory[idx] = (0, size)
    for idx, entry in dirs.items():
        directory[idx] = entry

    out = bytearray(size_of_headers)
    out[0:64] = _pack(pp.DOS_FIELDS, dos, "DOS header")
    out[E_LFANEW:E_LFANEW + 4] = pp.PE_SIGNATURE
    off = E_LFANEW + 4
    out[off:off + 20] = _pack(pp.COFF_FIELDS, coff, "COFF header")
    off += 20
    packed_opt = _pack(opt_fields, opt, "optional header")
    out[off:off + len(packed_opt)] = packed_opt
    off += len(packed_opt)
    for rva, size in directory:
        out[off:off + 8] = struct.pack("<II", rva, size)
        off += 8
    for r in records:
        out[off:off + 40] = struct.pack(pp.SECTION_FORMAT, r[0].encode("latin-1"), *r[1:])
        off += 40
    for r in records:
        if r[3]:
            body = bytearray(align(r[3], FILE_ALIGNMENT))
            if spec.has_tables and r is records[-1]:
                body[:len(tables)] = tables
            out += body
    return bytes(out)


# ---------------------------------------------------------------------------
# corpus profiles


@dataclass
class CorpusProfile:
    """Distribution of synthetic samples for one label.

    ``header_ranges`` maps header fields (as accepted by PeFileSpec.header)
    to inclusive integer ranges. ``dll_pool`` gives each DLL's inclusion
    probability; ``api_pool[dll]`` gives each API's probability once its DLL
    is included (at least one API is always drawn).
    """
    label: str
    n_samples: int
    seed: int
    header_ranges: dict = field(default_factory=dict)
    dll_pool: dict = field(default_factory=dict)
    api_pool: dict = field(default_factory=dict)
    section_sizes: tuple = (0x200, 0x2000)
    packed_probability: float = 0.0

    def validate(self):
        if self.label not in (MALICIOUS, BENIGN):
            raise InvalidSpec(f"profile label must be malicious or benign, got {self.label!r}")
        if self.n_samples < 0:
            raise InvalidSpec("n_samples must be non-negative")
        if not self.dll_pool:
            raise InvalidSpec("dll_pool must not be empty")
        probs = list(self.dll_pool.values()) + [p for apis in self.api_pool.values()
                                                for p in apis.values()]
        probs.append(self.packed_probability)
        if any(not 0.0 <= p <= 1.0 for p in probs):
            raise InvalidSpec("probabilities must lie in [0, 1]")
        for dll in self.dll_pool:
            if not self.api_pool.get(dll):
                raise InvalidSpec(f"api_pool for {dll} must not be empty")
        for name, (lo, hi) in self.header_ranges.items():
            if lo > hi or lo < 0:
                raise InvalidSpec(f"bad range for {name}: {(lo, hi)}")


def sample_spec(profile: CorpusProfile, index: int) -> PeFileSpec:
    """The ``index``-th sample of ``profile``; a pure function of both."""
    rng = np.random.default_rng([profile.seed, index, 0 if profile.label == BENIGN else 1])
    header = {"TimeDateStamp": int(rng.integers(0x30000000, 0x60000000))}
    for name, (lo, hi) in sorted(profile.header_ranges.items()):
        header[name] = int(rng.integers(lo, hi + 1))
    imports = {}
    for dll in sorted(profile.dll_pool):
        if rng.random() < profile.dll_pool[dll]:
            pool = profile.api_pool[dll]
            apis = [api for api in sorted(pool) if rng.random() < pool[api]]
            if not apis:
                apis = [sorted(pool)[int(rng.integers(len(pool)))]]
            imports[dll] = apis
    lo, hi = profile.section_sizes
    text_raw = align(int(rng.integers(lo, hi + 1)), FILE_ALIGNMENT)
    data_raw = align(int(rng.integers(lo, hi + 1)), FILE_ALIGNMENT)
    sections = [SectionSpec(".text", text_raw + int(rng.integers(0, 0x200)), text_raw,
                            CODE_CHARACTERISTICS),
                SectionSpec(".data", data_raw + int(rng.integers(0, 0x200)), data_raw,
                            DATA_CHARACTERISTICS)]
    if rng.random() < profile.packed_probability:
        sections = [SectionSpec("UPX0", 0x8000, 0, CODE_CHARACTERISTICS | pp.IMAGE_SCN_MEM_WRITE),
                    SectionSpec("UPX1", text_raw, text_raw, CODE_CHARACTERISTICS)]
    return PeFileSpec(header=header, sections=sections, imports=imports,
                      seed=profile.seed * 1_000_003 + index)


def gen_corpus(profile_malicious: CorpusProfile, profile_benign: CorpusProfile,
               out_dir) -> dict:
    """Write every sample of both profiles under ``out_dir``.

    Returns the manifest (relative path -> label), which is also written to
    ``out_dir/manifest.tsv`` as ``path<TAB>label`` lines.
    """
    out = Path(out_dir)
    manifest = {}
    for profile in (profile_malicious, profile_benign):
        profile.validate()
        sub = out / profile.label
        sub.mkdir(parents=True, exist_ok=True)
        for i in range(profile.n_samples):
            rel = f"{profile.label}/{profile.label[0]}{i:05d}.exe"
            (out / rel).write_bytes(build_pe(sample_spec(profile, i)))
            manifest[rel] = profile.label
    write_manifest(manifest, out / "manifest.tsv")
    return manifest


def write_manifest(manifest: dict, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rel in sorted(manifest):
            fh.write(f"{rel}\t{manifest[rel]}\n")


def read_manifest(path) -> dict:
    manifest = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if line:
                rel, _, label = line.partition("\t")
                manifest[rel] = label
    return manifest


# ---------------------------------------------------------------------------
# preset profiles

COMMON_APIS = {
    "kernel32.dll": ["LoadLibraryA", "GetProcAddress", "CreateFileA", "ReadFile",
                     "WriteFile", "CloseHandle", "GetModuleHandleA", "ExitProcess",
                     "VirtualAlloc", "HeapAlloc"],
    "user32.dll": ["MessageBoxA", "GetKeyboardType", "ShowWindow", "GetMessageA",
                   "DispatchMessageA", "LoadIconA"],
    "gdi32.dll": ["BitBlt", "CreateCompatibleDC", "SelectObject", "DeleteObject"],
    "comctl32.dll": ["InitCommonControlsEx", "ImageList_Create", "PropertySheetA"],
    "comdlg32.dll": ["GetOpenFileNameA", "GetSaveFileNameA", "ChooseColorA"],
    "shell32.dll": ["SHGetFolderPathA", "ShellExecuteA", "DragQueryFileA"],
    "ole32.dll": ["CoInitialize", "CoCreateInstance", "CoUninitialize"],
    "oleaut32.dll": ["SysAllocString", "SysFreeString", "VariantInit"],
    "version.dll": ["GetFileVersionInfoA", "VerQueryValueA"],
    "shlwapi.dll": ["PathFileExistsA", "StrStrIA", "PathCombineA"],
}
SUSPICIOUS_APIS = {
    "advapi32.dll": ["RegSetValueExA", "RegOpenKeyExA", "RegCreateKeyExA",
                     "OpenSCManagerA", "CreateServiceA", "StartServiceA"],
    "wsock32.dll": ["recv", "send", "socket", "connect", "WSAStartup", "gethostbyname"],
    "ws2_32.dll": ["bind", "listen", "accept", "closesocket"],
    "wininet.dll": ["InternetOpenA", "InternetOpenUrlA", "InternetReadFile",
                    "HttpSendRequestA"],
    "urlmon.dll": ["URLDownloadToFileA"],
    "ntdll.dll": ["NtQueryInformationProcess", "RtlMoveMemory", "ZwUnmapViewOfSection"],
    "psapi.dll": ["EnumProcesses", "GetModuleBaseNameA"],
    "hooks.dll": ["SetWindowsHookExA", "GetAsyncKeyState", "ExitWindowsEx"],
}


def _pool(apis: dict, dll_p: float, api_p: float, always=()):
    dll_pool = {dll: (1.0 if dll in always else dll_p) for dll in apis}
    api_pool = {dll: {api: api_p for api in names} for dll, names in apis.items()}
    return dll_pool, api_pool


def separable_profiles(n_malicious: int, n_benign: int, seed: int = 0):
    """Malicious and benign import pools are disjoint; headers are shared."""
    mal_dll, mal_api = _pool(SUSPICIOUS_APIS, 0.5, 0.5, always=("wininet.dll",))
    ben_dll, ben_api = _pool(COMMON_APIS, 0.5, 0.5, always=("kernel32.dll",))
    ranges = {"e_cblp": (0, 512), "NumberOfSymbols": (0, 5000), "MajorLinkerVersion": (6, 14)}
    return (CorpusProfile(MALICIOUS, n_malicious, seed, dict(ranges), mal_dll, mal_api),
            CorpusProfile(BENIGN, n_benign, seed + 1, dict(ranges), ben_dll, ben_api))


def null_profiles(n_malicious: int, n_benign: int, seed: int = 0):
    """Both labels drawn from one distribution: there is nothing to learn."""
    apis = {**COMMON_APIS, **SUSPICIOUS_APIS}
    dll_pool, api_pool = _pool(apis, 0.3, 0.5, always=("kernel32.dll",))
    ranges = {"e_cp": (1, 2000), "NumberOfSymbols": (0, 100000),
              "SizeOfStackReserve": (0x10000, 0x400000), "MajorLinkerVersion": (6, 14)}
    return (CorpusProfile(MALICIOUS, n_malicious, seed, dict(ranges), dll_pool, api_pool),
            CorpusProfile(BENIGN, n_benign, seed + 1, dict(ranges), dict(dll_pool),
                          {k: dict(v) for k, v in api_pool.items()}))


def header_signal_profiles(n_malicious: int, n_benign: int, seed: int = 0):
    """Header fields separate the labels; import pools are identical."""
    apis = {**COMMON_APIS, **SUSPICIOUS_APIS}
    dll_pool, api_pool = _pool(apis, 0.3, 0.5, always=("kernel32.dll",))
    mal_ranges = {"e_cp": (400, 2000), "NumberOfSymbols": (20000, 100000),
                  "e_minalloc": (200, 2000), "MajorLinkerVersion": (2, 8)}
    ben_ranges = {"e_cp": (1, 10), "NumberOfSymbols": (0, 15000),
                  "e_minalloc": (0, 4), "MajorLinkerVersion": (6, 14)}
    return (CorpusProfile(MALICIOUS, n_malicious, seed, mal_ranges, dll_pool, api_pool),
            CorpusProfile(BENIGN, n_benign, seed + 1, ben_ranges, dict(dll_pool),
                          {k: dict(v) for k, v in api_pool.items()}))


PRESETS = {
    "separable": separable_profiles,
    "null": null_profiles,
    "header-signal": header_signal_profiles,
}
