"""Shared generators for the test suite."""
from __future__ import annotations

import os
import string

import numpy as np

from maldetect import pe_parser as pp
from maldetect.features import Corpus, extract_file
from maldetect.synth import (CODE_CHARACTERISTICS, DATA_CHARACTERISTICS, DIRECTORY_SIZE_FIELDS,
                             PRESETS, STRUCTURAL_FIELDS, PeFileSpec, SectionSpec, gen_corpus)

_BITS = {"B": 8, "H": 16, "I": 32, "Q": 64}
_NAME_CHARS = string.ascii_letters + string.digits + "._$"
_FREE_DIRECTORIES = [name for name, i in DIRECTORY_SIZE_FIELDS.items()
                     if i not in (pp.DIR_EXPORT, pp.DIR_IMPORT, pp.DIR_RESOURCE, pp.DIR_DEBUG,
                                  pp.DIR_TLS, pp.DIR_IAT, pp.DIR_DELAY_IMPORT)]


def _name(rng, lo, hi, chars=_NAME_CHARS):
    return "".join(rng.choice(list(chars), size=int(rng.integers(lo, hi + 1))))


def _values(rng, layout, n_pick):
    names = [n for n, _ in layout]
    picked = rng.choice(len(names), size=min(n_pick, len(names)), replace=False)
    return {names[i]: int(rng.integers(0, 1 << min(_BITS[layout[i][1]], 62)))
            for i in picked}


def random_spec(rng: np.random.Generator) -> PeFileSpec:
    """A random but valid PeFileSpec exercising every builder feature."""
    plus = bool(rng.random() < 0.25)
    opt_fields = pp.OPTIONAL64_FIELDS if plus else pp.OPTIONAL32_FIELDS
    header = {}
    for fields in (pp.DOS_FIELDS, pp.COFF_FIELDS, opt_fields):
        usable = [(n, c) for n, c in fields if n not in STRUCTURAL_FIELDS]
        header.update(_values(rng, usable, int(rng.integers(0, 6))))
    for name in rng.choice(_FREE_DIRECTORIES, size=int(rng.integers(0, 3)), replace=False):
        header[str(name)] = int(rng.integers(0, 1 << 32))

    sections = []
    for _ in range(int(rng.integers(1, 5))):
        raw = int(rng.integers(0, 4)) * 0x200 + int(rng.integers(0, 2)) * int(rng.integers(1, 0x200))
        sections.append(SectionSpec(
            name=_name(rng, 0, 8),
            virtual_size=int(rng.integers(0, 0x6000)),
            raw_size=raw,
            characteristics=int(rng.choice([CODE_CHARACTERISTICS, DATA_CHARACTERISTICS,
                                            int(rng.integers(0, 1 << 32))])),
            pointer_to_relocations=int(rng.integers(0, 1 << 32)) if rng.random() < 0.2 else 0,
            number_of_relocations=int(rng.integers(0, 1 << 16)) if rng.random() < 0.2 else 0,
            number_of_line_numbers=int(rng.integers(0, 1 << 16)) if rng.random() < 0.2 else 0,
        ))

    imports = {}
    for _ in range(int(rng.integers(0, 6))):
        dll = _name(rng, 1, 12, string.ascii_lowercase + string.digits + "_") + ".dll"
        apis = []
        for _ in range(int(rng.integers(1, 8))):
            if rng.random() < 0.15:
                apis.append(f"ord{int(rng.integers(0, 0x10000))}")
            else:
                apis.append(_name(rng, 1, 24, string.ascii_letters + string.digits + "_@?"))
        imports[dll] = apis

    def maybe(layout):
        return _values(rng, layout, int(rng.integers(0, len(layout) + 1))) \
            if rng.random() < 0.3 else None

    tls = maybe(pp.TLS64_FIELDS if plus else pp.TLS32_FIELDS)
    exports = None
    if rng.random() < 0.3:
        exports = [_name(rng, 1, 16, string.ascii_letters) for _ in range(int(rng.integers(0, 5)))]
    return PeFileSpec(header=header, sections=sections, imports=imports, exports=exports,
                      resource=maybe(pp.RESOURCE_FIELDS), debug=maybe(pp.DEBUG_FIELDS),
                      tls=tls, delay_import=maybe(pp.DELAY_IMPORT_FIELDS),
                      seed=int(rng.integers(0, 1 << 31)), pe32_plus=plus)


def spec_mismatches(spec: PeFileSpec, pe: pp.PeFile) -> list:
    """Every specified field that the parsed image does not reproduce."""
    bad = []
    headers = {**pe.dos_header, **pe.coff_header, **pe.optional_header}
    for key, value in spec.header.items():
        if key in DIRECTORY_SIZE_FIELDS:
            got = pe.data_directories[DIRECTORY_SIZE_FIELDS[key]].size
        else:
            got = headers.get(key)
        if got != value:
            bad.append((key, value, got))
    if len(pe.sections) < len(spec.sections):
        bad.append(("sections", len(spec.sections), len(pe.sections)))
    for want, got in zip(spec.sections, pe.sections):
        pairs = [("name", want.name, got.name),
                 ("virtual_size", want.virtual_size, got.virtual_size),
                 ("raw_size", want.raw_size, got.size_of_raw_data),
                 ("characteristics", want.characteristics, got.characteristics),
                 ("relocs", want.pointer_to_relocations, got.pointer_to_relocations),
                 ("n_relocs", want.number_of_relocations, got.number_of_relocations),
                 ("n_lines", want.number_of_line_numbers, got.number_of_line_numbers)]
        bad += [p for p in pairs if p[1] != p[2]]
    got_imports = {e.dll_name: list(e.api_names) for e in pe.imports}
    if got_imports != spec.imports or len(pe.imports) != len(spec.imports):
        bad.append(("imports", spec.imports, got_imports))
    for values, table in ((spec.resource, pe.resource_summary), (spec.debug, pe.debug_info),
                          (spec.tls, pe.tls_table), (spec.delay_import, pe.delay_imports)):
        for key, value in (values or {}).items():
            if table.get(key) != value:
                bad.append((key, value, table.get(key)))
    if spec.exports is not None:
        n = len(spec.exports)
        if (pe.exports["NumberOfNames"], pe.exports["NumberOfFunctions"]) != (n, n):
            bad.append(("exports", n, pe.exports["NumberOfNames"]))
    if pe.pe32_plus != spec.pe32_plus:
        bad.append(("pe32_plus", spec.pe32_plus, pe.pe32_plus))
    return bad


def make_corpus(profile: str, n_malicious: int, n_benign: int, seed: int, out_dir) -> Corpus:
    pm, pb = PRESETS[profile](n_malicious, n_benign, seed)
    manifest = gen_corpus(pm, pb, out_dir)
    return Corpus([extract_file(os.path.join(out_dir, rel), label)
                   for rel, label in sorted(manifest.items())])


def fuzz_inputs(rng: np.random.Generator, seeds: list, count: int):
    """Yield ``count`` byte strings: mutated, truncated, spliced and random images."""
    for i in range(count):
        mode = i % 5
        base = bytearray(seeds[int(rng.integers(len(seeds)))])
        if mode == 0:
            # point mutations, biased toward the headers
            for _ in range(int(rng.integers(1, 9))):
                limit = len(base) if rng.random() < 0.3 else min(len(base), 0x400)
                base[int(rng.integers(limit))] = int(rng.integers(256))
            yield bytes(base)
        elif mode == 1:
            yield bytes(base[:int(rng.integers(0, len(base) + 1))])
        elif mode == 2:
            # overwrite a 4-byte word with an extreme value
            at = int(rng.integers(0, max(1, min(len(base), 0x400) - 4)))
            word = int(rng.choice([0, 1, 0x7FFFFFFF, 0x80000000, 0xFFFFFFFF,
                                   int(rng.integers(1 << 32))]))
            base[at:at + 4] = word.to_bytes(4, "little")
            yield bytes(base)
        elif mode == 3:
            n = int(rng.integers(0, 512))
            head = b"MZ" if rng.random() < 0.7 else b""
            yield head + rng.bytes(n)
        else:
            other = seeds[int(rng.integers(len(seeds)))]
            cut = int(rng.integers(0, min(len(base), len(other)) + 1))
            yield bytes(base[:cut]) + other[cut:]
