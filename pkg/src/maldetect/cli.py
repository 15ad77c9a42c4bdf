"""Command-line entry point: extract, train, evaluate, scan, report, gen-corpus."""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import classifiers as clf
from .behaviors import load_behavior_map
from .errors import MaldetectError, StageError
from .evaluation import DEFAULT_FOLDS, FAMILIES, read_results, run_experiment_matrix, write_results
from .features import BENIGN, MALICIOUS, Corpus, extract_file, read_corpus, write_corpus
from .pe_parser import detect_packer, parse_pe
from .pipeline import (FAMILY_MASKS, PipelineConfig, build_pipeline, iter_files, load_model,
                       save_model, scan_directory)
from .report import report
from .selection import DEFAULT_BINS, DEFAULT_K_API, DEFAULT_K_DLL, DEFAULT_K_HEADER
from .synth import PRESETS, gen_corpus, read_manifest

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_MALICIOUS = 3

log = logging.getLogger("maldetect")

CLASSIFIER_CHOICES = ("nb", "tree", "svm", *clf.KINDS)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


class UsageError(Exception):
    pass


def _csv(choices):
    def parse(text):
        items = [t.strip() for t in text.split(",") if t.strip()]
        bad = [t for t in items if t not in choices]
        if bad or not items:
            raise argparse.ArgumentTypeError(
                f"expected a comma-separated subset of {', '.join(choices)}")
        return items
    return parse


def _add_pipeline_args(p):
    p.add_argument("--k-header", type=int, default=DEFAULT_K_HEADER)
    p.add_argument("--k-dll", type=int, default=DEFAULT_K_DLL)
    p.add_argument("--k-api", type=int, default=DEFAULT_K_API)
    p.add_argument("--bins", type=int, default=DEFAULT_BINS,
                   help="equal-frequency bins for header information gain")
    group = p.add_mutually_exclusive_group()
    group.add_argument("--pca-components", type=int)
    group.add_argument("--pca-variance", type=float,
                       help="keep the fewest components reaching this variance fraction")
    p.add_argument("--seed", type=int, default=0)


def _config(args, **extra) -> PipelineConfig:
    return PipelineConfig(k_header=args.k_header, k_dll=args.k_dll, k_api=args.k_api,
                          n_bins=args.bins, pca_components=args.pca_components,
                          pca_variance=args.pca_variance, seed=args.seed, **extra)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="maldetect", description="Static PE malware detection toolkit.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("extract", help="extract raw features from PE files into a corpus")
    p.add_argument("directory")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--label", choices=(MALICIOUS, BENIGN))
    src.add_argument("--manifest", help="path<TAB>label file, paths relative to DIRECTORY")
    p.add_argument("--skip-packed", action="store_true")
    p.add_argument("-o", "--output", required=True, help="corpus file (appended if present)")

    p = sub.add_parser("train", help="fit the full pipeline and save a model")
    p.add_argument("-c", "--corpus", required=True)
    p.add_argument("--classifier", choices=CLASSIFIER_CHOICES, default="tree")
    p.add_argument("--family", choices=tuple(FAMILY_MASKS), default="all")
    _add_pipeline_args(p)
    p.add_argument("-o", "--output", required=True)

    p = sub.add_parser("evaluate", help="cross-validate feature families x classifiers")
    p.add_argument("-c", "--corpus", required=True)
    p.add_argument("--paper-protocol", action="store_true",
                   help="fit selection and PCA once on the whole corpus before splitting")
    p.add_argument("--folds", type=int, default=DEFAULT_FOLDS)
    p.add_argument("--families", type=_csv(FAMILIES), default=list(FAMILIES))
    p.add_argument("--classifiers", type=_csv(CLASSIFIER_CHOICES), default=list(clf.KINDS))
    _add_pipeline_args(p)
    p.add_argument("-o", "--output", required=True)

    p = sub.add_parser("scan", help="classify every file under a directory")
    p.add_argument("directory")
    p.add_argument("-m", "--model", required=True)
    p.add_argument("--no-skip-packed", action="store_true")
    p.add_argument("--no-recursive", action="store_true")
    p.add_argument("--format", choices=("table", "records"), default="table")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--behavior-map", help="category config (overrides MALDETECT_BEHAVIOR_MAP)")

    p = sub.add_parser("report", help="render a results file")
    p.add_argument("-i", "--input", required=True)
    p.add_argument("--format", choices=("table", "records"), default="table")

    p = sub.add_parser("gen-corpus", help="write a synthetic PE corpus and manifest")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--profile", choices=tuple(PRESETS), default="separable")
    p.add_argument("--n-malicious", type=int, default=100)
    p.add_argument("--n-benign", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    return parser


def cmd_extract(args) -> int:
    root = Path(args.directory)
    if not root.is_dir():
        raise UsageError(f"{root} is not a directory")
    if args.manifest:
        items = [(str(root / rel), label) for rel, label in read_manifest(args.manifest).items()]
        bad = sorted({label for _, label in items} - {MALICIOUS, BENIGN})
        if bad:
            raise UsageError(f"manifest contains unknown labels: {', '.join(bad)}")
    else:
        items = [(p, args.label) for p in iter_files(root)]
    out = Path(args.output)
    corpus = read_corpus(out) if out.exists() else Corpus()
    added = skipped = duplicates = 0
    for path, label in sorted(items):
        try:
            record = extract_file(path, label)
            if args.skip_packed and detect_packer(parse_pe(Path(path).read_bytes())).likely_packed:
                skipped += 1
                continue
        except (MaldetectError, OSError) as exc:
            log.info("skipping %s: %s", path, exc)
            skipped += 1
            continue
        if corpus.add(record):
            added += 1
        else:
            duplicates += 1
    write_corpus(corpus, out)
    print(f"added {added} records ({duplicates} duplicates, {skipped} skipped); "
          f"corpus now holds {len(corpus)}")
    return EXIT_OK


def cmd_train(args) -> int:
    corpus = read_corpus(args.corpus)
    config = _config(args, classifier=args.classifier, family=args.family)
    model = build_pipeline(corpus, config)
    save_model(model, args.output)
    meta = model.metadata
    print(f"trained {config.classifier} on {meta['n_samples']} samples: "
          f"{model.schema.dimension} features -> {model.pca.dim_out} components, "
          f"training OA {meta['training_accuracy']:.1f}%")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    corpus = read_corpus(args.corpus)
    kinds = list(dict.fromkeys(clf.canonical_kind(c) for c in args.classifiers))
    results = run_experiment_matrix(corpus, args.families, kinds, args.folds, args.seed,
                                    _config(args), paper_protocol=args.paper_protocol)
    write_results(results, args.output)
    sys.stdout.write(report(results, "table"))
    return EXIT_OK


def cmd_scan(args) -> int:
    if not Path(args.directory).exists():
        raise UsageError(f"{args.directory} does not exist")
    model = load_model(args.model)
    behavior_map = load_behavior_map(args.behavior_map)
    entries = scan_directory(args.directory, model, recursive=not args.no_recursive,
                             skip_packed=not args.no_skip_packed, workers=args.workers,
                             behavior_map=behavior_map)
    if entries or args.format == "records":
        sys.stdout.write(report(entries, args.format))
    else:
        print("no files found")
    flagged = any(e.prediction and e.prediction.label == MALICIOUS for e in entries)
    return EXIT_MALICIOUS if flagged else EXIT_OK


def cmd_report(args) -> int:
    sys.stdout.write(report(read_results(args.input), args.format))
    return EXIT_OK


def cmd_gen_corpus(args) -> int:
    if args.n_malicious < 0 or args.n_benign < 0:
        raise UsageError("sample counts must be non-negative")
    pm, pb = PRESETS[args.profile](args.n_malicious, args.n_benign, args.seed)
    manifest = gen_corpus(pm, pb, args.output)
    print(f"wrote {len(manifest)} files to {args.output}")
    return EXIT_OK


COMMANDS = {
    "extract": cmd_extract,
    "train": cmd_train,
    "evaluate": cmd_evaluate,
    "scan": cmd_scan,
    "report": cmd_report,
    "gen-corpus": cmd_gen_corpus,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"maldetect: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (MaldetectError, ValueError, OSError) as exc:
        if isinstance(exc, StageError):
            log.debug("stage failure", exc_info=exc.cause)
        print(f"maldetect: error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
