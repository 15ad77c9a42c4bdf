"""Static malware detection for Windows PE files.

Header, DLL and API features are ranked and selected, reduced with PCA and
fed to naive Bayes, a C4.5-style tree or a linear SVM.
"""
from .errors import MaldetectError
from .evaluation import cross_validate, run_experiment_matrix, stratified_folds
from .features import (BENIGN, MALICIOUS, UNLABELED, Corpus, RawFeatureRecord, extract_raw,
                       read_corpus, write_corpus)
from .pe_parser import PeFile, detect_packer, is_pe, parse_pe
from .pipeline import (PipelineConfig, PipelineModel, build_pipeline, load_model, save_model,
                       scan_directory)

__version__ = "0.1.0"

__all__ = [
    "BENIGN", "MALICIOUS", "UNLABELED", "Corpus", "MaldetectError", "PeFile",
    "PipelineConfig", "PipelineModel", "RawFeatureRecord", "build_pipeline",
    "cross_validate", "detect_packer", "extract_raw", "is_pe", "load_model", "parse_pe",
    "read_corpus", "run_experiment_matrix", "save_model", "scan_directory", "stratified_folds",
    "write_corpus",
]
