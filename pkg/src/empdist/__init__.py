"""Essay-level empathy and distress regression with stacked ensembles."""

from .dataset_io import Dataset, EssayRecord, SchemaConfig, load_dataset, parse_essay_table, to_examples
from .metrics import EvalReport, averaged_pearson, evaluate, pearson

__version__ = "0.1.0"

__all__ = [
    "Dataset", "EssayRecord", "EvalReport", "SchemaConfig",
    "averaged_pearson", "evaluate", "load_dataset", "parse_essay_table", "pearson", "to_examples",
]
