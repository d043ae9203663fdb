from enum import Enum


class Subcommand(str, Enum):
    """Command-line subcommands"""
    EXACT = "exact"
    SAMPLE = "sample"
    GAP_SCAN = "gap-scan"
    CONTOUR_AUDIT = "contour-audit"
    FLOW_AUDIT = "flow-audit"
    APPROX_AUDIT = "approx-audit"
    ISO = "iso"
    REPLAY = "replay"


class ArtifactFormat(str, Enum):
    """Artifact layout written for a subcommand"""
    JSON = "json"
    JSONL = "jsonl"
    CSV = "csv"


class ExactQuantity(str, Enum):
    OCCUPATION = "occupation"
    PARTITION_FUNCTION = "partition_function"
    PROB_J0 = "prob_J0"
