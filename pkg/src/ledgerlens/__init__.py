"""Blockchain log analysis and optimization recommendations for EOV ledgers."""

from .canonical import CANONICAL_CSV_VERSION
from .eventlog import EVENTLOG_CSV_VERSION
from .ingestion import RAW_DUMP_VERSION
from .model import BlockchainLog, Recommendation, Thresholds, TransactionRecord

__version__ = "0.1.0"

__all__ = [
    "CANONICAL_CSV_VERSION",
    "EVENTLOG_CSV_VERSION",
    "RAW_DUMP_VERSION",
    "BlockchainLog",
    "Recommendation",
    "Thresholds",
    "TransactionRecord",
    "__version__",
]
