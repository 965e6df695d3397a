from .engine import EventStore, StoreStats, TypeInfo, WriteReceipt
from .keys import PartitionKey, Table

__all__ = [
    "EventStore",
    "PartitionKey",
    "StoreStats",
    "Table",
    "TypeInfo",
    "WriteReceipt",
]
