from .bus import BusMessage, FileTailBus, InProcessBus
from .catalog import PatternCatalog, default_catalog, load_catalog
from .pipeline import (
    ImportStats,
    LogSource,
    RawLine,
    batch_import,
    coalesce,
    import_directory,
    load_apps_file,
    parse_line,
)
from .stream import StreamConsumer

__all__ = [
    "BusMessage",
    "FileTailBus",
    "ImportStats",
    "InProcessBus",
    "LogSource",
    "PatternCatalog",
    "RawLine",
    "StreamConsumer",
    "batch_import",
    "coalesce",
    "default_catalog",
    "import_directory",
    "load_apps_file",
    "load_catalog",
    "parse_line",
]
