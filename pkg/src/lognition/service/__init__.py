from .app import create_app, serve
from .config import ServiceConfig, load_config
from .stream import StreamHub

__all__ = ["ServiceConfig", "StreamHub", "create_app", "load_config", "serve"]
