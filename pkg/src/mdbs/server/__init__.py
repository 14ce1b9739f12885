from mdbs.server.app import MdbsServer
from mdbs.server.config import ServerConfig, load_server_config

__all__ = ["MdbsServer", "ServerConfig", "load_server_config"]
