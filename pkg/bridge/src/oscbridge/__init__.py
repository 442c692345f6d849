"""Line-protocol server for external simulator tasks."""

from .server import EchoStubEnv, Session, serve, serve_lines

__version__ = "0.1.0"

__all__ = ["EchoStubEnv", "Session", "serve", "serve_lines"]
