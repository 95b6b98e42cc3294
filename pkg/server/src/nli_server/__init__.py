"""HTTP sidecar serving NLI scoring and sentence splitting."""

from .app import app, create_app
from .backends import StubNli, StubSplitter, clamp_splits

__version__ = "0.1.0"
