from .client import Client
from .common import ProtocolAbort, RoundConfig, accusation_transcript, apply_global_update
from .messages import SERVER, Envelope, Tag
from .server import Phase, Server, Verdict
from .wire import WireError, decode, encode

__all__ = [
    "Client",
    "Envelope",
    "Phase",
    "ProtocolAbort",
    "RoundConfig",
    "SERVER",
    "Server",
    "Tag",
    "Verdict",
    "WireError",
    "accusation_transcript",
    "apply_global_update",
    "decode",
    "encode",
]
