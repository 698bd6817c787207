"""Dynamic packetization for telehaptic streams, with a dumbbell simulator."""
from .dpm import DpmController, DpmParams, RateModel, rate_kbps
from .feedback import FeedbackParams, FeedbackState, Trigger
from .mux import BACKWARD_MEDIA, FORWARD_MEDIA, MediaConfig, Multiplexer
from .wire import PacketHeader, decode_header, encode_header

__version__ = "0.1.0"

__all__ = [
    "DpmController", "DpmParams", "RateModel", "rate_kbps",
    "FeedbackParams", "FeedbackState", "Trigger",
    "MediaConfig", "Multiplexer", "FORWARD_MEDIA", "BACKWARD_MEDIA",
    "PacketHeader", "encode_header", "decode_header",
]
