from .protocol import (MAGIC, VERSION, HEADER_SIZE, MAX_PAYLOAD, SERVER_ID, MESSAGE_TYPES, MessageKind, StateTag,
                       Message, SelfLearnSignal, QueryState, QValuesReply, FedTDTarget, ImproveAck, Shutdown,
                       FrameError, BadMagic, BadVersion, UnknownKind, LengthMismatch, TruncatedFrame,
                       MalformedPayload, PayloadTooLarge, encode, decode, decodeHeader, toVector)
from .channel import (DEFAULT_TIMEOUT, RoundAborted, AgentWorker, BaseChannel, InProcessChannel, TcpChannel,
                      hostAgent, receiveFrame)
