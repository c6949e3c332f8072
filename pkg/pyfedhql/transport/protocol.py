"""
The closed message schema exchanged between the server and the agents, together with its binary framing.

Every frame consists of a fixed 20 byte little-endian header followed by the payload::

    magic "FHQL" | version u8 | kind u8 | round_id u64 | agent_id u16 | payload_len u32 | payload

Real values are encoded as IEEE-754 binary64 little-endian. The schema can only represent states, action values,
scalar targets, step counts and acknowledgements; there is no message that can carry weights, gradients,
architecture descriptors or transitions.
"""

import struct
from dataclasses import dataclass
from enum import IntEnum
from typing import Tuple, Union

import numpy as np

MAGIC = b'FHQL'
VERSION = 1

HEADER = struct.Struct('<4sBBQHI')
HEADER_SIZE = HEADER.size

MAX_PAYLOAD = 2 ** 32 - 1

SERVER_ID = 0
""" The agent id of messages originating from the server """


class MessageKind(IntEnum):
    SelfLearnSignal = 1
    QueryState = 2
    QValuesReply = 3
    FedTDTarget = 4
    ImproveAck = 5
    Shutdown = 6


class StateTag(IntEnum):
    Current = 0
    """ The query concerns the current server state :math:`s_t` """

    Next = 1
    """ The query concerns the next server state :math:`s_{t+1}` """


class FrameError(ValueError):
    """ Base class of every error raised whilst decoding a frame """
    pass


class BadMagic(FrameError):
    pass


class BadVersion(FrameError):
    pass


class UnknownKind(FrameError):
    pass


class LengthMismatch(FrameError):
    pass


class TruncatedFrame(FrameError):
    pass


class MalformedPayload(FrameError):
    """ The payload length or contents are inconsistent with the message kind """
    pass


class PayloadTooLarge(ValueError):
    pass


@dataclass(frozen=True)
class Message:
    roundId: int = 0
    agentId: int = SERVER_ID

    kind = None


@dataclass(frozen=True)
class SelfLearnSignal(Message):
    """ Instructs an agent to self-learn for a number of interactions """
    steps: int = 0

    kind = MessageKind.SelfLearnSignal


@dataclass(frozen=True)
class QueryState(Message):
    """ A state broadcast by the server for which every agent reports its action values """
    state: Tuple[float, ...] = ()
    tag: StateTag = StateTag.Current

    kind = MessageKind.QueryState


@dataclass(frozen=True)
class QValuesReply(Message):
    """ An agent's action values :math:`Q_n(s, \\cdot)` at a queried state """
    values: Tuple[float, ...] = ()
    tag: StateTag = StateTag.Current

    kind = MessageKind.QValuesReply


@dataclass(frozen=True)
class FedTDTarget(Message):
    """ The FedTD updated value :math:`\\bar{Q}(s_t, \\bar{a}_t)` used for individual improvement """
    state: Tuple[float, ...] = ()
    action: int = 0
    target: float = 0.0

    kind = MessageKind.FedTDTarget


@dataclass(frozen=True)
class ImproveAck(Message):
    """ Acknowledges a self-learning phase or an improvement with the number of steps performed """
    count: int = 0

    kind = MessageKind.ImproveAck


@dataclass(frozen=True)
class Shutdown(Message):
    kind = MessageKind.Shutdown


MESSAGE_TYPES = {
    MessageKind.SelfLearnSignal: SelfLearnSignal,
    MessageKind.QueryState: QueryState,
    MessageKind.QValuesReply: QValuesReply,
    MessageKind.FedTDTarget: FedTDTarget,
    MessageKind.ImproveAck: ImproveAck,
    MessageKind.Shutdown: Shutdown
}
""" The closed schema: every message kind and its type """


def toVector(values) -> Tuple[float, ...]:
    """ Converts an array of reals into the immutable representation used by messages """
    return tuple(float(v) for v in np.asarray(values, dtype=np.float64).ravel())


def _packReals(values) -> bytes:
    return np.asarray(values, dtype='<f8').tobytes()


def _unpackReals(data: bytes) -> Tuple[float, ...]:
    if len(data) % 8 != 0:
        raise MalformedPayload('Real-valued payload of {:d} bytes is not a multiple of 8'.format(len(data)))

    return tuple(float(v) for v in np.frombuffer(data, dtype='<f8'))


def _encodePayload(m: Message) -> bytes:

    if isinstance(m, SelfLearnSignal):
        return struct.pack('<I', m.steps)
    elif isinstance(m, QueryState):
        return struct.pack('<B', int(m.tag)) + _packReals(m.state)
    elif isinstance(m, QValuesReply):
        return struct.pack('<B', int(m.tag)) + _packReals(m.values)
    elif isinstance(m, FedTDTarget):
        return struct.pack('<Id', m.action, m.target) + _packReals(m.state)
    elif isinstance(m, ImproveAck):
        return struct.pack('<I', m.count)
    elif isinstance(m, Shutdown):
        return b''

    raise ValueError('Message type {:s} is not part of the schema'.format(type(m).__name__))


def encode(m: Message) -> bytes:
    """
    Encodes a message into a frame. The encoding is deterministic.

    :param m: The message
    :return: The frame bytes
    """
    try:
        payload = _encodePayload(m)
    except struct.error as e:
        raise ValueError('Invalid {:s} payload fields: {:s}'.format(type(m).__name__, str(e)))

    if len(payload) > MAX_PAYLOAD:
        raise PayloadTooLarge('Payload of {:d} bytes exceeds the frame limit'.format(len(payload)))

    try:
        header = HEADER.pack(MAGIC, VERSION, int(m.kind), m.roundId, m.agentId, len(payload))
    except struct.error as e:
        raise ValueError('Invalid message header fields: {:s}'.format(str(e)))

    return header + payload


def decodeHeader(data: bytes) -> Tuple[MessageKind, int, int, int]:
    """
    Parses and validates a frame header

    :param data: At least :data:`HEADER_SIZE` bytes
    :return: A tuple of (kind, round id, agent id, payload length)
    """
    if len(data) < HEADER_SIZE:
        if len(data) >= 4 and bytes(data[:4]) != MAGIC:
            raise BadMagic('Frame does not start with the magic bytes')

        raise TruncatedFrame('Frame header requires {:d} bytes, got {:d}'.format(HEADER_SIZE, len(data)))

    magic, version, kind, roundId, agentId, payloadLen = HEADER.unpack_from(data)

    if magic != MAGIC:
        raise BadMagic('Frame does not start with the magic bytes')

    if version != VERSION:
        raise BadVersion('Unsupported frame version {:d}'.format(version))

    try:
        kind = MessageKind(kind)
    except ValueError:
        raise UnknownKind('Unknown message kind {:d}'.format(kind))

    return kind, roundId, agentId, payloadLen


def _decodePayload(kind: MessageKind, roundId: int, agentId: int, payload: bytes) -> Message:

    if kind in (MessageKind.SelfLearnSignal, MessageKind.ImproveAck):
        if len(payload) != 4:
            raise MalformedPayload('{:s} payload must be 4 bytes'.format(kind.name))

        count, = struct.unpack('<I', payload)

        if kind == MessageKind.SelfLearnSignal:
            return SelfLearnSignal(roundId, agentId, steps=count)

        return ImproveAck(roundId, agentId, count=count)

    if kind in (MessageKind.QueryState, MessageKind.QValuesReply):
        if len(payload) < 1:
            raise MalformedPayload('{:s} payload requires a state tag'.format(kind.name))

        try:
            tag = StateTag(payload[0])
        except ValueError:
            raise MalformedPayload('Invalid state tag {:d}'.format(payload[0]))

        values = _unpackReals(payload[1:])

        if kind == MessageKind.QueryState:
            return QueryState(roundId, agentId, state=values, tag=tag)

        return QValuesReply(roundId, agentId, values=values, tag=tag)

    if kind == MessageKind.FedTDTarget:
        if len(payload) < 12:
            raise MalformedPayload('FedTDTarget payload requires an action and a target')

        action, target = struct.unpack_from('<Id', payload)
        return FedTDTarget(roundId, agentId, state=_unpackReals(payload[12:]), action=action, target=target)

    if len(payload) != 0:
        raise MalformedPayload('Shutdown carries no payload')

    return Shutdown(roundId, agentId)


def decode(data: Union[bytes, bytearray, memoryview]) -> Message:
    """
    Decodes a single complete frame. Any malformed input is rejected with a distinct :class:`FrameError`.

    :param data: The frame bytes
    :return: The message
    """
    data = bytes(data)

    kind, roundId, agentId, payloadLen = decodeHeader(data)

    available = len(data) - HEADER_SIZE

    if available < payloadLen:
        raise TruncatedFrame('Frame payload requires {:d} bytes, got {:d}'.format(payloadLen, available))

    if available > payloadLen:
        raise LengthMismatch('Frame carries {:d} bytes beyond its declared payload'.format(available - payloadLen))

    return _decodePayload(kind, roundId, agentId, data[HEADER_SIZE:])
