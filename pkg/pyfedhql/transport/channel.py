import abc
import collections
import logging
import socket
import threading
from concurrent.futures import ThreadPoolExecutor, TimeoutError as FutureTimeoutError
from typing import Dict, Iterable, List, Optional

import numpy as np

from ..agent import BaseAgent
from ..env import Environment
from .protocol import (HEADER_SIZE, SERVER_ID, FrameError, Message, SelfLearnSignal, QueryState, QValuesReply,
                       FedTDTarget, ImproveAck, Shutdown, decode, decodeHeader, encode, toVector)

DEFAULT_TIMEOUT = 30.0
""" The default time in seconds the server waits for the reply of any agent """


class RoundAborted(Exception):
    """
    Raised by a channel when an agent fails to deliver a valid reply: a timeout, a dropped connection, an error
    within the agent or a reply that does not answer the request.
    """

    def __init__(self, agentId: int, reason: str):
        super().__init__('Round aborted by agent {:d}: {:s}'.format(agentId, reason))
        self.agentId = agentId
        self.reason = reason


class AgentWorker:
    """
    Hosts an agent together with its private copy of the environment behind the message schema. The worker is the only
    object with access to the agent; everything that reaches the server passes through :meth:`handle` and therefore
    consists only of states, action values, scalar targets and counts.
    """

    def __init__(self, agent: BaseAgent, env: Environment):
        self._agent = agent
        self._env = env

        # Episodes are continued across self-learning phases
        self._env.reset()

    def __str__(self):
        return 'AgentWorker <id: {:d}>'.format(self._agent.agentId)

    @property
    def agentId(self) -> int:
        return self._agent.agentId

    @property
    def agent(self) -> BaseAgent:
        return self._agent

    @property
    def env(self) -> Environment:
        return self._env

    def handle(self, message: Message) -> Optional[Message]:
        """
        Processes a single request from the server and produces the reply

        :param message: The request
        :return: The reply or `None` for :class:`Shutdown`
        """
        agentId = self._agent.agentId

        if isinstance(message, SelfLearnSignal):
            consumed = self._agent.selfLearn(self._env, message.steps)
            return ImproveAck(message.roundId, agentId, count=consumed)

        elif isinstance(message, QueryState):
            values = self._agent.answerQuery(np.array(message.state))
            return QValuesReply(message.roundId, agentId, values=toVector(values), tag=message.tag)

        elif isinstance(message, FedTDTarget):
            steps = self._agent.improve(np.array(message.state), message.action, message.target)
            return ImproveAck(message.roundId, agentId, count=steps)

        elif isinstance(message, Shutdown):
            return None

        raise ValueError('Agent cannot handle a message of kind {:s}'.format(type(message).__name__))

    def handleFrame(self, frame: bytes) -> Optional[bytes]:
        reply = self.handle(decode(frame))
        return None if reply is None else encode(reply)


def expectedReply(request: Message, reply: Message, agentId: int) -> bool:
    """ Checks that a reply answers the request: kind, round id, sender and state tag must match """

    if reply.roundId != request.roundId or reply.agentId != agentId:
        return False

    if isinstance(request, QueryState):
        return isinstance(reply, QValuesReply) and reply.tag == request.tag

    if isinstance(request, (SelfLearnSignal, FedTDTarget)):
        return isinstance(reply, ImproveAck)

    return False


class BaseChannel(abc.ABC):
    """
    A synchronous channel between the server and :math:`N` agents. Requests are encoded into frames and delivered to
    each agent in FIFO order; the server waits for the replies of every addressed agent before returning.
    """

    def __init__(self, agentIds: Iterable[int], timeout: float = DEFAULT_TIMEOUT):

        self._agentIds = sorted(agentIds)
        self._timeout = timeout
        self._closed = False

        self._framesSent = 0
        self._bytesSent = 0
        self._bytesReceived = 0

        if len(self._agentIds) == 0:
            raise ValueError('A channel requires at least one agent')

        if len(set(self._agentIds)) != len(self._agentIds) or SERVER_ID in self._agentIds:
            raise ValueError('Agent ids must be unique and non-zero')

    def __enter__(self):
        return self

    def __exit__(self, excType, excValue, traceback):
        self.close()

    @property
    def agentIds(self) -> List[int]:
        return list(self._agentIds)

    @property
    def numAgents(self) -> int:
        return len(self._agentIds)

    @property
    def timeout(self) -> float:
        return self._timeout

    @property
    def framesSent(self) -> int:
        return self._framesSent

    @property
    def bytesSent(self) -> int:
        return self._bytesSent

    @property
    def bytesReceived(self) -> int:
        return self._bytesReceived

    @property
    def isClosed(self) -> bool:
        return self._closed

    @abc.abstractmethod
    def _submit(self, agentId: int, frame: bytes) -> None:
        """ Queues a frame for delivery to an agent """
        raise NotImplementedError('Abstract method should be implemented in derived class')

    @abc.abstractmethod
    def _result(self, agentId: int) -> bytes:
        """ Waits for the next reply frame of an agent, raising :class:`RoundAborted` on failure """
        raise NotImplementedError('Abstract method should be implemented in derived class')

    @abc.abstractmethod
    def _discard(self, agentId: int) -> None:
        """ Drops the next reply of an agent, which belongs to an aborted request """
        raise NotImplementedError('Abstract method should be implemented in derived class')

    @abc.abstractmethod
    def _shutdown(self) -> None:
        raise NotImplementedError('Abstract method should be implemented in derived class')

    def scatter(self, messages: Dict[int, Message]) -> Dict[int, Message]:
        """
        Delivers a message to each addressed agent and waits for all of their replies

        :param messages: The request for each agent id
        :return: The validated reply of each agent id
        """
        if self._closed:
            raise RuntimeError('Channel is closed')

        for agentId in messages.keys():
            if agentId not in self._agentIds:
                raise ValueError('Agent {:d} is not registered with the channel'.format(agentId))

        frames = {agentId: encode(message) for agentId, message in messages.items()}

        replies = {}
        outstanding = collections.deque()

        try:
            for agentId, message in messages.items():
                self._submit(agentId, frames[agentId])
                outstanding.append((agentId, message))
                self._framesSent += 1
                self._bytesSent += len(frames[agentId])

            while outstanding:

                agentId, message = outstanding.popleft()

                frame = self._result(agentId)
                self._bytesReceived += len(frame)

                try:
                    reply = decode(frame)
                except FrameError as e:
                    raise RoundAborted(agentId, 'invalid reply frame ({:s})'.format(str(e)))

                if not expectedReply(message, reply, agentId):
                    raise RoundAborted(agentId, 'reply {:s} does not answer {:s}'.format(
                                       type(reply).__name__, type(message).__name__))
                replies[agentId] = reply
        finally:
            # Replies still owed to an aborted scatter must not be read by the next request
            for agentId, message in outstanding:
                self._discard(agentId)

        return replies

    def request(self, agentId: int, message: Message) -> Message:
        """ Delivers a message to a single agent and returns its reply """
        return self.scatter({agentId: message})[agentId]

    def broadcast(self, message: Message) -> Dict[int, Message]:
        """
        Delivers the same message to every registered agent

        :param message: The request
        :return: The reply of every agent, keyed by agent id in ascending order
        """
        return self.scatter({agentId: message for agentId in self._agentIds})

    def close(self) -> None:
        """ Sends :class:`Shutdown` to every agent and releases the channel. Closing twice has no effect """
        if self._closed:
            return

        self._closed = True

        logging.debug('Closing {:s} ({:d} frames, {:d} bytes sent)'.format(type(self).__name__, self._framesSent,
                                                                          self._bytesSent))
        self._shutdown()


class InProcessChannel(BaseChannel):
    """
    A channel to agents hosted in the same process. Each agent is served by its own single threaded executor, which
    acts as its FIFO mailbox, so self-learning phases of different agents run concurrently. Requests and replies are
    encoded into frames on every hop exactly as for the socket backend.
    """

    def __init__(self, workers: Iterable[AgentWorker], timeout: float = DEFAULT_TIMEOUT):

        workers = list(workers)

        super().__init__([w.agentId for w in workers], timeout)

        self._workers = {w.agentId: w for w in workers}
        self._executors = {w.agentId: ThreadPoolExecutor(max_workers=1, thread_name_prefix='agent{:d}'.format(w.agentId))
                           for w in workers}
        self._pending = {agentId: collections.deque() for agentId in self._agentIds}

    def _submit(self, agentId: int, frame: bytes) -> None:
        future = self._executors[agentId].submit(self._workers[agentId].handleFrame, frame)
        self._pending[agentId].append(future)

    def _result(self, agentId: int) -> bytes:

        future = self._pending[agentId].popleft()

        try:
            frame = future.result(timeout=self._timeout)
        except FutureTimeoutError:
            future.cancel()
            logging.error('Agent {:d} did not reply within {:g} s'.format(agentId, self._timeout))
            raise RoundAborted(agentId, 'timeout after {:g} s'.format(self._timeout))
        except Exception as e:
            logging.error('Agent {:d} failed: {:s}'.format(agentId, str(e)))
            raise RoundAborted(agentId, 'agent error ({:s})'.format(str(e)))

        if frame is None:
            raise RoundAborted(agentId, 'no reply')

        return frame

    def _discard(self, agentId: int) -> None:
        # A request that is already running cannot be cancelled, its reply is dropped with the future
        self._pending[agentId].popleft().cancel()

    def _shutdown(self) -> None:

        frame = encode(Shutdown())

        for agentId, executor in self._executors.items():
            pending = self._pending[agentId]

            while pending:
                pending.popleft().cancel()

            executor.submit(self._workers[agentId].handleFrame, frame)
            executor.shutdown(wait=True)


def sendFrame(sock: socket.socket, frame: bytes) -> None:
    sock.sendall(frame)


def receiveExactly(sock: socket.socket, size: int) -> bytes:
    """ Reads exactly `size` bytes from a stream socket, raising :class:`ConnectionError` when the peer closes """
    buffer = bytearray()

    while len(buffer) < size:
        chunk = sock.recv(size - len(buffer))

        if not chunk:
            raise ConnectionError('Connection closed by peer')

        buffer.extend(chunk)

    return bytes(buffer)


def receiveFrame(sock: socket.socket) -> bytes:
    """ Reads one length-prefixed frame from a stream socket """
    header = receiveExactly(sock, HEADER_SIZE)
    kind, roundId, agentId, payloadLen = decodeHeader(header)

    return header + receiveExactly(sock, payloadLen)


def hostAgent(worker: AgentWorker, host: str, port: int) -> None:
    """
    Connects an agent worker to the server and serves its requests until :class:`Shutdown` or until the connection is
    dropped. The agent announces itself with an :class:`ImproveAck` carrying round id 0 and count 0.

    :param worker: The agent worker
    :param host: The server address
    :param port: The server port
    """
    with socket.create_connection((host, port)) as sock:

        sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
        sendFrame(sock, encode(ImproveAck(0, worker.agentId, count=0)))

        while True:
            try:
                frame = receiveFrame(sock)
            except (ConnectionError, OSError, FrameError):
                logging.debug('\t - agent {:d} connection closed'.format(worker.agentId))
                return

            try:
                reply = worker.handleFrame(frame)
            except Exception as e:
                logging.error('Agent {:d} failed: {:s}'.format(worker.agentId, str(e)))
                return

            if reply is None:
                return

            try:
                sendFrame(sock, reply)
            except OSError:
                logging.debug('\t - agent {:d} connection closed before its reply'.format(worker.agentId))
                return


class TcpChannel(BaseChannel):
    """
    A channel to agents connected through localhost TCP streams. Each agent is hosted by its own thread which connects
    to the listening server socket. Every connection is an independent ordered and reliable duplex stream, so requests
    are delivered to each agent in FIFO order. A dropped connection aborts the round.
    """

    def __init__(self, workers: Iterable[AgentWorker], port: int = 0, host: str = '127.0.0.1',
                 timeout: float = DEFAULT_TIMEOUT):

        workers = list(workers)

        super().__init__([w.agentId for w in workers], timeout)

        self._host = host
        self._connections = {}

        self._listener = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        self._listener.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        self._listener.bind((host, port))
        self._listener.listen(len(workers))
        self._listener.settimeout(timeout)

        self._port = self._listener.getsockname()[1]

        logging.info('Listening for {:d} agents on {:s}:{:d}'.format(len(workers), host, self._port))

        self._threads = [threading.Thread(target=hostAgent, args=(w, host, self._port),
                                          name='agent{:d}'.format(w.agentId), daemon=True) for w in workers]

        for thread in self._threads:
            thread.start()

        try:
            self._acceptAgents()
        except Exception:
            self._closed = True
            self._closeSockets()
            raise

    @property
    def port(self) -> int:
        return self._port

    def _acceptAgents(self) -> None:

        while len(self._connections) < len(self._agentIds):

            try:
                conn, address = self._listener.accept()
            except socket.timeout:
                missing = [a for a in self._agentIds if a not in self._connections]
                raise RoundAborted(missing[0], 'agent did not connect within {:g} s'.format(self._timeout))

            conn.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
            conn.settimeout(self._timeout)

            hello = decode(receiveFrame(conn))

            if not isinstance(hello, ImproveAck) or hello.agentId not in self._agentIds or \
                    hello.agentId in self._connections:
                conn.close()
                raise ValueError('Unexpected hello from {:s}'.format(str(address)))

            self._connections[hello.agentId] = conn

            logging.debug('\t - agent {:d} connected from {:s}'.format(hello.agentId, str(address)))

    def _submit(self, agentId: int, frame: bytes) -> None:
        try:
            sendFrame(self._connections[agentId], frame)
        except OSError as e:
            raise RoundAborted(agentId, 'connection dropped ({:s})'.format(str(e)))

    def _result(self, agentId: int) -> bytes:
        try:
            return receiveFrame(self._connections[agentId])
        except socket.timeout:
            # A late reply must never be read as the answer to a later request
            logging.error('Agent {:d} did not reply within {:g} s, closing its connection'.format(agentId,
                                                                                               self._timeout))
            self._connections[agentId].close()
            raise RoundAborted(agentId, 'timeout after {:g} s'.format(self._timeout))
        except FrameError as e:
            self._connections[agentId].close()
            raise RoundAborted(agentId, 'invalid reply frame ({:s})'.format(str(e)))
        except (ConnectionError, OSError) as e:
            logging.error('Connection to agent {:d} dropped'.format(agentId))
            raise RoundAborted(agentId, 'connection dropped ({:s})'.format(str(e)))

    def _discard(self, agentId: int) -> None:
        try:
            self._result(agentId)
        except RoundAborted:
            pass

    def _closeSockets(self) -> None:

        for conn in self._connections.values():
            conn.close()

        self._listener.close()

    def _shutdown(self) -> None:

        frame = encode(Shutdown())

        for conn in self._connections.values():
            try:
                sendFrame(conn, frame)
            except OSError:
                pass

        for thread in self._threads:
            thread.join(timeout=self._timeout)

        self._closeSockets()
