"""Persistent refinement services over pipe transports.

The server side is a sequential read-dispatch-respond loop on a pair of
byte streams (child stdio or a named-pipe pair). The client side spawns the
child, waits for its ready sentinel, and multiplexes request/response
frames by id so several threads can share one handle.
"""

from __future__ import annotations

import errno
import itertools
import logging
import os
import subprocess
import sys
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import BinaryIO, Callable, Optional

from .errors import (
    GtpMeshError,
    MalformedPayloadError,
    OversizeError,
    ParseError,
    PipeBrokenError,
    ReadyTimeoutError,
    RequestTimeoutError,
    ServiceError,
    SpawnFailedError,
    TruncatedError,
)
from .framing import Frame, read_frame, write_frame

log = logging.getLogger(__name__)

OP_REFINE = "refine"
OP_HEALTH = "health"
OP_SHUTDOWN = "shutdown"
OP_READY = "ready"
OP_ERROR = "error"

DEFAULT_READY_TIMEOUT = 30.0

_CONFIG_KEYS = {
    "transport",
    "fifo_in",
    "fifo_out",
    "lexicon",
    "homograph_db",
    "ezafe_model",
    "inventory",
    "load_delay_s",
    "ready_timeout_s",
    "ignore_shutdown",
}


@dataclass
class ServiceConfig:
    """Parsed ``key=value`` service config; paths are resolved against the file."""

    transport: str = "stdio"
    fifo_in: Optional[Path] = None
    fifo_out: Optional[Path] = None
    lexicon: Optional[Path] = None
    homograph_db: Optional[Path] = None
    ezafe_model: Optional[Path] = None
    inventory: Optional[Path] = None
    load_delay_s: float = 0.0
    ready_timeout_s: float = DEFAULT_READY_TIMEOUT
    ignore_shutdown: bool = False  # fault-injection hook for supervision tests
    path: Optional[Path] = None


def load_service_config(path) -> ServiceConfig:
    path = Path(path)
    cfg = ServiceConfig(path=path)
    base = path.parent
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ParseError(line_no, f"expected key=value, got {line!r}", path)
            key, value = line.split("=", 1)
            key = key.strip()
            value = value.strip()
            if key not in _CONFIG_KEYS:
                raise ParseError(line_no, f"unknown config key {key!r}", path)
            try:
                if key == "transport":
                    if value not in ("stdio", "fifo"):
                        raise ValueError(f"transport must be stdio or fifo, not {value!r}")
                    cfg.transport = value
                elif key in ("fifo_in", "fifo_out", "lexicon", "homograph_db", "ezafe_model", "inventory"):
                    setattr(cfg, key, (base / value).resolve() if value else None)
                elif key in ("load_delay_s", "ready_timeout_s"):
                    setattr(cfg, key, float(value))
                elif key == "ignore_shutdown":
                    cfg.ignore_shutdown = value not in ("0", "false", "")
            except ValueError as exc:
                raise ParseError(line_no, str(exc), path) from exc
    if cfg.transport == "fifo" and (cfg.fifo_in is None or cfg.fifo_out is None):
        raise ParseError(0, "fifo transport needs fifo_in and fifo_out", path)
    return cfg


def serve(
    handler: Callable[[dict], dict],
    in_stream: BinaryIO,
    out_stream: BinaryIO,
    ignore_shutdown: bool = False,
) -> None:
    """Sequential service loop: ready sentinel first, then one response per
    request in arrival order, until a shutdown op or the input stream closes.

    ``handler`` receives a refine request body and returns the response body.
    Malformed frames get an error frame with id 0; the loop continues.
    """
    write_frame(out_stream, 0, OP_READY, {})
    while True:
        try:
            frame = read_frame(in_stream)
        except (MalformedPayloadError, OversizeError) as exc:
            write_frame(out_stream, 0, OP_ERROR, {"error": str(exc)})
            continue
        except TruncatedError:
            log.warning("input stream ended mid-frame")
            return
        if frame is None:
            return
        if frame.op == OP_HEALTH:
            write_frame(out_stream, frame.id, OP_HEALTH, {"status": "ready"})
        elif frame.op == OP_SHUTDOWN:
            if ignore_shutdown:
                continue
            write_frame(out_stream, frame.id, OP_SHUTDOWN, {"status": "stopping"})
            return
        elif frame.op == OP_REFINE:
            try:
                response = handler(frame.body)
            except GtpMeshError as exc:
                write_frame(out_stream, frame.id, OP_ERROR, {"error": str(exc)})
                continue
            write_frame(out_stream, frame.id, OP_REFINE, response)
        else:
            write_frame(out_stream, frame.id, OP_ERROR, {"error": f"unknown op {frame.op!r}"})


class _Waiter:
    __slots__ = ("event", "frame")

    def __init__(self):
        self.event = threading.Event()
        self.frame: Optional[Frame] = None


@dataclass
class ServiceHandle:
    """Client end of a spawned service process."""

    process: subprocess.Popen
    config: ServiceConfig
    state: str = "starting"  # starting -> ready -> stopping -> dead
    load_time: float = 0.0
    _in: Optional[BinaryIO] = None  # we write requests here
    _out: Optional[BinaryIO] = None  # reader thread reads responses here
    _reader: Optional[threading.Thread] = None
    _ready: threading.Event = field(default_factory=threading.Event)
    _lock: threading.Lock = field(default_factory=threading.Lock)
    _write_lock: threading.Lock = field(default_factory=threading.Lock)
    _ids: "itertools.count" = field(default_factory=lambda: itertools.count(1))
    _waiters: dict = field(default_factory=dict)
    _exit_status: Optional[int] = None

    @property
    def pid(self) -> int:
        return self.process.pid

    def _reader_loop(self):
        try:
            if self._out is None:  # fifo transport: blocking open waits for the child
                self._out = open(self.config.fifo_out, "rb")
            while True:
                frame = read_frame(self._out)
                if frame is None:
                    break
                if frame.id == 0:
                    if frame.op == OP_READY:
                        self._ready.set()
                    else:
                        log.warning("service error frame: %s", frame.body)
                    continue
                with self._lock:
                    waiter = self._waiters.get(frame.id)
                if waiter is not None:
                    waiter.frame = frame
                    waiter.event.set()
                else:
                    log.warning("dropping response for unknown id %d", frame.id)
        except (OSError, ValueError, GtpMeshError) as exc:
            log.debug("service reader stopped: %s", exc)
        finally:
            self._mark_dead()

    def _mark_dead(self):
        with self._lock:
            if self.state != "dead":
                self.state = "dead"
            waiters = list(self._waiters.values())
            self._waiters.clear()
        for waiter in waiters:
            waiter.event.set()  # wakes with frame still None -> broken pipe

    def request(self, op: str, body: dict, timeout: float = 30.0) -> dict:
        """Send one request and return the response body with the same id."""
        with self._lock:
            if self.state != "ready":
                raise PipeBrokenError(f"service is {self.state}")
            frame_id = next(self._ids)
            waiter = _Waiter()
            self._waiters[frame_id] = waiter
        try:
            try:
                with self._lock:
                    write_frame(self._in, frame_id, op, body)
            except (OSError, ValueError) as exc:
                self._mark_dead()
                raise PipeBrokenError(f"write failed: {exc}") from exc
            if not waiter.event.wait(timeout):
                raise RequestTimeoutError(f"no response to {op} id={frame_id} within {timeout}s")
            if waiter.frame is None:
                raise PipeBrokenError("service connection closed while waiting")
            if waiter.frame.op == OP_ERROR:
                raise ServiceError(waiter.frame.body.get("error", "unknown service error"))
            return waiter.frame.body
        finally:
            with self._lock:
                self._waiters.pop(frame_id, None)


def spawn_service(
    config_path,
    python: Optional[str] = None,
    extra_env: Optional[dict] = None,
) -> ServiceHandle:
    """Start ``serve`` in a child process and block until it is ready.

    The measured spawn-to-ready wall time lands in ``handle.load_time``.
    """
    config = load_service_config(config_path)
    argv = [python or sys.executable, "-m", "gtp_mesh", "serve", "--config", str(config_path)]
    env = dict(os.environ, **(extra_env or {}))
    start = time.perf_counter()
    if config.transport == "fifo":
        for fifo in (config.fifo_in, config.fifo_out):
            if not fifo.exists():
                os.mkfifo(fifo)
        process = subprocess.Popen(argv, env=env)
        handle = ServiceHandle(process=process, config=config)
        handle._in = _open_fifo_writer(handle, config.fifo_in, config.ready_timeout_s, start)
    else:
        process = subprocess.Popen(argv, stdin=subprocess.PIPE, stdout=subprocess.PIPE, env=env)
        handle = ServiceHandle(process=process, config=config)
        handle._in = process.stdin
        handle._out = process.stdout
    handle._reader = threading.Thread(target=handle._reader_loop, daemon=True)
    handle._reader.start()
    deadline = start + config.ready_timeout_s
    while not handle._ready.wait(0.05):
        if process.poll() is not None:
            handle._mark_dead()
            raise SpawnFailedError(f"service exited with status {process.returncode} before ready")
        if time.perf_counter() > deadline:
            process.kill()
            process.wait()
            handle._mark_dead()
            raise ReadyTimeoutError(f"no ready sentinel within {config.ready_timeout_s}s")
    handle.load_time = time.perf_counter() - start
    handle.state = "ready"
    return handle


def _open_fifo_writer(handle: ServiceHandle, fifo_in: Path, timeout: float, start: float) -> BinaryIO:
    """Open the request pipe without blocking forever if the child dies first."""
    deadline = start + timeout
    while True:
        try:
            fd = os.open(fifo_in, os.O_WRONLY | os.O_NONBLOCK)
            break
        except OSError as exc:
            if exc.errno != errno.ENXIO:
                raise
            if handle.process.poll() is not None:
                raise SpawnFailedError(
                    f"service exited with status {handle.process.returncode} before opening its pipe"
                ) from exc
            if time.perf_counter() > deadline:
                handle.process.kill()
                handle.process.wait()
                raise ReadyTimeoutError(f"service did not open {fifo_in} within {timeout}s") from exc
            time.sleep(0.01)
    os.set_blocking(fd, True)
    return os.fdopen(fd, "wb")


def shutdown(handle: ServiceHandle, timeout: float = 5.0) -> int:
    """Stop the service: graceful shutdown op, then terminate, then kill.

    Idempotent; always leaves the handle dead and returns the exit status.
    """
    with handle._lock:
        if handle.state == "dead":
            if handle._exit_status is None:
                handle._exit_status = handle.process.wait()
            return handle._exit_status
        handle.state = "stopping"
    try:
        with handle._lock:
            frame_id = next(handle._ids)
            waiter = _Waiter()
            handle._waiters[frame_id] = waiter
            write_frame(handle._in, frame_id, OP_SHUTDOWN, {})
        waiter.event.wait(timeout)
    except (OSError, ValueError):
        pass  # pipe already gone; escalation below still applies
    finally:
        with handle._lock:
            handle._waiters.pop(frame_id, None)
    try:
        handle.process.wait(timeout=timeout)
    except subprocess.TimeoutExpired:
        handle.process.terminate()
        try:
            handle.process.wait(timeout=timeout)
        except subprocess.TimeoutExpired:
            handle.process.kill()
            handle.process.wait()
    for stream in (handle._in, handle._out):
        if stream is not None:
            try:
                stream.close()
            except OSError:
                pass
    handle._mark_dead()
    handle._exit_status = handle.process.returncode
    return handle._exit_status
