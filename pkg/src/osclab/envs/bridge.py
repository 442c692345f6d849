"""Client adapter for external simulator tasks served over a line protocol.

One JSON object per line, one response per request, in order.  Requests:

    {"op": "spec"}
    {"op": "reset", "seed": 123}
    {"op": "step", "action": [0.1, -0.2]}
    {"op": "close"}

Responses carry ``{"ok": true, ...}`` or ``{"ok": false, "error": "..."}``.
Floats are serialized with Python's shortest round-trip repr, so values
survive the wire bit-exactly.  The server applies no wrappers; disturbance
protocols for bridged tasks are observation-level only and live on this
side of the pipe.

Transports: a spawned subprocess speaking the protocol on stdio (default)
or an existing TCP endpoint.  Any response slower than ``timeout`` seconds,
a closed pipe, or a malformed reply raises :class:`BridgeError`, which the
experiment loop surfaces as an aborted, incomplete run.
"""

from __future__ import annotations

import json
import math
import select
import shlex
import socket
import subprocess

import numpy as np

from .base import Environment, EnvSpec, EpisodeOverError, StepResult

DEFAULT_TIMEOUT = 10.0


class BridgeError(RuntimeError):
    """Protocol failure: timeout, closed connection, or error response."""


class _StdioChannel:
    def __init__(self, command: list[str]):
        self._proc = subprocess.Popen(
            command,
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
        )
        self._buffer = b""

    def send(self, line: str) -> None:
        try:
            self._proc.stdin.write(line.encode("utf-8") + b"\n")
            self._proc.stdin.flush()
        except (BrokenPipeError, OSError) as exc:
            raise BridgeError("bridge server pipe closed") from exc

    def recv(self, timeout: float) -> str:
        fd = self._proc.stdout
        while b"\n" not in self._buffer:
            ready, _, _ = select.select([fd], [], [], timeout)
            if not ready:
                raise BridgeError(f"bridge server response timed out after {timeout}s")
            chunk = fd.read1(65536)
            if not chunk:
                raise BridgeError("bridge server closed the connection")
            self._buffer += chunk
        line, self._buffer = self._buffer.split(b"\n", 1)
        return line.decode("utf-8")

    def close(self) -> None:
        try:
            self._proc.stdin.close()
        except OSError:
            pass
        try:
            self._proc.wait(timeout=2.0)
        except subprocess.TimeoutExpired:
            self._proc.kill()


class _TcpChannel:
    def __init__(self, host: str, port: int):
        self._sock = socket.create_connection((host, port), timeout=DEFAULT_TIMEOUT)
        self._buffer = b""

    def send(self, line: str) -> None:
        try:
            self._sock.sendall(line.encode("utf-8") + b"\n")
        except OSError as exc:
            raise BridgeError("bridge connection closed") from exc

    def recv(self, timeout: float) -> str:
        self._sock.settimeout(timeout)
        while b"\n" not in self._buffer:
            try:
                chunk = self._sock.recv(65536)
            except socket.timeout as exc:
                raise BridgeError(f"bridge server response timed out after {timeout}s") from exc
            if not chunk:
                raise BridgeError("bridge server closed the connection")
            self._buffer += chunk
        line, self._buffer = self._buffer.split(b"\n", 1)
        return line.decode("utf-8")

    def close(self) -> None:
        try:
            self._sock.close()
        except OSError:
            pass


def open_channel(endpoint: str):
    """Endpoint syntax: ``stdio:<command line>`` or ``tcp:<host>:<port>``."""
    if endpoint.startswith("stdio:"):
        return _StdioChannel(shlex.split(endpoint[len("stdio:"):]))
    if endpoint.startswith("tcp:"):
        host, _, port = endpoint[len("tcp:"):].rpartition(":")
        return _TcpChannel(host, int(port))
    raise ValueError(f"unknown endpoint syntax: {endpoint!r}")


class BridgeEnv(Environment):
    """External task behind the line protocol, one server per instance."""

    force_dim = 0  # dynamics perturbations are not available across the bridge

    def __init__(
        self,
        env_id: str,
        command: list[str] | None = None,
        endpoint: str | None = None,
        max_episode_steps: int = 1000,
        timeout: float = DEFAULT_TIMEOUT,
    ):
        if (command is None) == (endpoint is None):
            raise ValueError("provide exactly one of command / endpoint")
        self.env_id = env_id
        self.timeout = timeout
        if command is not None:
            self._channel = _StdioChannel(list(command) + [env_id])
        else:
            self._channel = open_channel(endpoint)
        info = self.request({"op": "spec"})["spec"]
        self.spec = EnvSpec(
            joint_count=int(info["act_dim"]),
            obs_dim=int(info["obs_dim"]),
            control_period=float(info["control_period"]),
            episode_horizon=float(info["control_period"]) * max_episode_steps,
            actuation_mode="torque",
            action_low=-math.inf,
            action_high=math.inf,
        )
        self._done = False

    def request(self, obj: dict) -> dict:
        self._channel.send(json.dumps(obj))
        raw = self._channel.recv(self.timeout)
        try:
            response = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise BridgeError(f"malformed bridge response: {raw!r}") from exc
        if not response.get("ok", False):
            raise BridgeError(response.get("error", "unknown bridge error"))
        return response

    def reset(self, seed: int = 0) -> np.ndarray:
        response = self.request({"op": "reset", "seed": int(seed)})
        self._done = False
        return np.asarray(response["obs"], dtype=float)

    def step(self, action) -> StepResult:
        if self._done:
            raise EpisodeOverError("episode is over; call reset()")
        action = self._check_action(action)
        response = self.request({"op": "step", "action": [float(a) for a in action]})
        result = StepResult(
            observation=np.asarray(response["obs"], dtype=float),
            reward=float(response["reward"]),
            terminated=bool(response["terminated"]),
            truncated=bool(response["truncated"]),
        )
        self._done = result.done
        return result

    def close(self) -> None:
        try:
            self._channel.send(json.dumps({"op": "close"}))
        except BridgeError:
            pass
        self._channel.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
