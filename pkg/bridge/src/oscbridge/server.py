"""Single-session line-protocol server around an external simulator task.

One JSON object per request line, exactly one response line per request, in
order.  Supported requests:

    {"op": "spec"}                          -> {"ok": true, "spec": {...}}
    {"op": "reset", "seed": 0}              -> {"ok": true, "obs": [...]}
    {"op": "step", "action": [...]}         -> {"ok": true, "obs": [...], "reward": r,
                                                "terminated": b, "truncated": b}
    {"op": "close"}                         -> {"ok": true} and the server exits

Malformed lines and protocol violations produce ``{"ok": false, "error":
...}`` and keep the session alive.  Floats are serialized with Python's
shortest round-trip repr, so values cross the pipe bit-exactly.  The server
applies no wrappers of any kind; it is a dumb pipe to the simulator.

Environment ids resolve through the external suite (gymnasium).  The
documented test id ``stub:echo`` maps to a tiny built-in deterministic
environment so protocol checks need no simulator installed.
"""

from __future__ import annotations

import json
import socket
import sys


class UnknownEnvironment(Exception):
    pass


class EchoStubEnv:
    """Built-in test task: observations echo the action, reward is action[0]."""

    obs_dim = 3
    act_dim = 2
    control_period = 0.05
    horizon = 1000

    def __init__(self):
        self._t = 0

    def reset(self, seed):
        self._t = 0
        return [float(seed), -float(seed), 0.5]

    def step(self, action):
        self._t += 1
        obs = [float(action[0]), float(action[1]), float(self._t)]
        return obs, float(action[0]), False, self._t >= self.horizon


class GymnasiumEnv:
    """Adapter around one task from the external suite."""

    def __init__(self, env_id: str):
        try:
            import gymnasium
        except ImportError as exc:
            raise UnknownEnvironment(
                f"cannot serve {env_id!r}: the external suite (gymnasium) is not installed"
            ) from exc
        try:
            self._env = gymnasium.make(env_id)
        except Exception as exc:
            raise UnknownEnvironment(f"cannot construct {env_id!r}: {exc}") from exc
        self.obs_dim = int(self._env.observation_space.shape[0])
        self.act_dim = int(self._env.action_space.shape[0])
        unwrapped = self._env.unwrapped
        self.control_period = float(getattr(unwrapped, "dt", 0.05))

    def reset(self, seed):
        obs, _ = self._env.reset(seed=int(seed))
        return [float(v) for v in obs]

    def step(self, action):
        import numpy as np

        obs, reward, terminated, truncated, _ = self._env.step(np.asarray(action))
        return [float(v) for v in obs], float(reward), bool(terminated), bool(truncated)


def make_task(env_id: str):
    if env_id == "stub:echo":
        return EchoStubEnv()
    return GymnasiumEnv(env_id)


class Session:
    def __init__(self, env_id: str):
        self.env = make_task(env_id)
        self.ready = False
        self.closing = False

    def handle(self, raw: str) -> str:
        try:
            request = json.loads(raw)
        except json.JSONDecodeError:
            return json.dumps({"ok": False, "error": "malformed request"})
        if not isinstance(request, dict):
            return json.dumps({"ok": False, "error": "request must be an object"})
        op = request.get("op")
        try:
            if op == "spec":
                return json.dumps(
                    {
                        "ok": True,
                        "spec": {
                            "obs_dim": self.env.obs_dim,
                            "act_dim": self.env.act_dim,
                            "control_period": self.env.control_period,
                        },
                    }
                )
            if op == "reset":
                obs = self.env.reset(request.get("seed", 0))
                self.ready = True
                return json.dumps({"ok": True, "obs": obs})
            if op == "step":
                if not self.ready:
                    return json.dumps({"ok": False, "error": "not reset"})
                action = request.get("action")
                if not isinstance(action, list) or len(action) != self.env.act_dim:
                    return json.dumps(
                        {"ok": False, "error": f"action must be a list of {self.env.act_dim}"}
                    )
                obs, reward, terminated, truncated = self.env.step(action)
                if terminated or truncated:
                    self.ready = False
                return json.dumps(
                    {
                        "ok": True,
                        "obs": obs,
                        "reward": reward,
                        "terminated": terminated,
                        "truncated": truncated,
                    }
                )
            if op == "close":
                self.closing = True
                return json.dumps({"ok": True})
            return json.dumps({"ok": False, "error": f"unknown op {op!r}"})
        except Exception as exc:  # simulator fault: report, keep session up
            return json.dumps({"ok": False, "error": f"simulator error: {exc}"})


def serve_lines(session: Session, lines, write_line) -> None:
    for raw in lines:
        raw = raw.strip()
        if not raw:
            continue
        write_line(session.handle(raw))
        if session.closing:
            break


def serve(env_id: str, tcp_port: int | None = None) -> int:
    """Run one session; returns the process exit code (0 ok, 2 unknown env)."""
    try:
        session = Session(env_id)
    except UnknownEnvironment as exc:
        sys.stdout.write(json.dumps({"ok": False, "error": str(exc)}) + "\n")
        sys.stdout.flush()
        return 2

    if tcp_port is not None:
        server = socket.create_server(("127.0.0.1", tcp_port))
        connection, _ = server.accept()
        reader = connection.makefile("r", encoding="utf-8")
        writer = connection.makefile("w", encoding="utf-8")

        def write_line(text):
            writer.write(text + "\n")
            writer.flush()

        serve_lines(session, reader, write_line)
        connection.close()
        server.close()
        return 0

    def write_line(text):
        sys.stdout.write(text + "\n")
        sys.stdout.flush()

    serve_lines(session, sys.stdin, write_line)
    return 0
