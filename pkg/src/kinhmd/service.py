"""WebSocket state/command service the operator console connects to.

JSON text frames. Server to client: a ``hello`` frame on connect carrying
the rating scale metadata, force limit and role, then ``state`` frames at
the snapshot rate. Client to server: ``{"type": "cmd", "cmd": ...}`` with
kill | arm | engage | release | rearm | set_gain | start_trial | rate.
Every command is answered with an ``ack`` frame.

The first connected client is the operator; later clients are read-only
spectators (single-operator rule) except that kill is always honored, from
anyone, and is latched before the acknowledgement is even built. All
authority stays server-side: commands are requests, state frames are
truth.
"""

from __future__ import annotations

import asyncio
import json
import logging
import threading

from websockets.asyncio.server import serve

from .session import RATING_SCALES, SNAPSHOT_RATE_HZ, SessionRuntime

log = logging.getLogger(__name__)

ALLOWED_COMMANDS = ("kill", "arm", "engage", "release", "rearm",
                    "set_gain", "start_trial", "rate")


class ConsoleService:
    """Bridges WebSocket clients to a SessionRuntime running on its own thread."""

    def __init__(self, runtime: SessionRuntime, host: str = "127.0.0.1",
                 port: int = 8765, frame_hz: float = SNAPSHOT_RATE_HZ):
        self.runtime = runtime
        self.host = host
        self.port = port
        self.frame_hz = frame_hz
        self._clients: list = []  # connection order; first is the operator
        self._server = None

    def _hello(self, spectator: bool) -> str:
        return json.dumps({
            "type": "hello",
            "scales": {k: {"min": lo, "max": hi} for k, (lo, hi) in RATING_SCALES.items()},
            "force_limit": self.runtime.cfg.safety.force_limit,
            "tick_rate": self.runtime.cfg.tick_rate,
            "frame_hz": self.frame_hz,
            "spectator": spectator,
            "trials_total": len(self.runtime.plan.order) if self.runtime.plan else 0,
        })

    def _is_operator(self, ws) -> bool:
        return bool(self._clients) and self._clients[0] is ws

    async def _handle_command(self, ws, msg: dict) -> dict:
        cmd = msg.get("cmd")
        if cmd not in ALLOWED_COMMANDS:
            return {"type": "ack", "cmd": cmd, "ok": False, "reason": f"unknown command {cmd!r}"}
        if cmd == "kill":
            # No permission check, no waiting: anyone may kill, instantly.
            self.runtime.kill()
            return {"type": "ack", "cmd": "kill", "ok": True, "reason": "kill latched"}
        if not self._is_operator(ws):
            return {"type": "ack", "cmd": cmd, "ok": False,
                    "reason": "spectator connection: only kill is allowed"}
        ok, reason = await asyncio.to_thread(self.runtime.submit_wait, msg)
        return {"type": "ack", "cmd": cmd, "ok": ok, "reason": reason}

    async def _handler(self, ws) -> None:
        spectator = bool(self._clients)
        self._clients.append(ws)
        log.info("console client connected (%s)", "spectator" if spectator else "operator")
        try:
            await ws.send(self._hello(spectator))
            async for raw in ws:
                try:
                    msg = json.loads(raw)
                except json.JSONDecodeError:
                    await ws.send(json.dumps({"type": "ack", "ok": False, "reason": "bad JSON"}))
                    continue
                if msg.get("type") != "cmd":
                    await ws.send(json.dumps(
                        {"type": "ack", "ok": False, "reason": "expected a cmd frame"}))
                    continue
                await ws.send(json.dumps(await self._handle_command(ws, msg)))
        finally:
            promoted = self._is_operator(ws) and len(self._clients) > 1
            self._clients.remove(ws)
            if promoted and self._clients:
                log.info("operator disconnected; promoting oldest spectator")
            log.info("console client disconnected")

    async def _broadcast_loop(self) -> None:
        period = 1.0 / self.frame_hz
        while True:
            frame = self.runtime.snapshot()
            if frame is not None and self._clients:
                payload = json.dumps(frame)
                for ws in list(self._clients):
                    try:
                        await ws.send(payload)
                    except Exception:
                        pass  # handler's finally cleans the client up
            await asyncio.sleep(period)

    async def run(self, ready: asyncio.Event | None = None) -> None:
        async with serve(self._handler, self.host, self.port) as server:
            self._server = server
            log.info("console service listening on ws://%s:%d", self.host, self.port)
            print(f"console service ready on ws://{self.host}:{self.port}", flush=True)
            if ready is not None:
                ready.set()
            await self._broadcast_loop()


def serve_forever(runtime: SessionRuntime, host: str = "127.0.0.1", port: int = 8765,
                  realtime: bool = True) -> None:
    """Run the control loop on a worker thread and the service until interrupted."""
    stop = threading.Event()
    loop_thread = threading.Thread(
        target=runtime.run_until, args=(stop,), kwargs={"realtime": realtime},
        name="kinhmd-loop", daemon=True,
    )
    loop_thread.start()
    service = ConsoleService(runtime, host=host, port=port)
    try:
        asyncio.run(service.run())
    except KeyboardInterrupt:
        pass
    finally:
        stop.set()
        loop_thread.join(timeout=2.0)
