"""Network front door: OSC taps over UDP, JSON taps over WebSocket.

UDP addresses:
    /tap/world      ",ffff"  x, y, z, force
    /tap/material   ",sf"    material name, force
    /config/material ",s"    material used when world taps cannot resolve

WebSocket (same schema the browser console speaks):
    request  {"type": "tap", "x"?, "y"?, "z"?, "material"?, "force"}
    response {"type": "result", "material", "tally", "t60_estimate_s",
              "wav_b64"}
            | {"type": "error", "message"}

Malformed datagrams and bad JSON are logged and dropped; they never take
the service down. The HTTP side of the WebSocket port also serves the
scene assets and the browser console, plus a small /api/info bootstrap
document.
"""

# note: no `from __future__ import annotations` here: FastAPI needs to
# evaluate the WebSocket annotation against create_app's local imports

import base64
import io
import logging
import socket
import struct
import threading
from pathlib import Path
from typing import Optional

from .engine import AudioEngine
from .errors import NoVoteError, SonomatError
from .materials import format_color
from .osc import OscDecodeError, decode_osc
from .wavefile import write_wav

log = logging.getLogger("sonomat.server")

__all__ = ["OscUdpServer", "create_app", "handle_tap_request", "serve_forever"]

DEFAULT_OSC_PORT = 9000
DEFAULT_WS_PORT = 9001


class OscUdpServer:
    """Receives OSC datagrams on a thread and drives the engine."""

    def __init__(self, engine: AudioEngine, host: str = "127.0.0.1", port: int = DEFAULT_OSC_PORT):
        self.engine = engine
        self.sock = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
        self.sock.bind((host, port))  # raises OSError on busy port
        self.sock.settimeout(0.25)
        self.host, self.port = self.sock.getsockname()
        self._stop = threading.Event()
        self._thread: Optional[threading.Thread] = None

    def start(self) -> None:
        self._thread = threading.Thread(target=self._run, name="sonomat-osc", daemon=True)
        self._thread.start()

    def _run(self) -> None:
        while not self._stop.is_set():
            try:
                datagram, _ = self.sock.recvfrom(65536)
            except socket.timeout:
                continue
            except OSError:
                break
            self.dispatch(datagram)

    def dispatch(self, datagram: bytes) -> None:
        """Decode and route one datagram; never raises."""
        try:
            message = decode_osc(datagram)
        except OscDecodeError as exc:
            log.warning("dropping malformed OSC packet (%d bytes): %s", len(datagram), exc)
            return
        try:
            self._route(message)
        except Exception as exc:
            log.warning("dropping OSC %s: %s", message.address, exc)

    def _route(self, message) -> None:
        args = message.arguments
        if message.address == "/tap/material":
            if len(args) != 2 or not isinstance(args[0], str) or not isinstance(args[1], float):
                raise ValueError(f"expected ',sf', got {args!r}")
            self.engine.tap_material(args[0], args[1])
        elif message.address == "/tap/world":
            if len(args) != 4 or not all(isinstance(a, float) for a in args):
                raise ValueError(f"expected ',ffff', got {args!r}")
            self.engine.tap_world((args[0], args[1], args[2]), args[3])
        elif message.address == "/config/material":
            if len(args) != 1 or not isinstance(args[0], str):
                raise ValueError(f"expected ',s', got {args!r}")
            self.engine.set_config_material(args[0])
        else:
            log.info("ignoring unknown OSC address %s", message.address)

    def stop(self) -> None:
        self._stop.set()
        if self._thread is not None:
            self._thread.join(timeout=2)
            self._thread = None
        self.sock.close()


def _wav_b64(buffer) -> str:
    bio = io.BytesIO()
    write_wav(bio, buffer)
    return base64.b64encode(bio.getvalue()).decode("ascii")


def handle_tap_request(engine: AudioEngine, request: dict) -> dict:
    """Turn one WebSocket JSON request into a response document."""
    try:
        if not isinstance(request, dict) or request.get("type") != "tap":
            raise ValueError("request type must be 'tap'")
        force = float(request.get("force", 0.8))
        if not (0.0 < force <= 1.0):
            raise ValueError("force must be in (0, 1]")
        if request.get("material") is not None:
            result = engine.tap_material(str(request["material"]), force)
        elif all(k in request for k in ("x", "y", "z")):
            point = (float(request["x"]), float(request["y"]), float(request["z"]))
            result = engine.tap_world(point, force)
        else:
            raise ValueError("need either 'material' or 'x','y','z'")
        wav = engine.render_tap_wav(result.material, force, result.plate_point)
        return {
            "type": "result",
            "material": result.material,
            "tally": result.tally,
            "t60_estimate_s": result.t60_estimate_s,
            "wav_b64": _wav_b64(wav),
        }
    except (SonomatError, ValueError, TypeError, KeyError) as exc:
        return {"type": "error", "message": str(exc)}


def create_app(engine: AudioEngine, frontend_dir=None):
    """FastAPI app: /ws, /api/info, scene assets, browser console."""
    from fastapi import FastAPI, WebSocket, WebSocketDisconnect
    from fastapi.staticfiles import StaticFiles
    from starlette.concurrency import run_in_threadpool

    app = FastAPI(title="sonomat")

    @app.get("/api/info")
    def info():
        doc = {
            "materials": [
                {
                    "name": e.name,
                    "color": format_color(e.label_color),
                    "thickness": e.default_thickness,
                }
                for e in engine.table
            ],
            "stats": engine.stats(),
            "scene": None,
        }
        scene = engine.scene
        if scene is not None:
            masks = scene.masks.snapshot()
            newest = masks[-1] if masks else None
            doc["scene"] = {
                "backdrop": "/scene/backdrop.png" if scene.backdrop else None,
                "tap_depth": scene.tap_depth,
                "mask_count": len(masks),
                "newest_mask": f"/scene/masks/{scene.mask_files[-1].name}"
                if scene.mask_files
                else None,
                "camera": None
                if newest is None
                else {
                    "fx": newest.intrinsics.fx,
                    "fy": newest.intrinsics.fy,
                    "cx": newest.intrinsics.cx,
                    "cy": newest.intrinsics.cy,
                    "width": newest.intrinsics.width,
                    "height": newest.intrinsics.height,
                    "camera_to_world": [float(x) for x in newest.pose.camera_to_world.reshape(-1)],
                },
                "ground_truth": {k: list(v) for k, v in scene.ground_truth.items()},
            }
        return doc

    @app.websocket("/ws")
    async def ws_endpoint(websocket: WebSocket):
        await websocket.accept()
        try:
            while True:
                try:
                    request = await websocket.receive_json()
                except (ValueError, TypeError):
                    await websocket.send_json({"type": "error", "message": "request is not JSON"})
                    continue
                response = await run_in_threadpool(handle_tap_request, engine, request)
                await websocket.send_json(response)
        except WebSocketDisconnect:
            pass

    if engine.scene is not None:
        app.mount("/scene", StaticFiles(directory=engine.scene.directory), name="scene")
    if frontend_dir and Path(frontend_dir).is_dir():
        app.mount("/", StaticFiles(directory=frontend_dir, html=True), name="console")
    return app


def serve_forever(
    engine: AudioEngine,
    osc_port: int = DEFAULT_OSC_PORT,
    ws_port: int = DEFAULT_WS_PORT,
    host: str = "127.0.0.1",
    frontend_dir=None,
) -> None:
    """Run OSC + WebSocket + engine until interrupted; flushes capture."""
    import uvicorn

    osc = OscUdpServer(engine, host=host, port=osc_port)
    app = create_app(engine, frontend_dir=frontend_dir)
    engine.start()
    osc.start()
    log.info("OSC on udp://%s:%d, WebSocket on ws://%s:%d/ws",
             host, osc.port, host, ws_port)
    try:
        uvicorn.run(app, host=host, port=ws_port, log_level="warning")
    finally:
        osc.stop()
        engine.stop()
