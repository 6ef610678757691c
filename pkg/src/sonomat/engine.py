"""Live rendering engine behind the network service.

One render thread owns every resonator state and advances the stream
block by block; taps arrive through a single-producer queue as messages
that already carry any freshly built state, so the render loop itself
never constructs models. Rendered blocks go to the capture WAV file and,
when a sound device is available and wanted, to the soundcard.

Latency accounting is done in the sample domain: a tap records the stream
position at receipt, and the engine notes the position of the first
nonzero sample it renders afterwards.
"""

from __future__ import annotations

import logging
import queue
import threading
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import NoVoteError, UnknownMaterialError
from .materials import MaterialProperties, MaterialTable
from .plate import ModalModel, PlateGeometry, build_modal_model
from .scene import Scene, project_world_to_pixel, resolve_material
from .synth import (
    ExcitationEvent,
    AudioBuffer,
    ResonatorState,
    render_block_into,
    render_offline_streamed,
)
from .wavefile import WavCaptureWriter

log = logging.getLogger("sonomat.engine")

__all__ = ["AudioEngine", "TapResult"]


@dataclass
class TapResult:
    """What a tap resolved to and how it will sound."""

    material: str
    tally: dict[str, int]
    t60_estimate_s: float
    receipt_position: int
    plate_point: Optional[tuple[float, float]] = None


@dataclass
class _Voice:
    model: ModalModel
    state: ResonatorState
    scratch: np.ndarray
    last_used: float = 0.0
    pending: list = field(default_factory=list)


class AudioEngine:
    """Streaming synthesis engine with a model cache and voice pool."""

    def __init__(
        self,
        table: MaterialTable,
        scene: Optional[Scene] = None,
        sample_rate: float = 48_000.0,
        block_size: int = 256,
        plate_size: tuple[float, float] = (0.22, 0.22),
        thickness: Optional[float] = None,
        capture_path=None,
        fallback_material: Optional[str] = None,
        paced: bool = True,
        max_voices: int = 6,
        audio_device: bool = False,
    ):
        self.table = table
        self.scene = scene
        self.sample_rate = float(sample_rate)
        self.block_size = int(block_size)
        self.plate_size = plate_size
        self.thickness = thickness
        self.fallback_material = fallback_material
        self.config_material: Optional[str] = None
        self.paced = paced
        self.max_voices = max_voices

        self._queue: "queue.SimpleQueue" = queue.SimpleQueue()
        self._voices: dict[str, _Voice] = {}
        self._models: dict[tuple, ModalModel] = {}
        self._mix = np.zeros(self.block_size)
        self._tmp = np.zeros(self.block_size)
        self.position = 0

        self._capture = (
            WavCaptureWriter(capture_path, self.sample_rate) if capture_path else None
        )
        self._player = _maybe_player(audio_device, self.sample_rate)

        self._probe_receipt: Optional[int] = None
        self.last_latency_s: Optional[float] = None
        self.tap_count = 0

        self._stop = threading.Event()
        self._thread: Optional[threading.Thread] = None

    # -- model / voice management (caller threads) --------------------------

    def model_for(self, material: MaterialProperties) -> ModalModel:
        thickness = self.thickness or material.default_thickness
        key = (material.name, self.plate_size, thickness, self.sample_rate)
        model = self._models.get(key)
        if model is None:
            geometry = PlateGeometry(self.plate_size[0], self.plate_size[1], thickness)
            model = build_modal_model(geometry, material, sample_rate=self.sample_rate)
            self._models[key] = model
        return model

    def _enqueue_tap(self, material: MaterialProperties, force: float,
                     plate_point) -> int:
        model = self.model_for(material)
        state = None
        if material.name not in self._voices:
            # build filter state off the render thread; the render loop
            # only attaches it
            state = ResonatorState(model)
        receipt = self.position
        self._queue.put(("tap", material.name, model, state, force, plate_point, receipt))
        return receipt

    # -- tap entry points ----------------------------------------------------

    def tap_material(self, name: str, force: float,
                     plate_point=None) -> TapResult:
        material = self.table.lookup_by_name(name)
        receipt = self._enqueue_tap(material, force, plate_point)
        model = self.model_for(material)
        return TapResult(
            material=material.name,
            tally={},
            t60_estimate_s=model.t60_estimate(),
            receipt_position=receipt,
            plate_point=plate_point,
        )

    def tap_world(self, world_point, force: float) -> TapResult:
        """Resolve the material under a world point, then tap it.

        The resolved pixel's position in the newest voting mask maps to a
        position on the plate, so where you hit changes the timbre. Falls
        back to the configured material when resolution fails.
        """
        tally: dict[str, int] = {}
        plate_point = None
        try:
            if self.scene is None or len(self.scene.masks) == 0:
                raise NoVoteError("no scene loaded")
            name, tally = resolve_material(self.scene.masks, world_point, self.table)
            plate_point = self._plate_point_for(world_point)
        except NoVoteError:
            fallback = self.config_material or self.fallback_material
            if not fallback:
                raise
            name = fallback
        material = self.table.lookup_by_name(name)
        receipt = self._enqueue_tap(material, force, plate_point)
        model = self.model_for(material)
        return TapResult(
            material=material.name,
            tally=tally,
            t60_estimate_s=model.t60_estimate(),
            receipt_position=receipt,
            plate_point=plate_point,
        )

    def _plate_point_for(self, world_point):
        """Map the tap's pixel in the newest mask to plate coordinates."""
        masks = self.scene.masks.snapshot()
        for mask in reversed(masks):
            try:
                u, v = project_world_to_pixel(world_point, mask.pose, mask.intrinsics)
            except Exception:
                continue
            if 0 <= u < mask.width and 0 <= v < mask.height:
                fx = min(max(u / mask.width, 0.02), 0.98)
                fy = min(max(v / mask.height, 0.02), 0.98)
                return (fx * self.plate_size[0], fy * self.plate_size[1])
        return None

    def set_config_material(self, name: str) -> None:
        """Runtime override used when world taps cannot be resolved."""
        material = self.table.lookup_by_name(name)  # validate early
        self.config_material = material.name

    def render_tap_wav(self, material_name: str, force: float,
                       plate_point=None, duration: Optional[float] = None) -> AudioBuffer:
        """Offline render of a single tap, for the WebSocket response."""
        material = self.table.lookup_by_name(material_name)
        model = self.model_for(material)
        if duration is None:
            duration = min(max(1.2 * model.t60_estimate() + 0.15, 0.25), 2.5)
        event = ExcitationEvent(0.0, force, plate_point)
        return render_offline_streamed(model, event, duration)

    # -- render loop ---------------------------------------------------------

    def step(self) -> np.ndarray:
        """Render one block: drain taps, mix voices, write capture."""
        taps = []
        while True:
            try:
                taps.append(self._queue.get_nowait())
            except queue.Empty:
                break
        now = time.monotonic()
        for _, name, model, state, force, plate_point, receipt in taps:
            voice = self._voices.get(name)
            if voice is None:
                if state is None:
                    state = ResonatorState(model)
                state.reset()
                state.position = self.position
                voice = _Voice(model=model, state=state,
                               scratch=np.zeros(self.block_size))
                self._voices[name] = voice
                self._evict_voices(keep=name)
            voice.last_used = now
            onset = self.position / self.sample_rate
            voice.pending.append(ExcitationEvent(onset, force, plate_point))
            self.tap_count += 1
            if self._probe_receipt is None:
                self._probe_receipt = receipt

        self._mix.fill(0.0)
        start = self.position
        for voice in self._voices.values():
            events = voice.pending
            voice.pending = []
            voice.state.position = start
            render_block_into(voice.state, events, voice.scratch)
            self._mix += voice.scratch
        np.clip(self._mix, -1.0, 1.0, out=self._mix)
        self.position = start + self.block_size

        if self._probe_receipt is not None:
            nz = np.nonzero(np.abs(self._mix) > 1e-12)[0]
            if nz.size:
                first = start + int(nz[0])
                self.last_latency_s = (first - self._probe_receipt) / self.sample_rate
                self._probe_receipt = None

        if self._capture is not None:
            self._capture.write(self._mix)
        if self._player is not None:
            self._player.write(self._mix)
        return self._mix

    def _evict_voices(self, keep: str) -> None:
        while len(self._voices) > self.max_voices:
            oldest = min(
                (n for n in self._voices if n != keep),
                key=lambda n: self._voices[n].last_used,
            )
            del self._voices[oldest]

    def _run(self) -> None:
        epoch = time.monotonic()
        while not self._stop.is_set():
            self.step()
            if self.paced:
                target = epoch + self.position / self.sample_rate
                delay = target - time.monotonic()
                if delay > 0:
                    time.sleep(delay)

    def start(self) -> None:
        if self._thread is not None:
            return
        self._thread = threading.Thread(target=self._run, name="sonomat-render",
                                        daemon=True)
        self._thread.start()

    def stop(self) -> None:
        self._stop.set()
        if self._thread is not None:
            self._thread.join(timeout=5)
            self._thread = None
        if self._capture is not None:
            self._capture.close()
            self._capture = None
        if self._player is not None:
            self._player.close()
            self._player = None

    def stats(self) -> dict:
        from .synth import kernel_backend

        return {
            "position": self.position,
            "seconds_rendered": self.position / self.sample_rate,
            "taps": self.tap_count,
            "last_latency_s": self.last_latency_s,
            "voices": sorted(self._voices),
            "kernel": kernel_backend(),
        }


def _maybe_player(wanted: bool, sample_rate: float):
    """Open a soundcard stream when asked and possible; else None."""
    if not wanted:
        return None
    try:
        import sounddevice

        stream = sounddevice.OutputStream(samplerate=sample_rate, channels=1)
        stream.start()
    except Exception as exc:
        log.warning("no audio device (%s); capture only", exc)
        return None

    class _Player:
        def write(self, block):
            stream.write(block.astype(np.float32))

        def close(self):
            stream.stop()
            stream.close()

    return _Player()
