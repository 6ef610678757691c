"""Command-line entry point.

Subcommands: render (offline tap to WAV), resolve (material under a world
point), serve (OSC + WebSocket service), spectrogram (WAV analysis and the
twelve-material contact sheet). JSON results go to stdout, logs to stderr,
so commands compose in pipelines.

Exit codes: 0 ok, 1 environment, 2 usage/input, 3 resolution failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from . import __version__
from .errors import (
    MaterialDbError,
    NoVoteError,
    SonomatError,
    UnknownMaterialError,
    WavFormatError,
)

log = logging.getLogger("sonomat")

EXIT_OK = 0
EXIT_ENV = 1
EXIT_USAGE = 2
EXIT_NO_VOTE = 3

MAX_RENDER_SECONDS = 60.0


def _parse_pair(text: str, sep: str, what: str) -> tuple[float, ...]:
    try:
        parts = tuple(float(p) for p in text.split(sep))
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad {what}: {text!r}") from None
    return parts


def _size(text: str) -> tuple[float, float]:
    parts = _parse_pair(text, "x", "size (expected LXxLY, e.g. 0.22x0.22)")
    if len(parts) != 2 or min(parts) <= 0:
        raise argparse.ArgumentTypeError(f"bad size: {text!r}")
    return parts  # type: ignore[return-value]


def _point2(text: str) -> tuple[float, float]:
    parts = _parse_pair(text, ",", "point (expected x,y)")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"bad point: {text!r}")
    return parts  # type: ignore[return-value]


def _point3(text: str) -> tuple[float, float, float]:
    parts = _parse_pair(text, ",", "point (expected x,y,z)")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"bad point: {text!r}")
    return parts  # type: ignore[return-value]


def _load_table(args):
    from .materials import default_table, load_material_db

    if getattr(args, "db", None):
        return load_material_db(args.db)
    return default_table()


def _emit(doc: dict) -> None:
    json.dump(doc, sys.stdout, indent=2, sort_keys=True)
    sys.stdout.write("\n")


# ---------------------------------------------------------------------------
# render


def cmd_render(args) -> int:
    from .plate import PlateGeometry, build_modal_model
    from .synth import ExcitationEvent, render_closed_form
    from .wavefile import write_wav

    if not (0 < args.duration <= MAX_RENDER_SECONDS):
        log.error("duration must be in (0, %s] seconds", MAX_RENDER_SECONDS)
        return EXIT_USAGE
    table = _load_table(args)
    material = table.lookup_by_name(args.material)
    thickness = args.thickness or material.default_thickness
    geometry = PlateGeometry(args.size[0], args.size[1], thickness)
    model = build_modal_model(
        geometry,
        material,
        excitation_point=args.excite,
        listening_point=args.listen,
        sample_rate=args.sample_rate,
    )
    event = ExcitationEvent(onset_time=0.0, force=args.force)
    contact = args.contact_ms / 1000.0 if args.contact_ms else None
    buffer = render_closed_form(model, event, args.duration, contact_time=contact)
    output = args.output or f"{material.name.lower()}.wav"
    write_wav(output, buffer, pcm16=args.pcm16)
    import numpy as np

    _emit(
        {
            "material": material.name,
            "modes": len(model),
            "f11_hz": model.fundamental.frequency,
            "t60_estimate_s": model.t60_estimate(),
            "peak": float(np.max(np.abs(buffer.samples))) if len(buffer) else 0.0,
            "sample_rate": model.sample_rate,
            "output": str(output),
        }
    )
    return EXIT_OK


# ---------------------------------------------------------------------------
# resolve


def cmd_resolve(args) -> int:
    from .scene import load_scene, resolve_material

    table = _load_table(args)
    scene = load_scene(args.scene)
    name, tally = resolve_material(scene.masks, args.point, table)
    _emit({"material": name, "tally": tally})
    return EXIT_OK


# ---------------------------------------------------------------------------
# serve


def _port(flag_value, env_name: str, default: int) -> int:
    if flag_value is not None:
        return flag_value
    env = os.environ.get(env_name)
    if env:
        try:
            return int(env)
        except ValueError:
            raise SonomatError(f"{env_name}={env!r} is not a port number") from None
    return default


def cmd_serve(args) -> int:
    from .engine import AudioEngine
    from .scene import load_scene
    from .server import DEFAULT_OSC_PORT, DEFAULT_WS_PORT, serve_forever

    table = _load_table(args)
    scene = load_scene(args.scene) if args.scene else None
    engine = AudioEngine(
        table,
        scene=scene,
        sample_rate=args.sample_rate,
        block_size=args.block_size,
        plate_size=args.plate_size,
        thickness=args.thickness,
        capture_path=args.capture,
        fallback_material=args.fallback_material,
        audio_device=not args.no_audio_device,
    )
    frontend = args.frontend
    if frontend is None:
        bundled = Path(__file__).resolve().parent.parent.parent.parent / "frontend" / "dist"
        frontend = bundled if bundled.is_dir() else None
    serve_forever(
        engine,
        osc_port=_port(args.osc_port, "SONOMAT_OSC_PORT", DEFAULT_OSC_PORT),
        ws_port=_port(args.ws_port, "SONOMAT_WS_PORT", DEFAULT_WS_PORT),
        host=args.host,
        frontend_dir=frontend,
    )
    return EXIT_OK


# ---------------------------------------------------------------------------
# spectrogram


def _save_spectrogram_png(path, spec_db, sample_rate, hop, title=None):
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    frames, bins = spec_db.shape
    duration = frames * hop / sample_rate
    fig, ax = plt.subplots(figsize=(7, 4))
    im = ax.imshow(
        spec_db.T,
        origin="lower",
        aspect="auto",
        extent=[0.0, duration, 0.0, sample_rate / 2.0],
        vmin=-100.0,
        vmax=0.0,
        cmap="magma",
    )
    ax.set_xlabel("time (s)")
    ax.set_ylabel("frequency (Hz)")
    if title:
        ax.set_title(title)
    fig.colorbar(im, ax=ax, label="dB")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def _contact_sheet(args, table) -> int:
    """Spectrograms of every material, sorted by increasing stiffness."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    from .plate import PlateGeometry, build_modal_model
    from .synth import ExcitationEvent, render_offline_streamed, spectrogram

    ordered = sorted(table, key=lambda e: (e.young_modulus, e.specific_stiffness))
    fig, axes = plt.subplots(1, len(ordered), figsize=(2.1 * len(ordered), 3.2),
                             sharey=True)
    for ax, entry in zip(axes, ordered):
        geometry = PlateGeometry(args.size[0], args.size[1], entry.default_thickness)
        model = build_modal_model(geometry, entry, sample_rate=args.sample_rate)
        buffer = render_offline_streamed(
            model, ExcitationEvent(0.0, args.force), args.duration
        )
        spec = spectrogram(buffer, args.window, args.hop)
        ax.imshow(
            spec.T,
            origin="lower",
            aspect="auto",
            extent=[0.0, buffer.duration, 0.0, model.sample_rate / 2000.0],
            vmin=-100.0,
            vmax=0.0,
            cmap="magma",
        )
        ax.set_title(entry.name, fontsize=9)
        ax.set_xlabel("s", fontsize=8)
    axes[0].set_ylabel("kHz")
    fig.suptitle("increasing stiffness →", y=1.0, fontsize=10)
    fig.tight_layout()
    fig.savefig(args.contact_sheet, dpi=120)
    plt.close(fig)
    _emit({"contact_sheet": str(args.contact_sheet),
           "order": [e.name for e in ordered]})
    return EXIT_OK


def cmd_spectrogram(args) -> int:
    import numpy as np

    from .synth import spectrogram
    from .wavefile import read_wav

    table = _load_table(args)
    if args.contact_sheet:
        return _contact_sheet(args, table)
    if not args.wav:
        log.error("need a WAV file or --contact-sheet")
        return EXIT_USAGE
    buffer = read_wav(args.wav)
    spec = spectrogram(buffer, args.window, args.hop)
    out = Path(args.out) if args.out else Path(args.wav).with_suffix(".png")
    fmt = args.format
    if fmt == "auto":
        fmt = "csv" if out.suffix.lower() == ".csv" else "png"
    if fmt == "csv":
        np.savetxt(out, spec, fmt="%.2f", delimiter=",")
    else:
        _save_spectrogram_png(out, spec, buffer.sample_rate, args.hop,
                              title=Path(args.wav).name)
    _emit({"output": str(out), "frames": spec.shape[0], "bins": spec.shape[1],
           "format": fmt})
    return EXIT_OK


# ---------------------------------------------------------------------------
# fixtures


def cmd_fixtures(args) -> int:
    from .fixtures import generate_scene

    if args.action != "gen":
        log.error("unknown fixtures action %r", args.action)
        return EXIT_USAGE
    table = _load_table(args)
    path = generate_scene(args.out, table, n_masks=args.masks,
                          width=int(args.mask_size[0]),
                          height=int(args.mask_size[1]))
    _emit({"scene": str(path), "masks": args.masks})
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sonomat",
        description="Material-aware impact sounds: tap a segmented scene, hear the plate.",
    )
    parser.add_argument("--version", action="version", version=f"sonomat {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("render", help="render one tap offline to a WAV file")
    p.add_argument("--material", required=True, help="material name, e.g. glass")
    p.add_argument("--size", type=_size, default=(0.22, 0.22),
                   help="plate footprint in meters, LXxLY (default 0.22x0.22)")
    p.add_argument("--thickness", type=float, default=None,
                   help="plate thickness in meters (default: material's)")
    p.add_argument("--excite", type=_point2, default=None,
                   help="excitation point x,y in meters (default: center)")
    p.add_argument("--listen", type=_point2, default=None,
                   help="listening point x,y in meters (default: off-node spot)")
    p.add_argument("--force", type=float, default=0.8, help="tap force in (0, 1]")
    p.add_argument("--duration", type=float, default=1.5, help="render length, seconds")
    p.add_argument("--sample-rate", type=float, default=48_000.0)
    p.add_argument("--contact-ms", type=float, default=0.0,
                   help="raised-cosine contact pulse length (0 = ideal impulse)")
    p.add_argument("--pcm16", action="store_true", help="write 16-bit PCM instead of float32")
    p.add_argument("--db", default=None, help="material database file")
    p.add_argument("-o", "--output", default=None, help="output WAV path")
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("resolve", help="resolve the material under a world point")
    p.add_argument("--scene", required=True, help="scene directory")
    p.add_argument("--point", type=_point3, required=True, help="world point x,y,z (m)")
    p.add_argument("--db", default=None)
    p.set_defaults(func=cmd_resolve)

    p = sub.add_parser("serve", help="run the OSC/WebSocket tap service")
    p.add_argument("--osc-port", type=int, default=None,
                   help="UDP OSC port (default: $SONOMAT_OSC_PORT or 9000)")
    p.add_argument("--ws-port", type=int, default=None,
                   help="WebSocket/HTTP port (default: $SONOMAT_WS_PORT or 9001)")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--scene", default=None, help="scene directory for world taps")
    p.add_argument("--db", default=None)
    p.add_argument("--capture", default=None, help="capture WAV path")
    p.add_argument("--no-audio-device", action="store_true",
                   help="render to capture only (CI mode)")
    p.add_argument("--fallback-material", default=None,
                   help="material used when a world tap cannot be resolved")
    p.add_argument("--plate-size", type=_size, default=(0.22, 0.22))
    p.add_argument("--thickness", type=float, default=None)
    p.add_argument("--sample-rate", type=float, default=48_000.0)
    p.add_argument("--block-size", type=int, default=256)
    p.add_argument("--frontend", default=None, help="directory of built console assets")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("spectrogram", help="spectrogram of a WAV, or the material contact sheet")
    p.add_argument("wav", nargs="?", default=None, help="input WAV file")
    p.add_argument("-o", "--out", default=None, help="output path (.png or .csv)")
    p.add_argument("--format", choices=("auto", "png", "csv"), default="auto")
    p.add_argument("--window", type=int, default=2048, help="STFT window (power of two)")
    p.add_argument("--hop", type=int, default=512)
    p.add_argument("--contact-sheet", default=None, metavar="PNG",
                   help="render all materials sorted by stiffness into one sheet")
    p.add_argument("--size", type=_size, default=(0.22, 0.22))
    p.add_argument("--duration", type=float, default=1.25)
    p.add_argument("--force", type=float, default=0.8)
    p.add_argument("--sample-rate", type=float, default=48_000.0)
    p.add_argument("--db", default=None)
    p.set_defaults(func=cmd_spectrogram)

    p = sub.add_parser("fixtures")  # synthetic scenes for tests and demos
    p.add_argument("action", choices=("gen",))
    p.add_argument("--out", required=True, help="scene directory to create")
    p.add_argument("--masks", type=int, default=5)
    p.add_argument("--mask-size", type=_size, default=(960, 540),
                   help="mask resolution WxH (default 960x540)")
    p.add_argument("--db", default=None)
    p.set_defaults(func=cmd_fixtures)

    return parser


def main(argv=None) -> int:
    logging.basicConfig(
        stream=sys.stderr,
        level=os.environ.get("SONOMAT_LOG", "INFO"),
        format="%(levelname)s %(name)s: %(message)s",
    )
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except NoVoteError as exc:
        log.error("resolution failed: %s", exc)
        return EXIT_NO_VOTE
    except (UnknownMaterialError, MaterialDbError, WavFormatError) as exc:
        log.error("%s", exc)
        return EXIT_USAGE
    except (ValueError, FileNotFoundError) as exc:
        log.error("%s", exc)
        return EXIT_USAGE
    except SonomatError as exc:
        log.error("%s", exc)
        return EXIT_ENV
    except OSError as exc:
        log.error("%s", exc)
        return EXIT_ENV
    except KeyboardInterrupt:
        return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
