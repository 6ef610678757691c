import json
import socket

import numpy as np
import pytest

from sonomat.analysis import dominant_ridge_hz
from sonomat.cli import main
from sonomat.wavefile import read_wav


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestRender:
    def test_glass_render(self, capsys, tmp_path):
        out = tmp_path / "glass.wav"
        code, stdout, _ = run_cli(
            capsys, "render", "--material", "glass", "--size", "0.22x0.22",
            "--thickness", "0.005", "--duration", "1.5", "-o", str(out),
        )
        assert code == 0
        doc = json.loads(stdout)
        assert doc["material"] == "Glass"
        assert doc["f11_hz"] == pytest.approx(513.1502203407077, rel=1e-9)
        buffer = read_wav(out)
        assert buffer.duration == pytest.approx(1.5)
        ridge = dominant_ridge_hz(buffer, window=2048, hop=512)
        assert abs(ridge - 513.15) <= 48000 / 2048

    def test_unknown_material_exits_2_and_lists_options(self, capsys, tmp_path, caplog):
        code, _, _ = run_cli(
            capsys, "render", "--material", "granite",
            "-o", str(tmp_path / "x.wav"),
        )
        assert code == 2
        assert "Glass" in caplog.text  # available materials named in the error

    def test_fabric_decays_faster_than_glass(self, capsys, tmp_path):
        docs = {}
        for name in ("fabric", "glass"):
            code, stdout, _ = run_cli(
                capsys, "render", "--material", name, "--duration", "0.5",
                "--thickness", "0.005", "-o", str(tmp_path / f"{name}.wav"),
            )
            assert code == 0
            docs[name] = json.loads(stdout)
        assert docs["fabric"]["t60_estimate_s"] < docs["glass"]["t60_estimate_s"]

    def test_deterministic_output(self, capsys, tmp_path):
        paths = [tmp_path / "a.wav", tmp_path / "b.wav"]
        for path in paths:
            code, _, _ = run_cli(
                capsys, "render", "--material", "wood", "--duration", "0.3",
                "-o", str(path),
            )
            assert code == 0
        assert paths[0].read_bytes() == paths[1].read_bytes()

    def test_duration_guard(self, capsys, tmp_path):
        code, _, _ = run_cli(
            capsys, "render", "--material", "wood", "--duration", "120",
            "-o", str(tmp_path / "x.wav"),
        )
        assert code == 2

    def test_pcm16_flag(self, capsys, tmp_path):
        out = tmp_path / "pcm.wav"
        code, _, _ = run_cli(
            capsys, "render", "--material", "metal", "--duration", "0.2",
            "--pcm16", "-o", str(out),
        )
        assert code == 0
        blob = out.read_bytes()
        assert blob[20:22] == b"\x01\x00"  # PCM format code


class TestResolve:
    def test_fixture_point(self, capsys, small_scene_dir):
        import tomli

        with open(small_scene_dir / "scene.toml", "rb") as fh:
            truth = tomli.load(fh)["ground_truth"]
        x, y, z = truth["Glass"]
        code, stdout, _ = run_cli(
            capsys, "resolve", "--scene", str(small_scene_dir),
            f"--point={x},{y},{z}",  # '=' form: coordinates may start with '-'
        )
        assert code == 0
        doc = json.loads(stdout)
        assert doc == {"material": "Glass", "tally": {"Glass": 5}}

    def test_point_behind_cameras_exits_3(self, capsys, small_scene_dir):
        code, _, _ = run_cli(
            capsys, "resolve", "--scene", str(small_scene_dir),
            "--point=0,0,-5",
        )
        assert code == 3

    def test_missing_scene_dir(self, capsys, tmp_path):
        code, _, _ = run_cli(
            capsys, "resolve", "--scene", str(tmp_path / "nope"),
            "--point", "0,0,1",
        )
        assert code == 2


class TestSpectrogram:
    def test_png_output(self, capsys, tmp_path):
        wav = tmp_path / "in.wav"
        run_cli(capsys, "render", "--material", "glass", "--duration", "0.4",
                "-o", str(wav))
        out = tmp_path / "spec.png"
        code, stdout, _ = run_cli(capsys, "spectrogram", str(wav), "-o", str(out))
        assert code == 0
        assert out.exists() and out.stat().st_size > 1000
        assert json.loads(stdout)["format"] == "png"

    def test_csv_output_and_floor(self, capsys, tmp_path):
        from sonomat.synth import AudioBuffer
        from sonomat.wavefile import write_wav

        wav = tmp_path / "silence.wav"
        write_wav(wav, AudioBuffer(48000.0, np.zeros(8192)))
        out = tmp_path / "spec.csv"
        code, _, _ = run_cli(capsys, "spectrogram", str(wav), "-o", str(out),
                             "--format", "csv")
        assert code == 0
        grid = np.loadtxt(out, delimiter=",")
        assert np.all(grid == -120.0)

    def test_unreadable_wav_exits_2(self, capsys, tmp_path):
        bad = tmp_path / "bad.wav"
        bad.write_bytes(b"not a wav at all")
        code, _, _ = run_cli(capsys, "spectrogram", str(bad),
                             "-o", str(tmp_path / "x.png"))
        assert code == 2

    def test_contact_sheet_order(self, capsys, tmp_path):
        out = tmp_path / "sheet.png"
        code, stdout, _ = run_cli(
            capsys, "spectrogram", "--contact-sheet", str(out),
            "--duration", "0.3", "--sample-rate", "16000",
        )
        assert code == 0
        assert out.exists()
        order = json.loads(stdout)["order"]
        assert order == [
            "Fabric", "Rubber", "Leather", "Cork", "Paper", "Cardboard",
            "Plastic", "Wood", "Stone", "Glass", "Metal", "Ceramic",
        ]


class TestFixtures:
    def test_gen(self, capsys, tmp_path):
        out = tmp_path / "scene"
        code, stdout, _ = run_cli(
            capsys, "fixtures", "gen", "--out", str(out),
            "--masks", "3", "--mask-size", "160x90",
        )
        assert code == 0
        assert (out / "backdrop.png").exists()
        assert len(list((out / "masks").glob("*.png"))) == 3
        assert len(list((out / "masks").glob("*.toml"))) == 3


class TestServe:
    def test_port_in_use_exits_1(self, capsys, tmp_path):
        blocker = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
        blocker.bind(("127.0.0.1", 0))
        port = blocker.getsockname()[1]
        try:
            code, _, _ = run_cli(
                capsys, "serve", "--osc-port", str(port),
                "--no-audio-device",
            )
            assert code == 1
        finally:
            blocker.close()


class TestHelp:
    @pytest.mark.parametrize("cmd", ["render", "resolve", "serve", "spectrogram"])
    def test_subcommand_help(self, capsys, cmd):
        with pytest.raises(SystemExit) as exit_info:
            main([cmd, "--help"])
        assert exit_info.value.code == 0
        assert cmd in capsys.readouterr().out
