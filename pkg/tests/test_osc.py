import random
import struct

import pytest
from hypothesis import given, settings, strategies as st

from sonomat.errors import OscDecodeError, OscEncodeError
from sonomat.osc import OscMessage, decode_osc, encode_osc


def reference_encode(address, args):
    """Independent OSC 1.0 encoder, assembled field by field from the wire
    rules: NUL-terminated ASCII padded to 4, ',' + one tag per argument,
    big-endian numbers, size-prefixed padded blobs."""

    def pad4(raw):
        return raw + b"\x00" * (4 - len(raw) % 4)

    out = pad4(address.encode("ascii"))
    tags = b","
    body = b""
    for arg in args:
        if isinstance(arg, str):
            tags += b"s"
            body += pad4(arg.encode("ascii"))
        elif isinstance(arg, float):
            tags += b"f"
            body += struct.pack(">f", arg)
        elif isinstance(arg, int):
            tags += b"i"
            body += struct.pack(">i", arg)
        elif isinstance(arg, bytes):
            tags += b"b"
            padded = arg + b"\x00" * ((4 - len(arg) % 4) % 4)
            body += struct.pack(">i", len(arg)) + padded
        else:
            raise TypeError(arg)
    return out + pad4(tags) + body


# Golden wire images, derived by hand from the OSC 1.0 layout.
GOLDEN = [
    (
        OscMessage("/tap/material", ("glass", 0.5)),
        b"/tap/material\x00\x00\x00" + b",sf\x00" + b"glass\x00\x00\x00" + b"\x3f\x00\x00\x00",
    ),
    (
        OscMessage("/ping", ()),
        b"/ping\x00\x00\x00" + b",\x00\x00\x00",
    ),
    (
        OscMessage("/tap/world", (1.0, -2.0, 0.5, 1.0)),
        b"/tap/world\x00\x00"
        + b",ffff\x00\x00\x00"
        + b"\x3f\x80\x00\x00\xc0\x00\x00\x00\x3f\x00\x00\x00\x3f\x80\x00\x00",
    ),
    (
        OscMessage("/config/material", ("Wood",)),
        b"/config/material\x00\x00\x00\x00" + b",s\x00\x00" + b"Wood\x00\x00\x00\x00",
    ),
    (
        OscMessage("/seq", (7,)),
        b"/seq\x00\x00\x00\x00" + b",i\x00\x00" + b"\x00\x00\x00\x07",
    ),
    (
        OscMessage("/b", (b"\x01\x02\x03",)),
        b"/b\x00\x00" + b",b\x00\x00" + b"\x00\x00\x00\x03\x01\x02\x03\x00",
    ),
]


class TestGoldenVectors:
    @pytest.mark.parametrize("message,wire", GOLDEN, ids=[m.address for m, _ in GOLDEN])
    def test_encode_byte_exact(self, message, wire):
        encoded = encode_osc(message)
        assert encoded == wire
        assert len(encoded) % 4 == 0
        # and the frozen bytes agree with the independent field-by-field encoder
        assert wire == reference_encode(message.address, message.arguments)

    @pytest.mark.parametrize("message,wire", GOLDEN, ids=[m.address for m, _ in GOLDEN])
    def test_decode_inverts(self, message, wire):
        decoded = decode_osc(wire)
        assert decoded.address == message.address
        assert decoded.arguments == message.arguments

    def test_spec_sizes(self):
        assert len(encode_osc(GOLDEN[0][0])) == 32
        assert len(encode_osc(GOLDEN[1][0])) == 12


ascii_text = st.text(
    alphabet=st.characters(min_codepoint=0x20, max_codepoint=0x7E), max_size=24
)
addresses = st.builds(lambda s: "/" + s.replace("\x00", ""), ascii_text)
arguments = st.lists(
    st.one_of(
        st.integers(-(2**31), 2**31 - 1),
        st.floats(width=32, allow_nan=False, allow_infinity=False),
        ascii_text,
        st.binary(max_size=24),
    ),
    max_size=6,
)


class TestRoundTrip:
    @given(address=addresses, args=arguments)
    def test_decode_encode_identity(self, address, args):
        message = OscMessage(address, tuple(args))
        assert decode_osc(encode_osc(message)) == message

    @given(address=addresses, args=arguments)
    def test_matches_reference_encoder(self, address, args):
        assert encode_osc(OscMessage(address, tuple(args))) == reference_encode(
            address, tuple(args)
        )


class TestEncodeErrors:
    def test_non_ascii_string(self):
        with pytest.raises(OscEncodeError, match="ASCII"):
            encode_osc(OscMessage("/x", ("café",)))

    def test_address_must_start_with_slash(self):
        with pytest.raises(OscEncodeError, match="start with"):
            encode_osc(OscMessage("ping", ()))

    def test_unsupported_type(self):
        with pytest.raises(OscEncodeError, match="unsupported"):
            encode_osc(OscMessage("/x", ({"a": 1},)))

    def test_int32_range(self):
        with pytest.raises(OscEncodeError, match="int32"):
            encode_osc(OscMessage("/x", (2**31,)))


class TestDecodeErrors:
    def test_all_zero_packet(self):
        with pytest.raises(OscDecodeError):
            decode_osc(b"\x00\x00\x00\x00")

    def test_truncated_float_argument(self):
        good = encode_osc(OscMessage("/x", (0.5,)))
        with pytest.raises(OscDecodeError):
            decode_osc(good[:-4])

    def test_length_not_multiple_of_four(self):
        with pytest.raises(OscDecodeError, match="multiple of 4"):
            decode_osc(b"/ping\x00\x00")

    def test_missing_comma(self):
        with pytest.raises(OscDecodeError, match="','"):
            decode_osc(b"/x\x00\x00abc\x00")

    def test_trailing_garbage(self):
        good = encode_osc(OscMessage("/ping", ()))
        with pytest.raises(OscDecodeError, match="trailing"):
            decode_osc(good + b"\x00\x00\x00\x01")

    def test_negative_blob_size(self):
        packet = b"/b\x00\x00" + b",b\x00\x00" + struct.pack(">i", -4)
        with pytest.raises(OscDecodeError, match="blob"):
            decode_osc(packet)

    def test_oversized_blob_size(self):
        packet = b"/b\x00\x00" + b",b\x00\x00" + struct.pack(">i", 1 << 20)
        with pytest.raises(OscDecodeError):
            decode_osc(packet)

    def test_nonzero_string_padding(self):
        packet = b"/x\x00A" + b",\x00\x00\x00"
        with pytest.raises(OscDecodeError, match="padding"):
            decode_osc(packet)

    def test_fuzz_never_crashes(self):
        rng = random.Random(0xC0FFEE)
        outcomes = {"ok": 0, "error": 0}
        for _ in range(20_000):
            size = rng.randrange(0, 64)
            blob = bytes(rng.getrandbits(8) for _ in range(size))
            try:
                decode_osc(blob)
                outcomes["ok"] += 1
            except OscDecodeError:
                outcomes["error"] += 1
        assert outcomes["error"] > 0  # random bytes are mostly garbage

    def test_fuzz_on_valid_prefixes(self):
        rng = random.Random(7)
        base = encode_osc(OscMessage("/tap/material", ("glass", 0.5)))
        for _ in range(2_000):
            cut = rng.randrange(0, len(base))
            mutated = bytearray(base[:cut] + base[cut + 1:] + b"\x00")
            try:
                decode_osc(bytes(mutated))
            except OscDecodeError:
                pass
