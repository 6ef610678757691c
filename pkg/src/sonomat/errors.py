"""Exception types shared across the engine."""


class SonomatError(Exception):
    """Base class for all engine errors."""


class MaterialDbError(SonomatError):
    """Material database could not be parsed or validated."""


class UnknownMaterialError(SonomatError):
    """A material name that is not in the table."""


class UnknownColorError(SonomatError):
    """A label color with no material mapping (unmapped segmentation class)."""

    def __init__(self, rgb):
        self.rgb = tuple(rgb)
        super().__init__(f"no material mapped to color {self.rgb}")


class EmptyModelError(SonomatError):
    """No plate mode fits under the requested frequency ceiling."""


class BehindCameraError(SonomatError):
    """World point projects behind the camera (z <= 0 in camera frame)."""


class NoVoteError(SonomatError):
    """Every mask in the buffer was skipped; the material vote is empty."""


class StaleTimestampError(SonomatError):
    """Mask pushed with a timestamp not newer than the buffer head."""


class OscError(SonomatError):
    """Base class for OSC wire-format errors."""


class OscEncodeError(OscError):
    """Message cannot be encoded (non-ASCII string, unsupported type)."""


class OscDecodeError(OscError):
    """Malformed OSC packet."""


class WavFormatError(SonomatError):
    """File is not a WAV this reader understands."""
