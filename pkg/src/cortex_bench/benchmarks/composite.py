"""Composite brain score and the published reference rows."""
from __future__ import annotations

from typing import Dict, NamedTuple


def composite(v4, it, behavior, ost=0, include_ost: bool = True):
    """Arithmetic mean of the component scores, each floored at 0.

    Works with any numeric type supporting ``+`` and ``/`` (floats, or
    ``decimal.Decimal`` for exact rounding checks).  ``include_ost=False``
    averages the three remaining scores.
    """
    parts = [v4, it, behavior] + ([ost] if include_ost else [])
    parts = [p if p > 0 else p * 0 for p in parts]
    return sum(parts[1:], parts[0]) / len(parts)


class ReferenceRow(NamedTuple):
    model: str
    brain_score: str
    v4: str
    it: str
    ost: str
    behavior: str


# Published leaderboard values, kept as strings so they can be parsed exactly.
REFERENCE_ROWS = [ReferenceRow(*r) for r in [
    ("CORnet-S", ".471", ".65", ".6", ".25", ".382"),
    ("DenseNet-169", ".412", ".663", ".606", "0", ".378"),
    ("ResNet-101 v2", ".407", ".653", ".585", "0", ".389"),
    ("DenseNet-201", ".406", ".655", ".601", "0", ".368"),
    ("DenseNet-121", ".406", ".657", ".597", "0", ".369"),
    ("ResNet-152 v2", ".406", ".658", ".589", "0", ".377"),
    ("ResNet-50 v2", ".405", ".653", ".589", "0", ".377"),
    ("Xception", ".399", ".671", ".565", "0", ".361"),
    ("Inception v2", ".399", ".646", ".593", "0", ".357"),
    ("Inception v1", ".399", ".649", ".583", "0", ".362"),
    ("ResNet-18", ".398", ".645", ".583", "0", ".364"),
    ("NASnet Mobile", ".398", ".65", ".598", "0", ".342"),
    ("PNASnet Large", ".396", ".644", ".59", "0", ".351"),
    ("Inception ResNet v2", ".396", ".639", ".593", "0", ".352"),
    ("NASnet Large", ".395", ".65", ".591", "0", ".339"),
    ("Best MobileNet", ".395", ".613", ".59", "0", ".377"),
    ("VGG-19", ".394", ".672", ".566", "0", ".338"),
    ("Inception V4", ".393", ".628", ".575", "0", ".371"),
    ("Inception V3", ".392", ".646", ".587", "0", ".335"),
    ("ResNet-34", ".392", ".629", ".559", "0", ".378"),
    ("VGG-16", ".391", ".669", ".572", "0", ".321"),
    ("Best BaseNet", ".378", ".663", ".594", "0", ".256"),
    ("AlexNet", ".366", ".631", ".589", "0", ".245"),
    ("SqueezeNet v1.1", ".351", ".652", ".553", "0", ".201"),
    ("SqueezeNet v1.0", ".341", ".641", ".542", "0", ".18"),
]]


def reference_table() -> Dict[str, ReferenceRow]:
    return {r.model: r for r in REFERENCE_ROWS}
