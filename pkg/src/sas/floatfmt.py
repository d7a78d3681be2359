"""Float formatting shared by the file-facing interfaces (CSV, selection JSON).

Floats are emitted with 9 significant digits so that runs are comparable and
byte-identical across platforms.
"""

import math

SIG_DIGITS = 9


def fmt_float(x: float) -> str:
    """Render with 9 significant digits ('nan' for undefined values)."""
    if math.isnan(x):
        return "nan"
    return f"{x:.{SIG_DIGITS}g}"


def round_float(x: float | None) -> float | None:
    """Round to 9 significant digits for JSON output; NaN/None become None."""
    if x is None or math.isnan(x):
        return None
    return float(f"{x:.{SIG_DIGITS}g}")
