"""Number formatting shared by report renderers.

Counts get thousands separators; means are rounded to two decimals with
trailing zeros trimmed (so 952.0 renders as "952" and 1621.70 as
"1621.7"); percentages get one decimal.
"""


def fmt_int(value) -> str:
    return f"{int(value):,}"


def fmt_num(value, decimals: int = 2) -> str:
    text = f"{float(value):.{decimals}f}"
    if "." in text:
        text = text.rstrip("0").rstrip(".")
    return text or "0"


def fmt_pct(value, decimals: int = 1) -> str:
    return f"{float(value):.{decimals}f}%"


def fmt_rate(value, decimals: int = 4) -> str:
    return f"{float(value):.{decimals}f}"


def fmt_sci(value, digits: int = 3) -> str:
    if value == 0:
        return "0"
    return f"{float(value):.{digits - 1}e}"
