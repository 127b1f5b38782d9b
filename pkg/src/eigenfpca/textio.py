"""Text serialization helpers: lossless float formatting, sidecar key-value files."""

import os


def fmt_float(x) -> str:
    """Decimal text with 17 significant digits; round-trips IEEE doubles exactly."""
    return format(float(x), ".17g")


def open_text(path, mode):
    """Open with a fixed newline convention so outputs are byte-stable."""
    return open(os.fspath(path), mode, encoding="utf-8", newline="\n")


def write_sidecar(path, pairs) -> None:
    """Write ``key = value`` lines; values pass through str() (floats pre-formatted)."""
    with open_text(path, "w") as f:
        for k, v in pairs:
            f.write(f"{k} = {v}\n")


def read_sidecar(path) -> dict:
    out = {}
    with open_text(path, "r") as f:
        for line in f:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            k, _, v = line.partition("=")
            out[k.strip()] = v.strip()
    return out


def write_csv(path, header, rows) -> None:
    """Plain comma-separated writer; all cells already strings."""
    with open_text(path, "w") as f:
        f.write(",".join(header) + "\n")
        for row in rows:
            f.write(",".join(row) + "\n")


def read_csv(path):
    """Return (header, rows-of-strings); no type coercion."""
    with open_text(path, "r") as f:
        header = f.readline().rstrip("\n").split(",")
        rows = [line.rstrip("\n").split(",") for line in f if line.strip()]
    return header, rows
