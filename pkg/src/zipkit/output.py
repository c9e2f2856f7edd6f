"""CSV/JSON writers: full double precision, locale-independent, atomic."""
import csv
import io
import json
import math
import os
import tempfile
from pathlib import Path

SCHEMA_VERSION = 1
SCHEMA_DIR = Path(__file__).with_name("schemas")


def fmt_float(x):
    """17 significant digits; non-finite values as ``nan``/``inf``/``-inf``."""
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(x, ".17g")


def _cell(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return fmt_float(v)
    if v is None:
        return ""
    return str(v)


def atomic_write(path, text):
    """Write ``text`` to a temporary file next to ``path`` and rename it."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def csv_text(schema, columns, rows):
    """CSV with a ``# schema=<name> version=<n>`` line above the header row."""
    buf = io.StringIO()
    buf.write(f"# schema=zipkit.{schema} version={SCHEMA_VERSION}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_cell(row.get(c)) for c in columns])
    return buf.getvalue()


def _json_value(v, indent, level):
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if isinstance(v, bool) or v is None:
        return json.dumps(v)
    if isinstance(v, float):
        return fmt_float(v) if math.isfinite(v) else "null"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, str):
        return json.dumps(v, ensure_ascii=False)
    if isinstance(v, dict):
        if not v:
            return "{}"
        items = [f"{pad}{json.dumps(str(k), ensure_ascii=False)}: {_json_value(x, indent, level + 1)}"
                 for k, x in v.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(v, (list, tuple)):
        if not v:
            return "[]"
        items = [pad + _json_value(x, indent, level + 1) for x in v]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    if hasattr(v, "item"):
        return _json_value(v.item(), indent, level)
    raise TypeError(f"cannot serialize {type(v).__name__}")


def json_text(doc, indent=2):
    """JSON with floats at 17 significant digits; NaN and infinities become null."""
    return _json_value(doc, indent, 0) + "\n"


def gnuplot_text(columns, rows, block_key=None):
    """Whitespace-separated columns; a blank line between blocks of equal
    ``block_key`` so each block plots as its own curve."""
    lines = ["# " + " ".join(columns)]
    for i, row in enumerate(rows):
        if block_key is not None and i > 0 and row.get(block_key) != rows[i - 1].get(block_key):
            lines += ["", ""]
        lines.append(" ".join(_cell(row.get(c)) or "nan" for c in columns))
    return "\n".join(lines) + "\n"


def load_schema(name):
    with open(SCHEMA_DIR / f"{name}.schema.json", encoding="utf-8") as fh:
        return json.load(fh)
