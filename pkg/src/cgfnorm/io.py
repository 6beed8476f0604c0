"""Sample CSV input, the binary calibration file, and JSON output.

Calibration file layout (all integers and floats little-endian)::

    magic      9 bytes   b"CGFNT-CAL"
    version    uint16
    hlen       uint32    length of the header
    header     hlen bytes of UTF-8 JSON (sorted keys)
    points     float64[n_points * p], row-major
    moments    float64[4]   mean_h, sd_h, mean_d, sd_d
    null_t     float64[s_reps]
    null_h     float64[s_reps or 0]
    null_d     float64[s_reps or 0]
    digest     32 bytes  SHA-256 of everything above
"""

import csv
import hashlib
import json
import math
import struct
from pathlib import Path

import numpy as np

from .calibration import MULTIVARIATE, NullCalibration
from .ecgf import POINT_LAWS, EvalPointSet
from .errors import CorruptCalibration, CsvParseError

MAGIC = b"CGFNT-CAL"
VERSION = 1
_F64 = np.dtype("<f8")


def parse_sample_csv(path, header=False):
    """Read a comma-separated numeric sample into an ``(n, p)`` float array.

    Parameters
    ----------
    path : str or Path
    header : bool
        Skip the first row.

    Raises
    ------
    CsvParseError
        For ragged rows, non-numeric cells or an empty file; carries 1-based
        ``row`` and ``column``.
    """
    rows = []
    width = None
    with open(path, newline="", encoding="utf-8") as fh:
        for lineno, rec in enumerate(csv.reader(fh), start=1):
            if header and lineno == 1:
                continue
            if not rec or all(not c.strip() for c in rec):
                continue
            if width is None:
                width = len(rec)
            elif len(rec) != width:
                raise CsvParseError(f"expected {width} fields, found {len(rec)}", lineno)
            vals = []
            for col, cell in enumerate(rec, start=1):
                try:
                    v = float(cell)
                except ValueError:
                    raise CsvParseError(f"not a number: {cell!r}", lineno, col) from None
                if not math.isfinite(v):
                    raise CsvParseError(f"non-finite value {cell!r}", lineno, col)
                vals.append(v)
            rows.append(vals)
    if not rows:
        raise CsvParseError("no data rows", 1)
    return np.array(rows, dtype=float)


def _header(cal):
    return {
        "kind": cal.kind,
        "n": cal.n,
        "p": cal.p,
        "s_reps": cal.s_reps,
        "seed": cal.seed,
        "redraws": cal.redraws,
        "radius": cal.point_set.radius.hex(),
        "n_points": cal.point_set.n_points,
        "points_seed": cal.point_set.seed,
        "points_law": cal.point_set.law,
        "has_components": cal.null_h is not None,
    }


def calibration_bytes(cal):
    """Serialize a `NullCalibration` to the binary file format."""
    head = json.dumps(_header(cal), sort_keys=True, separators=(",", ":")).encode("utf-8")
    parts = [
        MAGIC,
        struct.pack("<HI", VERSION, len(head)),
        head,
        np.ascontiguousarray(cal.point_set.points, dtype=_F64).tobytes(),
        np.array([cal.mean_h, cal.sd_h, cal.mean_d, cal.sd_d], dtype=_F64).tobytes(),
        np.ascontiguousarray(cal.null_t, dtype=_F64).tobytes(),
    ]
    if cal.null_h is not None:
        parts.append(np.ascontiguousarray(cal.null_h, dtype=_F64).tobytes())
        parts.append(np.ascontiguousarray(cal.null_d, dtype=_F64).tobytes())
    body = b"".join(parts)
    return body + hashlib.sha256(body).digest()


def write_calibration(cal, path):
    Path(path).write_bytes(calibration_bytes(cal))


def _take(buf, pos, count):
    end = pos + 8 * count
    if end > len(buf):
        raise CorruptCalibration("file is truncated")
    arr = np.frombuffer(buf, dtype=_F64, count=count, offset=pos).astype(float)
    return arr, end


def calibration_from_bytes(data):
    """Parse and verify a calibration file's contents."""
    if len(data) < len(MAGIC) + 6 + 32 or data[: len(MAGIC)] != MAGIC:
        raise CorruptCalibration("not a calibration file (bad magic)")
    body, digest = data[:-32], data[-32:]
    version, hlen = struct.unpack_from("<HI", data, len(MAGIC))
    if version != VERSION:
        raise CorruptCalibration(f"unsupported calibration format version {version} (expected {VERSION})")
    if hashlib.sha256(body).digest() != digest:
        raise CorruptCalibration("checksum mismatch")
    pos = len(MAGIC) + 6
    try:
        head = json.loads(body[pos : pos + hlen].decode("utf-8"))
        p, n_points, s = int(head["p"]), int(head["n_points"]), int(head["s_reps"])
        radius = float.fromhex(head["radius"])
    except (ValueError, KeyError, TypeError) as exc:
        raise CorruptCalibration(f"bad header: {exc}") from None
    pos += hlen
    points, pos = _take(body, pos, n_points * p)
    moments, pos = _take(body, pos, 4)
    null_t, pos = _take(body, pos, s)
    null_h = null_d = None
    if head.get("has_components"):
        null_h, pos = _take(body, pos, s)
        null_d, pos = _take(body, pos, s)
    if pos != len(body):
        raise CorruptCalibration("trailing bytes after arrays")
    points = points.reshape(n_points, p)
    points.setflags(write=False)
    law = head.get("points_law", "ball")
    if law not in POINT_LAWS:
        raise CorruptCalibration(f"unknown point law {law!r}")
    pts = EvalPointSet(points=points, radius=radius, seed=int(head["points_seed"]), law=law)
    return NullCalibration(
        n=int(head["n"]), p=p, point_set=pts, s_reps=s,
        mean_h=float(moments[0]), sd_h=float(moments[1]),
        mean_d=float(moments[2]), sd_d=float(moments[3]),
        null_t=null_t, kind=head["kind"], seed=int(head["seed"]),
        null_h=null_h, null_d=null_d, redraws=int(head.get("redraws", 0)),
    )


def read_calibration(path):
    return calibration_from_bytes(Path(path).read_bytes())


def calibration_summary(cal):
    out = {
        "kind": cal.kind, "n": cal.n, "p": cal.p, "R": cal.point_set.radius,
        "N": cal.point_set.n_points, "S": cal.s_reps, "seed": cal.seed,
        "points_seed": cal.point_set.seed, "points_law": cal.point_set.law, "redraws": cal.redraws,
        "mean_d": cal.mean_d, "sd_d": cal.sd_d,
    }
    if cal.kind == MULTIVARIATE:
        out.update(mean_h=cal.mean_h, sd_h=cal.sd_h)
    return out


# --- JSON with 17 significant digits ---------------------------------------


def _encode(obj, out):
    if obj is None or obj is True or obj is False:
        out.append(json.dumps(obj))
    elif isinstance(obj, (bool, np.bool_)):
        out.append("true" if obj else "false")
    elif isinstance(obj, (int, np.integer)):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        v = float(obj)
        out.append(format(v, ".17g") if math.isfinite(v) else "null")
    elif isinstance(obj, str):
        out.append(json.dumps(obj))
    elif isinstance(obj, dict):
        out.append("{")
        for i, (k, v) in enumerate(obj.items()):
            if i:
                out.append(",")
            out.append(json.dumps(str(k)))
            out.append(":")
            _encode(v, out)
        out.append("}")
    elif isinstance(obj, (list, tuple, np.ndarray)):
        out.append("[")
        for i, v in enumerate(obj):
            if i:
                out.append(",")
            _encode(v, out)
        out.append("]")
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj):
    """JSON text with every float written to 17 significant digits; non-finite floats become null."""
    out = []
    _encode(obj, out)
    return "".join(out)


def load_schema(name):
    """Load a packaged JSON schema by file stem (e.g. ``"test_result"``)."""
    path = Path(__file__).with_name("schemas") / f"{name}.schema.json"
    return json.loads(path.read_text(encoding="utf-8"))
