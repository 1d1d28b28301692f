"""File formats: curves, patches, verification and oracle reports, meshes.

Text formats are JSON with reals written in shortest round-trip decimal
form, so write -> read -> write reproduces the same bytes. Complex numbers
are [re, im] pairs; non-finite values are written as null. Large tables
keep one record per line to stay diffable.
"""

from __future__ import annotations

import csv
import hashlib
import io as _io
import json
import zipfile
from pathlib import Path

import numpy as np

from .config import CorruptDataError, PreconditionError
from .curves import ContactCurve, explicit_curve, great_circle_curve, twisted_circle_curve
from .frames import ModelParams
from .horosphere import ORACLE_FIELDS, OracleReport
from .reconstruction import GridSpec, HopfPatch
from .verify import NODE_FIELDS

PATCH_FORMAT = "hopfch2-patch"
REPORT_FORMAT = "hopfch2-verification"
ORACLE_FORMAT = "hopfch2-oracle"
VERSION = 1

BALL_COORDS = ("re_w1", "im_w1", "re_w2", "im_w2")
AXES = ("s", "t", "tau")

# Fixed zip timestamp so binary patches are byte-stable.
_ZIP_DATE = (1980, 1, 1, 0, 0, 0)


def _num(x):
    x = float(x)
    return x if np.isfinite(x) else None


def _pair(z):
    z = complex(z)
    return [_num(z.real), _num(z.imag)]


def _pairs(v):
    return [_pair(z) for z in np.asarray(v).ravel()]


def _complex(pairs, shape=None):
    try:
        arr = np.array([complex(np.nan if re is None else re, np.nan if im is None else im)
                        for re, im in pairs], dtype=complex)
    except (TypeError, ValueError) as exc:
        raise CorruptDataError(f"bad complex pair list: {exc}") from None
    if shape is not None:
        if arr.size != int(np.prod(shape)):
            raise CorruptDataError(f"expected {int(np.prod(shape))} complex values, got {arr.size}")
        arr = arr.reshape(shape)
    return arr


def _clean(obj):
    """Convert numpy scalars and arrays into JSON-ready values."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return _num(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return _pair(obj)
    return obj


def _dumps(header: dict, key: str | None = None, records=()) -> str:
    """JSON text of ``header`` with ``records`` under ``key``, one per line."""
    body = json.dumps(_clean(header), indent=1, allow_nan=False)
    if key is None:
        return body + "\n"
    lines = ",\n".join("  " + json.dumps(_clean(r), allow_nan=False, separators=(",", ":"))
                       for r in records)
    inner = body[:-2] if body.endswith("\n}") else body[:-1]
    sep = ",\n" if header else "\n"
    return f"{inner}{sep} \"{key}\": [\n{lines}\n ]\n}}\n"


def _loads(text: str, what: str) -> dict:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CorruptDataError(f"{what}: invalid JSON ({exc})") from None
    if not isinstance(obj, dict):
        raise CorruptDataError(f"{what}: expected a JSON object")
    return obj


def _read_text(path) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except UnicodeDecodeError as exc:
        raise CorruptDataError(f"{path}: not UTF-8 text ({exc})") from None


def _require(d: dict, keys, what: str):
    missing = [k for k in keys if k not in d]
    if missing:
        raise CorruptDataError(f"{what}: missing fields {missing}")


# Curves

def curve_to_dict(curve: ContactCurve) -> dict:
    return {
        "generator": curve.generator,
        "t_min": curve.t_min,
        "t_max": curve.t_max,
        "samples": [{"t": float(t), "w": _pairs(w)} for t, w in zip(curve.t, curve.w)],
    }


def curve_text(curve: ContactCurve) -> str:
    d = curve_to_dict(curve)
    samples = d.pop("samples")
    return _dumps(d, "samples", samples)


def curve_digest(curve: ContactCurve) -> str:
    return hashlib.sha256(curve_text(curve).encode("utf-8")).hexdigest()


def curve_from_dict(d: dict, what: str = "curve") -> ContactCurve:
    """Rebuild a curve; generators with closed forms are re-evaluated exactly.

    Stored samples of an exact generator must agree with the closed form,
    otherwise the file is treated as corrupt.
    """
    _require(d, ("generator", "t_min", "t_max", "samples"), what)
    gen = d["generator"]
    if not isinstance(gen, dict) or "type" not in gen:
        raise CorruptDataError(f"{what}: generator must be an object with a type")
    try:
        t = np.array([float(s["t"]) for s in d["samples"]])
        w = np.stack([_complex(s["w"], (2,)) for s in d["samples"]])
    except (KeyError, TypeError, ValueError) as exc:
        raise CorruptDataError(f"{what}: bad samples ({exc})") from None
    if len(t) < 4:
        raise CorruptDataError(f"{what}: need at least 4 samples")
    if not np.all(np.isfinite(t)) or not np.all(np.isfinite(w)):
        raise CorruptDataError(f"{what}: non-finite sample")
    if t[0] != d["t_min"] or t[-1] != d["t_max"]:
        raise CorruptDataError(f"{what}: t_min/t_max disagree with samples")
    kind = gen["type"]
    try:
        if kind == "great-circle":
            curve = great_circle_curve(_complex(gen["p"], (2,)), _complex(gen["q"], (2,)),
                                       int(gen["n_samples"]))
        elif kind == "twisted-circle":
            curve = twisted_circle_curve(int(gen["n_samples"]))
        else:
            curve = explicit_curve(t, w, gen)
    except PreconditionError as exc:
        raise CorruptDataError(f"{what}: {exc}") from None
    except (KeyError, TypeError, ValueError) as exc:
        raise CorruptDataError(f"{what}: bad generator ({exc})") from None
    if kind in ("great-circle", "twisted-circle"):
        if curve.t.shape != t.shape or np.max(np.abs(curve.t - t)) > 1e-12 \
                or np.max(np.abs(curve.w - w)) > 1e-12:
            raise CorruptDataError(f"{what}: samples disagree with the {kind} generator")
    return curve


def write_curve(path, curve: ContactCurve) -> None:
    Path(path).write_text(curve_text(curve), encoding="utf-8")


def read_curve(path) -> ContactCurve:
    return curve_from_dict(_loads(_read_text(path), str(path)), str(path))


# Patches

def _grid_dict(grid: GridSpec) -> dict:
    return {"n_s": grid.n_s, "n_t": grid.n_t, "n_tau": grid.n_tau,
            "s_range": None if grid.s_range is None else list(grid.s_range),
            "t_range": None if grid.t_range is None else list(grid.t_range),
            "tau_range": list(grid.tau_range)}


def _grid_from(d: dict) -> GridSpec:
    _require(d, ("n_s", "n_t", "n_tau", "s_range", "t_range", "tau_range"), "grid")
    rng = lambda v: None if v is None else (float(v[0]), float(v[1]))  # noqa: E731
    return GridSpec(int(d["n_s"]), int(d["n_t"]), int(d["n_tau"]), rng(d["s_range"]),
                    rng(d["t_range"]), rng(d["tau_range"]))


def patch_header(patch: HopfPatch) -> dict:
    curves = [curve_to_dict(c) for c in (patch.curve1, patch.curve2)]
    return {
        "format": PATCH_FORMAT,
        "version": VERSION,
        "params": {"r": patch.params.r, "phi": patch.params.phi},
        "grid": _grid_dict(patch.grid),
        "tol_coincide": patch.tol_coincide,
        "axes": {"s": patch.s, "t": patch.t, "tau": patch.tau},
        "curve_digests": [curve_digest(patch.curve1), curve_digest(patch.curve2)],
        "curves": curves,
    }


def patch_records(patch: HopfPatch):
    sv = patch.singular_values
    for idx in np.ndindex(patch.shape):
        excl = bool(patch.excluded[idx])
        yield {
            "index": list(idx),
            "stu": [patch.s[idx[0]], patch.t[idx[1]], patch.tau[idx[2]]],
            "excluded": excl,
            "frame": None if excl else _pairs(patch.frames[idx]),
            "ball": None if excl else _pairs(patch.ball[idx]),
            "singular_value": None if sv is None else _num(sv[idx]),
        }


def patch_text(patch: HopfPatch) -> str:
    return _dumps(patch_header(patch), "nodes", patch_records(patch))


def _patch_from(header: dict, frames, ball, excluded, sv, what: str) -> HopfPatch:
    if header.get("format") != PATCH_FORMAT:
        raise CorruptDataError(f"{what}: not a patch file")
    _require(header, ("params", "grid", "axes", "curve_digests", "curves", "tol_coincide"), what)
    curves = [curve_from_dict(c, f"{what} curve {k + 1}") for k, c in enumerate(header["curves"])]
    if len(curves) != 2:
        raise CorruptDataError(f"{what}: expected two curves")
    for k, (c, dig) in enumerate(zip(curves, header["curve_digests"])):
        if curve_digest(c) != dig:
            raise CorruptDataError(f"{what}: digest mismatch for curve {k + 1}")
    try:
        params = ModelParams(float(header["params"]["r"]), float(header["params"]["phi"]))
        grid = _grid_from(header["grid"])
    except PreconditionError as exc:
        raise CorruptDataError(f"{what}: {exc}") from None
    axes = [np.asarray(header["axes"][k], dtype=float) for k in AXES]
    if tuple(len(a) for a in axes) != grid.shape:
        raise CorruptDataError(f"{what}: axes disagree with the grid")
    if frames.shape != grid.shape + (3, 3) or ball.shape != grid.shape + (2,) \
            or excluded.shape != grid.shape:
        raise CorruptDataError(f"{what}: node arrays disagree with the grid")
    ok = ~excluded
    if not np.all(np.isfinite(frames[ok])) or not np.all(np.isfinite(ball[ok])):
        raise CorruptDataError(f"{what}: non-finite frame at a valid node")
    return HopfPatch(params, grid, curves[0], curves[1], *axes, frames=frames, excluded=excluded,
                     ball=ball, singular_values=sv, tol_coincide=float(header["tol_coincide"]))


def patch_from_text(text: str, what: str = "patch") -> HopfPatch:
    d = _loads(text, what)
    _require(d, ("grid", "nodes"), what)
    grid = _grid_from(d["grid"])
    shape = grid.shape
    frames = np.full(shape + (3, 3), np.nan, dtype=complex)
    ball = np.full(shape + (2,), np.nan, dtype=complex)
    excluded = np.zeros(shape, dtype=bool)
    sv = np.full(shape, np.nan)
    have_sv = False
    seen = np.zeros(shape, dtype=bool)
    try:
        for rec in d["nodes"]:
            idx = tuple(int(i) for i in rec["index"])
            if len(idx) != 3 or any(not 0 <= i < n for i, n in zip(idx, shape)):
                raise CorruptDataError(f"{what}: node index {idx} out of range")
            seen[idx] = True
            excluded[idx] = bool(rec["excluded"])
            if not excluded[idx]:
                frames[idx] = _complex(rec["frame"], (3, 3))
                ball[idx] = _complex(rec["ball"], (2,))
            if rec.get("singular_value") is not None:
                sv[idx] = float(rec["singular_value"])
                have_sv = True
    except (KeyError, TypeError, ValueError) as exc:
        raise CorruptDataError(f"{what}: bad node record ({exc})") from None
    if not np.all(seen):
        raise CorruptDataError(f"{what}: missing node records")
    header = {k: v for k, v in d.items() if k != "nodes"}
    return _patch_from(header, frames, ball, excluded, sv if have_sv else None, what)


def _npz_bytes(arrays: dict[str, np.ndarray]) -> bytes:
    buf = _io.BytesIO()
    with zipfile.ZipFile(buf, "w", compression=zipfile.ZIP_STORED) as zf:
        for name, arr in arrays.items():
            member = _io.BytesIO()
            np.lib.format.write_array(member, np.ascontiguousarray(arr), allow_pickle=False)
            info = zipfile.ZipInfo(name + ".npy", date_time=_ZIP_DATE)
            zf.writestr(info, member.getvalue())
    return buf.getvalue()


def write_patch(path, patch: HopfPatch) -> None:
    """JSON patch file, or a binary numpy archive when ``path`` ends in .npz."""
    path = Path(path)
    if path.suffix == ".npz":
        header = json.dumps(_clean(patch_header(patch)), allow_nan=False)
        sv = patch.singular_values
        arrays = {
            "header": np.frombuffer(header.encode("utf-8"), dtype=np.uint8),
            "frames": patch.frames,
            "ball": patch.ball,
            "excluded": patch.excluded,
            "singular_values": np.full(patch.shape, np.nan) if sv is None else sv,
            "has_singular_values": np.array(sv is not None),
        }
        path.write_bytes(_npz_bytes(arrays))
    else:
        path.write_text(patch_text(patch), encoding="utf-8")


def read_patch(path) -> HopfPatch:
    path = Path(path)
    if path.suffix == ".npz":
        try:
            with np.load(path, allow_pickle=False) as z:
                header = _loads(z["header"].tobytes().decode("utf-8"), str(path))
                sv = z["singular_values"] if bool(z["has_singular_values"]) else None
                return _patch_from(header, z["frames"], z["ball"], z["excluded"], sv, str(path))
        except (zipfile.BadZipFile, KeyError, ValueError, OSError) as exc:
            if isinstance(exc, (FileNotFoundError, PermissionError)):
                raise
            raise CorruptDataError(f"{path}: bad patch archive ({exc})") from None
    return patch_from_text(_read_text(path), str(path))


PATCH_CSV_FIELDS = (["i", "j", "k", "s", "t", "tau", "excluded", "singular_value"]
                    + list(BALL_COORDS)
                    + [f"u{a}{b}_{part}" for a in range(3) for b in range(3) for part in ("re", "im")])


def _csv_num(x) -> str:
    x = float(x)
    return repr(x) if np.isfinite(x) else ""


def write_patch_csv(path, patch: HopfPatch) -> None:
    """Flat table, one node per row."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(PATCH_CSV_FIELDS)
        sv = patch.singular_values
        for idx in np.ndindex(patch.shape):
            b = patch.ball[idx]
            u = patch.frames[idx].ravel()
            row = list(idx) + [_csv_num(patch.s[idx[0]]), _csv_num(patch.t[idx[1]]),
                               _csv_num(patch.tau[idx[2]]), int(patch.excluded[idx]),
                               "" if sv is None else _csv_num(sv[idx])]
            row += [_csv_num(b[0].real), _csv_num(b[0].imag), _csv_num(b[1].real), _csv_num(b[1].imag)]
            for z in u:
                row += [_csv_num(z.real), _csv_num(z.imag)]
            w.writerow(row)


# Reports

def _record_rows(nodes: dict, index, fields):
    for n, idx in enumerate(index):
        rec = {"index": [int(i) for i in idx]}
        for f in fields:
            if f in nodes:
                rec[f] = nodes[f][n]
        yield rec


def report_header(report) -> dict:
    """Summary part of a verification or oracle report."""
    head = {"format": ORACLE_FORMAT if isinstance(report, OracleReport) else REPORT_FORMAT,
            "version": VERSION,
            "params": {"r": report.params.r, "phi": report.params.phi},
            "h": report.h,
            "passed": report.passed,
            "counts": report.counts,
            "gates": report.gates}
    if isinstance(report, OracleReport):
        head["level"] = report.level
        head["sigma_centroid"] = _pairs(report.sigma_centroid)
    else:
        head["informational"] = report.informational
    return head


def report_fields(report) -> list[str]:
    base = ORACLE_FIELDS if isinstance(report, OracleReport) else NODE_FIELDS + (
        "frame_defect", "sigma_roundtrip", "sigma_defect", "near_excluded", "degenerate")
    return [f for f in base if f in report.nodes]


def report_to_dict(report) -> dict:
    d = _clean(report_header(report))
    d["nodes"] = _clean(list(_record_rows(report.nodes, report.index, report_fields(report))))
    return d


def report_text(report) -> str:
    d = report if isinstance(report, dict) else report_to_dict(report)
    head = {k: v for k, v in d.items() if k != "nodes"}
    return _dumps(head, "nodes", d["nodes"])


def write_report(path, report) -> None:
    Path(path).write_text(report_text(report), encoding="utf-8")


def read_report(path) -> dict:
    d = _loads(_read_text(path), str(path))
    if d.get("format") not in (REPORT_FORMAT, ORACLE_FORMAT):
        raise CorruptDataError(f"{path}: not a report file")
    _require(d, ("gates", "nodes", "passed"), str(path))
    return d


def write_report_csv(path, report) -> None:
    """Per-node residuals, one row per verified node."""
    d = report if isinstance(report, dict) else report_to_dict(report)
    fields = [k for k in (d["nodes"][0] if d["nodes"] else {}) if k != "index"]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["i", "j", "k"] + fields)
        for rec in d["nodes"]:
            row = list(rec["index"])
            for f in fields:
                v = rec[f]
                row.append("" if v is None else (int(v) if isinstance(v, bool) else repr(v)))
            w.writerow(row)


def write_gates_csv(path, report) -> None:
    d = report if isinstance(report, dict) else report_to_dict(report)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["name", "max", "mean", "threshold", "count", "passed"])
        for g in d["gates"]:
            w.writerow([g["name"], g["max"], g["mean"], g["threshold"], g["count"], int(g["passed"])])


# Mesh export

def parse_slice(spec: str) -> tuple[int, int]:
    """'tau=3' -> (2, 3): the fixed axis and its index."""
    try:
        name, value = spec.split("=")
        axis = AXES.index(name.strip())
        return axis, int(value)
    except ValueError:
        raise PreconditionError(f"slice spec must look like 'tau=0', got {spec!r}") from None


def parse_projection(spec: str | None) -> tuple[int, int, int]:
    """Indices of the three kept ball coordinates, given the one to drop."""
    spec = spec or "im_w2"
    name = spec[5:] if spec.startswith("drop:") else spec
    if name not in BALL_COORDS:
        raise PreconditionError(f"projection must drop one of {BALL_COORDS}, got {spec!r}")
    drop = BALL_COORDS.index(name)
    return tuple(k for k in range(4) if k != drop)


def slice_grid(patch: HopfPatch, axis: int, index: int):
    """Ball coordinates (n1, n2, 4), validity mask and parameters of a slice."""
    n = patch.shape[axis]
    if not 0 <= index < n:
        raise PreconditionError(f"slice index {index} out of range for axis {AXES[axis]} (size {n})")
    ball = np.take(patch.ball, index, axis=axis)
    real = np.stack([ball[..., 0].real, ball[..., 0].imag, ball[..., 1].real, ball[..., 1].imag], axis=-1)
    valid = ~np.take(patch.excluded, index, axis=axis)
    pts = np.take(patch.points(), index, axis=axis)
    return real, valid, pts


def mesh_text(patch: HopfPatch, axis: int, index: int, projection=None) -> str:
    keep = parse_projection(projection) if not isinstance(projection, tuple) else projection
    real, valid, _ = slice_grid(patch, axis, index)
    n1, n2 = valid.shape
    vid = np.zeros(valid.shape, dtype=int)
    lines = [f"# hopfch2 slice {AXES[axis]}={index}; coordinates "
             + " ".join(BALL_COORDS[k] for k in keep)]
    count = 0
    for i in range(n1):
        for j in range(n2):
            if valid[i, j]:
                count += 1
                vid[i, j] = count
                lines.append("v " + " ".join(repr(float(real[i, j, k])) for k in keep))
    for i in range(n1 - 1):
        for j in range(n2 - 1):
            quad = (vid[i, j], vid[i + 1, j], vid[i + 1, j + 1], vid[i, j + 1])
            if all(quad):
                lines.append("f " + " ".join(str(q) for q in quad))
    return "\n".join(lines) + "\n"


def write_mesh(path, patch: HopfPatch, axis: int, index: int, projection=None) -> Path:
    """OBJ quad mesh of a slice plus a CSV of all four ball coordinates.

    Returns the CSV path, which sits next to the OBJ with the same stem.
    """
    path = Path(path)
    path.write_text(mesh_text(patch, axis, index, projection), encoding="utf-8")
    real, valid, pts = slice_grid(patch, axis, index)
    csv_path = path.with_suffix(".csv")
    with open(csv_path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["a", "b", "s", "t", "tau", "valid"] + list(BALL_COORDS))
        for i, j in np.ndindex(valid.shape):
            row = [i, j] + [_csv_num(x) for x in pts[i, j]] + [int(valid[i, j])]
            row += [_csv_num(x) if valid[i, j] else "" for x in real[i, j]]
            w.writerow(row)
    return csv_path
