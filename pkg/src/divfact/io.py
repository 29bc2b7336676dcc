"""CSV matrix files and JSON result documents.

Matrix files hold one row per line, comma separated, with 17 significant
digits so that values round-trip exactly. An optional first line
``# dim=<n>`` declares the dimension.
"""

import json
import logging
import re

import numpy as np

from .errors import DimensionError
from .matops import max_abs
from .model import FactorModel

log = logging.getLogger(__name__)

SYM_WARN_RTOL = 1e-12
SYM_REJECT_RTOL = 1e-6
_HEADER = re.compile(r"#\s*dim\s*=\s*(\d+)\s*$")


class InputError(ValueError):
    """A user-supplied file cannot be used."""


def format_float(x):
    return f"{float(x):.17g}"


def write_matrix(path, M):
    M = np.atleast_2d(np.asarray(M, dtype=float))
    # the header only describes square matrices; raw data tables go without one
    lines = [f"# dim={M.shape[0]}"] if M.shape[0] == M.shape[1] else []
    lines += [",".join(format_float(x) for x in row) for row in M]
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def read_matrix(path, square=True):
    """Parse a CSV matrix. ``square=False`` accepts any m x n table (raw data)."""
    declared = None
    rows = []
    try:
        with open(path) as fh:
            text = fh.read().splitlines()
    except OSError as exc:
        raise InputError(f"{path}: cannot read ({exc.strerror})") from exc
    for lineno, line in enumerate(text, 1):
        stripped = line.strip()
        if not stripped:
            continue
        if stripped.startswith("#"):
            m = _HEADER.match(stripped)
            if m and not rows and declared is None:
                declared = int(m.group(1))
            continue
        try:
            rows.append([float(tok) for tok in stripped.split(",")])
        except ValueError as exc:
            raise InputError(f"{path}:{lineno}: malformed number ({exc})") from exc
    if not rows:
        raise InputError(f"{path}: no matrix rows")
    width = len(rows[0])
    for i, row in enumerate(rows):
        if len(row) != width:
            raise InputError(f"{path}: row {i} has {len(row)} entries, expected {width}")
    M = np.array(rows, dtype=float)
    if not np.all(np.isfinite(M)):
        raise InputError(f"{path}: non-finite entries")
    if square:
        if M.shape[0] != M.shape[1]:
            raise InputError(f"{path}: matrix is {M.shape[0]}x{M.shape[1]}, expected square")
        if declared is not None and declared != M.shape[0]:
            raise InputError(f"{path}: header declares dim={declared} but matrix is {M.shape[0]}x{M.shape[1]}")
    elif declared is not None and declared != M.shape[1]:
        raise InputError(f"{path}: header declares dim={declared} but data has {M.shape[1]} columns")
    return M


def read_symmetric(path):
    """Read a square matrix and symmetrize it, rejecting gross asymmetry."""
    M = read_matrix(path)
    asym = max_abs(M - M.T)
    scale = max(max_abs(M), np.finfo(float).tiny)
    if asym > SYM_REJECT_RTOL * scale:
        raise InputError(f"{path}: matrix is not symmetric (max |M - M^T| = {asym:.3g})")
    if asym > SYM_WARN_RTOL * scale:
        log.warning("%s: symmetrizing matrix with asymmetry %.3g", path, asym)
    return (M + M.T) / 2.0


def model_to_dict(model):
    return {"H": model.H.tolist(), "D": model.D.tolist()}


def model_from_dict(doc, source="model"):
    try:
        return FactorModel(np.array(doc["H"], dtype=float), np.array(doc["D"], dtype=float))
    except KeyError as exc:
        raise InputError(f"{source}: missing field {exc.args[0]!r}") from exc
    except (ValueError, DimensionError) as exc:
        raise InputError(f"{source}: invalid model ({exc})") from exc


def read_model(path):
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise InputError(f"{path}: cannot read ({exc.strerror})") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: malformed JSON ({exc})") from exc
    return model_from_dict(doc, path)


def dump_json(doc, path):
    text = json.dumps(doc, indent=2, sort_keys=False, allow_nan=False) + "\n"
    if path is None or path == "-":
        return text
    with open(path, "w", newline="\n") as fh:
        fh.write(text)
    return text
