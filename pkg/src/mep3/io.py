"""Problem files (``.mep``): an ``.npz`` archive with a JSON header.

See ``docs/FORMAT.md`` for the field list.
"""
import json

import numpy as np

from .core import ThreeParamProblem
from .discretize import BvpProblem

FORMAT_NAME = "mep3-problem"
FORMAT_VERSION = 1


class FormatError(ValueError):
    pass


def _jsonable(d):
    out = {}
    for k, v in (d or {}).items():
        if isinstance(v, (np.floating, np.integer)):
            v = v.item()
        out[k] = v
    return out


def save_problem(path, bvp, oracle=None):
    """Write a :class:`BvpProblem` (or bare problem) to ``path``.

    ``oracle`` is an optional ``(N, 3)`` array of known eigenvalues.
    """
    if isinstance(bvp, ThreeParamProblem):
        bvp = BvpProblem(bvp, (), (), "custom")
    prob = bvp.problem
    header = {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "sizes": list(prob.sizes),
        "real": bool(prob.is_real),
        "app": bvp.app,
        "params": _jsonable(bvp.params),
        "constants": _jsonable(bvp.constants),
        "has_oracle": oracle is not None,
    }
    arrays = {"header": np.frombuffer(json.dumps(header, sort_keys=True).encode(), dtype=np.uint8)}
    for name in "ABCD":
        for i, m in enumerate(getattr(prob, name)):
            arrays[f"{name}{i + 1}"] = np.asfortranarray(m, dtype=np.complex128)
    for i, k in enumerate(bvp.kept or ()):
        arrays[f"kept{i + 1}"] = np.asarray(k, dtype=np.int64)
    if oracle is not None:
        arrays["oracle"] = np.asarray(oracle, dtype=np.complex128)
    with open(path, "wb") as fh:
        np.savez(fh, **arrays)


def load_problem(path):
    """Read a problem file; returns ``(bvp, oracle_or_None)``."""
    try:
        data = np.load(path, allow_pickle=False)
    except (OSError, ValueError) as exc:
        raise FormatError(f"cannot read problem file {path}: {exc}") from exc
    with data:
        if "header" not in data:
            raise FormatError("missing header")
        header = json.loads(data["header"].tobytes().decode())
        if header.get("format") != FORMAT_NAME:
            raise FormatError("not a mep3 problem file")
        if header.get("version") != FORMAT_VERSION:
            raise FormatError(f"unsupported format version {header.get('version')}")
        mats = {}
        for name in "ABCD":
            ms = []
            for i in range(3):
                m = np.ascontiguousarray(data[f"{name}{i + 1}"])
                ms.append(m.real.copy() if header["real"] else m)
            mats[name] = tuple(ms)
        kept = tuple(data[f"kept{i + 1}"] for i in range(3)) if "kept1" in data else ()
        oracle = data["oracle"] if "oracle" in data else None
    prob = ThreeParamProblem(**mats)
    if list(prob.sizes) != header["sizes"]:
        raise FormatError("matrix sizes disagree with the header")
    bvp = BvpProblem(prob, (), kept, header["app"], header["params"], header["constants"])
    return bvp, oracle
