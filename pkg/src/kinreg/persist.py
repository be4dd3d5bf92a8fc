"""Model files: a single ``.npz`` holding the arrays plus a JSON metadata blob.

Float arrays are stored in binary, so a save/load round trip is exact.
"""
import json

import numpy as np

from .interpolator import CorrectionLevel, FittedModel
from .moment import SolverConfig
from .rbf import RbfModel

FORMAT = "kinreg-model"
VERSION = 1


class ModelFileError(ValueError):
    pass


def save_model(path, model, meta=None):
    meta = dict(meta or {})
    if isinstance(model, FittedModel):
        header = {
            "kind": "kinetic",
            "theta": model.theta,
            "level": int(model.level),
            "solver": {"tol_resid": model.solver_cfg.tol_resid,
                       "max_iter": model.solver_cfg.max_iter,
                       "ridge": model.solver_cfg.ridge},
        }
        arrays = {"points": model.train_points, "values": model.train_values, "psi": model.psi}
    elif isinstance(model, RbfModel):
        header = {"kind": "rbf", "theta": model.theta, "ridge": model.ridge}
        arrays = {"points": model.centers, "weights": model.weights}
    else:
        raise TypeError(f"cannot save {type(model).__name__}")
    header.update(format=FORMAT, version=VERSION, meta=meta)
    with open(path, "wb") as fh:
        np.savez(fh, __header__=np.array(json.dumps(header)), **arrays)


def load_model(path):
    """Return ``(model, meta)``."""
    try:
        with np.load(path, allow_pickle=False) as z:
            header = json.loads(str(z["__header__"]))
            arrays = {k: z[k] for k in z.files if k != "__header__"}
    except (OSError, KeyError, ValueError) as exc:
        raise ModelFileError(f"{path}: not a model file ({exc})") from None
    if header.get("format") != FORMAT:
        raise ModelFileError(f"{path}: unknown format {header.get('format')!r}")
    if header.get("version", 0) > VERSION:
        raise ModelFileError(f"{path}: model version {header['version']} is newer than {VERSION}")
    if header["kind"] == "kinetic":
        pts = arrays["points"]
        model = FittedModel(
            train_points=pts,
            train_values=arrays["values"],
            psi=arrays["psi"],
            theta=float(header["theta"]),
            level=CorrectionLevel(header["level"]),
            solver_cfg=SolverConfig(**header["solver"]),
        )
    elif header["kind"] == "rbf":
        model = RbfModel(arrays["points"], arrays["weights"], float(header["theta"]), float(header["ridge"]))
    else:
        raise ModelFileError(f"{path}: unknown model kind {header['kind']!r}")
    return model, header.get("meta", {})
