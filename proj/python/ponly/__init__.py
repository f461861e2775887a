"""Presence-only species distribution models: IPP, Maxent and logistic fits."""

import io
import json

import numpy as np

from . import _core
from ._core import (
    InfeasiblePoint,
    InvalidArgument,
    ModelInvalid,
    NonConvergence,
    RankDeficiency,
)

__version__ = _core.__version__

__all__ = [
    "fit",
    "check",
    "equivalence_sweep",
    "sweep",
    "population_lr_limit",
    "study_data",
    "read_dataset_csv",
    "mu1",
    "InfeasiblePoint",
    "InvalidArgument",
    "ModelInvalid",
    "NonConvergence",
    "RankDeficiency",
]


def _matrix(a):
    a = np.asarray(a, dtype=float)
    return a.reshape(-1, 1) if a.ndim == 1 else a


def fit(presence, background, area, model="ipp", W=None, penalty="none", lam=0.0, mix=None, weights=None):
    """Fit one model; returns the fit record as a dict."""
    return json.loads(
        _core.fit(_matrix(presence), _matrix(background), float(area), model, W, penalty, lam, mix,
                  None if weights is None else np.asarray(weights, dtype=float))
    )


def check(presence, background, area, which, penalty="none", lam=0.0, mix=None, tolerance=None, W=None,
          weights=None):
    """Run one of the checks "prop1", "prop2" or "scores" on a dataset."""
    return json.loads(
        _core.check(_matrix(presence), _matrix(background), float(area), which, penalty, lam, mix, tolerance, W,
                    None if weights is None else np.asarray(weights, dtype=float))
    )


def equivalence_sweep(datasets=50, seed=None):
    kwargs = {} if seed is None else {"seed": seed}
    return json.loads(_core.equivalence_sweep(datasets, **kwargs))


def sweep(**config):
    """Misspecification sweep; returns rows (estimator, n0, replicate, beta_hat, beta_limit)."""
    text = _core.sweep(json.dumps(config))
    rows = []
    for line in io.StringIO(text):
        if line.startswith("#") or line.startswith("estimator") or not line.strip():
            continue
        est, n0, rep, beta, limit = line.strip().split(",")
        rows.append((est, int(n0), int(rep), None if beta == "NA" else float(beta), float(limit)))
    return rows


population_lr_limit = _core.population_lr_limit
study_data = _core.study_data
read_dataset_csv = _core.read_dataset_csv
mu1 = _core.mu1
