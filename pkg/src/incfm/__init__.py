"""Incremental factorization machines for streaming item recommendation."""

from .fm import FmModel, SparseVector, fm_init, fm_predict, fm_predict_naive
from .mf import MfModel, imf_update
from .online import UpdatePolicy, batch_train, grow_model, incremental_step
from .prequential import EvalState, SplitSpec, run_prequential
from .recommender import Catalog, score_all, top_n

__version__ = "0.1.0"

__all__ = [
    "Catalog",
    "EvalState",
    "FmModel",
    "MfModel",
    "SparseVector",
    "SplitSpec",
    "UpdatePolicy",
    "batch_train",
    "fm_init",
    "fm_predict",
    "fm_predict_naive",
    "grow_model",
    "imf_update",
    "incremental_step",
    "run_prequential",
    "score_all",
    "top_n",
]
