"""Scikit-learn style estimator wrapping the clustering pipeline.

``DynamicGraphClustering`` follows the fit/predict idiom: ``fit`` takes a
DynamicGraph (or a dataset directory, or a list of sparse adjacency matrices)
and exposes per-snapshot labels through ``labels_``. Parameters mirror
RunConfig so the estimator composes with ``get_params``/``set_params``,
``clone`` and the usual sklearn tooling.
"""

import dataclasses

import numpy as np
import scipy.sparse as sp
from sklearn.base import BaseEstimator

from .graph import DynamicGraph, Snapshot, load_dynamic_graph
from .pipeline import RunConfig, run


def as_dynamic_graph(X):
    """Accept a DynamicGraph, a dataset directory, or a list of adjacencies."""
    if isinstance(X, DynamicGraph):
        return X
    if isinstance(X, (str, bytes)) or hasattr(X, "__fspath__"):
        return load_dynamic_graph(X)
    if isinstance(X, (list, tuple)):
        snaps = []
        for t, item in enumerate(X):
            if isinstance(item, Snapshot):
                snaps.append(item)
            else:
                snaps.append(Snapshot(sp.csr_matrix(item), t_index=t + 1))
        return DynamicGraph(snaps)
    raise TypeError(f"cannot interpret {type(X).__name__} as a dynamic graph")


class DynamicGraphClustering(BaseEstimator):
    """Dynamic graph clustering by separated nonnegative matrix factorization.

    Parameters mirror :class:`dynclust.pipeline.RunConfig`. After ``fit``:

    labels_ : list of int arrays, one partition per snapshot
    n_clusters_ : list of int, distinct labels per snapshot
    result_ : full RunResult with timings and objective traces
    """

    def __init__(
        self,
        s=None,
        r=1000,
        lam=0.2,
        beta=20.0,
        mu=0.16,
        landmark_fraction=None,
        landmark_count=None,
        alpha=0.5,
        k_max=16,
        tol=1e-6,
        max_iter=150,
        seed=0,
        no_tsmf=False,
        no_bcr=False,
        no_seu=False,
        inter_qj=True,
        rounds=None,
        inner_steps=1,
        jobs=1,
        keep_factors=False,
    ):
        self.s = s
        self.r = r
        self.lam = lam
        self.beta = beta
        self.mu = mu
        self.landmark_fraction = landmark_fraction
        self.landmark_count = landmark_count
        self.alpha = alpha
        self.k_max = k_max
        self.tol = tol
        self.max_iter = max_iter
        self.seed = seed
        self.no_tsmf = no_tsmf
        self.no_bcr = no_bcr
        self.no_seu = no_seu
        self.inter_qj = inter_qj
        self.rounds = rounds
        self.inner_steps = inner_steps
        self.jobs = jobs
        self.keep_factors = keep_factors

    def _config(self):
        names = [f.name for f in dataclasses.fields(RunConfig)]
        return RunConfig(**{name: getattr(self, name) for name in names})

    def fit(self, X, y=None):
        graph = as_dynamic_graph(X)
        result = run(self._config(), graph)
        self.result_ = result
        self.labels_ = result.partitions
        self.n_clusters_ = result.n_clusters
        self.n_features_in_ = graph.n
        return self

    def fit_predict(self, X, y=None):
        return self.fit(X).labels_

    def score(self, X, y=None):
        """Mean NMI against ground truth when the graph carries labels."""
        graph = as_dynamic_graph(X)
        if graph.labels is None:
            raise ValueError("score requires ground-truth labels on the graph")
        from .metrics import nmi

        self.fit(graph)
        values = [
            nmi(pred, truth) for pred, truth in zip(self.labels_, graph.labels)
        ]
        return float(np.mean(values))
