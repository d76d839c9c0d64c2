"""Multi-scale directed graph learning.

Sparse scale construction, the model zoo and training live in the compiled
extension; this layer only turns its JSON results into dicts.
"""

import json

try:
    from . import _scalenet as _ext
except ImportError:  # in-tree build: the extension sits next to the package
    import _scalenet as _ext

SparseMatrix = _ext.SparseMatrix
Graph = _ext.Graph
Split = _ext.Split
DataError = _ext.DataError

spgemm = _ext.spgemm
pattern_union = _ext.pattern_union
pattern_intersection = _ext.pattern_intersection
pattern_difference = _ext.pattern_difference
apply_selfloop_mode = _ext.apply_selfloop_mode
sym_normalize = _ext.sym_normalize
degrees = _ext.degrees
build_scaled_adjacency = _ext.build_scaled_adjacency
proximity_matrix = _ext.proximity_matrix
remove_shared_edges = _ext.remove_shared_edges
load_dataset = _ext.load_dataset
generate_dsbm = _ext.generate_dsbm
make_random_splits = _ext.make_random_splits
run_cli = _ext.run_cli

__version__ = _ext.__version__


def default_config():
    return json.loads(_ext._default_config())


def default_hyper():
    return json.loads(_ext._default_hyper())


def stats(graph, split=None):
    return json.loads(_ext._stats(graph, split if split is not None else Split()))


def train(graph, split, config=None, hyper=None, seed=0):
    """Trains one model with early stopping; returns the result dict with history."""
    return json.loads(_ext._train(graph, split, json.dumps(config or {}), json.dumps(hyper or {}), seed))


def cross_validate(graph, splits, config=None, hyper=None, seed=0, threads=1):
    return json.loads(
        _ext._cross_validate(graph, list(splits), json.dumps(config or {}), json.dumps(hyper or {}), seed, threads)
    )


def wilcoxon(xs, ys):
    """Two-sided Wilcoxon signed-rank test on paired scores."""
    return json.loads(_ext._wilcoxon(list(xs), list(ys)))
