"""fairgrid: a self-contained fairness benchmarking workbench.

Experiments are assembled from a constraint-checked feature model of the
benchmarking workflow, compiled to portable manifests, and executed by a
deterministic grid-search engine that cross-validates every combination of
scaler, learner, and bias-mitigation method, computes fairness and
effectiveness metrics, and selects the best combination under a chosen
trade-off strategy. The same engine backs the CLI and the REST service.
"""

__version__ = "0.1.0"

from . import bench, data, extfm, learners, manifest, metrics, mitigation  # noqa: E402,F401
