"""Hyper-parameter search engine for efficient face VSR networks."""

from .space import (
    Configuration,
    ParamDomain,
    SearchSpace,
    SpaceError,
    build_space,
    decode,
    default_space,
    encode,
    enumerate_space,
    load_space,
    space_size,
)
from .samplers import (
    Observation,
    SamplerSpec,
    SamplerState,
    SmacParams,
    TpeParams,
    ei,
    quantile_split,
    random_next,
    smac_next,
    tpe_next,
)
from .cost import (
    ArchitectureGraph,
    CostReport,
    GraphError,
    LayerSpec,
    conv2d_cost,
    graph_cost,
    hofvsr_cost,
    hofvsr_graph,
)
from .metrics import Raster, mse, psnr, read_pgm, ssim, write_pgm
from .orchestrator import BudgetSpec, SearchResult, resume_search, run_search
from .synthetic import SyntheticEvaluator, synthetic_evaluate

__version__ = "0.1.0"

__all__ = [
    "ArchitectureGraph",
    "BudgetSpec",
    "Configuration",
    "CostReport",
    "GraphError",
    "LayerSpec",
    "Observation",
    "ParamDomain",
    "Raster",
    "SamplerSpec",
    "SamplerState",
    "SearchResult",
    "SearchSpace",
    "SmacParams",
    "SpaceError",
    "SyntheticEvaluator",
    "TpeParams",
    "build_space",
    "conv2d_cost",
    "decode",
    "default_space",
    "ei",
    "encode",
    "enumerate_space",
    "graph_cost",
    "hofvsr_cost",
    "hofvsr_graph",
    "load_space",
    "mse",
    "psnr",
    "quantile_split",
    "random_next",
    "read_pgm",
    "resume_search",
    "run_search",
    "smac_next",
    "space_size",
    "ssim",
    "synthetic_evaluate",
    "tpe_next",
    "write_pgm",
]
