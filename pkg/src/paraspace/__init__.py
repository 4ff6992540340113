"""Parameter-space workbench: sample regions of a simulation's input space,
run the simulation through a neutral node protocol, derive features, embed
outcomes by similarity, and label the clusters back into input-space regions.
"""

from . import errors
from .analysis import (
    AffinitySpec,
    ClusterSummary,
    EmbeddingResult,
    apply_embedding,
    build_affinity,
    combine_features,
    embed,
    normalize,
    pca,
    spectral_embed,
    summarize_cluster,
)
from .node import NodeClient, RunResult, WorkerPool, batch_execute, spawn_worker
from .protocol import ComputeNodeDescriptor
from .region import (
    All,
    And,
    Ball,
    Cursor,
    Interval,
    Not,
    Or,
    RegionSpec,
    ViewTransform,
    bounding_box,
    contains,
    from_document,
    from_rectangle,
    to_document,
    volume,
)
from .sampling import SampleRequest, refine, sample, sample_grid, sample_uniform
from .table import (
    Configuration,
    DataTable,
    DimensionGroup,
    Role,
    RowStatus,
    Variable,
    create_table,
    export_csv,
    import_csv,
)

__version__ = "0.1.0"
