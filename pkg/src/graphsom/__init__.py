"""Perfect communities, rich-clubs and batch kernel SOM maps for weighted graphs."""

from .errors import AnalysisError, GraphSomError, InputFormatError
from .graph import (
    ContractRecord,
    GraphStats,
    WeightedGraph,
    betweenness,
    build_from_contracts,
    cumulative_degree_distribution,
    graph_stats,
    induced_subgraph,
    induced_unweighted,
    largest_connected_component,
    load_contracts,
    load_edge_list,
)
from .spectral import (
    EigenDecomposition,
    LaplacianMatrix,
    SpectralEmbedding,
    eig_sym,
    evaluate_cut,
    kmeans,
    laplacian,
    spectral_clustering,
    spectral_embedding,
)
from .communities import (
    CentralSelection,
    PerfectCommunity,
    RichClub,
    SummaryGraph,
    central_vertices,
    find_perfect_communities,
    rich_club,
    summary_graph,
    verify_community_spectral,
)
from .kernel import (
    DiffusionKernel,
    diffusion_kernel,
    explicit_feature_map,
    feature_inner,
    kernel_distance_sq,
    kernel_pca,
    load_kernel,
    prototype_distance_sq,
    save_kernel,
)
from .som import (
    GridTopology,
    QualityReport,
    SomConfig,
    SomModel,
    assign,
    assign_all,
    hierarchical_som,
    init_kernel_pca,
    init_random,
    kaski_lagus,
    q_modularity,
    quality_report,
    quantization_error,
    represent,
    train,
    u_matrix,
)

__version__ = "0.1.0"
