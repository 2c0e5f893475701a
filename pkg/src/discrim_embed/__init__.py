"""Supervised discriminant embeddings: LDA, RSLDA, ICS_DLSR and the SDA_G
gradient refinement, with an evaluation harness for repeated-split
nearest-neighbour benchmarks."""

__version__ = "0.1.0"

from .numcore import (  # noqa: E402
    LabeledDataset,
    PcaBasis,
    RowWeightDiag,
    ScatterSet,
    compute_scatter,
    l21_norm,
    pca_preprocess,
    procrustes_orthogonal,
    row_weight_matrix,
    soft_threshold,
)
from .baselines import (  # noqa: E402
    IcsDlsrModel,
    LdaModel,
    RsldaModel,
    build_label_matrix,
    fit_ics_dlsr,
    fit_lda,
    fit_rslda,
)
from .sda_g import (  # noqa: E402
    DivergenceError,
    SdaGModel,
    SolverConfig,
    fit_sda_g,
    gradient_q,
    init_hybrid,
    init_rslda,
    objective,
    transform,
    update_d,
    update_p,
)
from .harness import (  # noqa: E402
    EvalReport,
    MethodSpec,
    SplitPlan,
    default_lambda1_grid,
    default_lambda2_grid,
    gen_tetra,
    make_report,
    nn_classify,
    run_protocol,
    stratified_split,
    sweep_dimension,
    sweep_params,
)
