"""Sparse additive regression with B-spline component functions, a
learned link network, and kappa-stability variable selection."""

from .basis import SplineBasis, build_basis, design_matrix, design_row
from .data import (
    Dataset,
    SynthSpec,
    augment_irrelevant,
    gen_eval_grid,
    gen_example_a,
    gen_example_b,
    generate,
    load_csv,
    save_csv,
    split,
)
from .errors import (
    DegenerateInputError,
    DegenerateStateError,
    GsamulError,
    InvalidInputError,
    NumericalDivergenceError,
)
from .link_net import IdentityLink, LinkNetwork, init_network
from .metrics import EvalReport, ase_component, ase_link, rsse
from .model import (
    AdditiveCoefficients,
    GsamulModel,
    LossSpec,
    least_squares_loss,
    load_model,
    model_from_json,
    model_to_json,
    objective_inner,
    objective_outer,
    penalty,
    project_identifiability,
    save_model,
)
from .optimizer import (
    HyperParams,
    TrainConfig,
    TrainTrace,
    alpha_step,
    inner_step,
    lr_schedule,
    min_grad_norm,
    outer_step,
    train,
)
from .selection import (
    SelectionReport,
    cohen_kappa,
    group_norms,
    select_variables,
    stability_threshold,
)

__version__ = "0.1.0"
