"""Pre- and post-selected quantum ensembles and the N-shutter experiment."""

from .linalg import (
    DensityOperator,
    Operator,
    SpaceShape,
    StateVector,
    Subspace,
    change_basis,
    inner,
    normalize,
    orthogonal_complement,
    partial_trace,
    projector,
    tensor,
)
from .prepost import (
    Observable,
    PrePostEnsemble,
    abl_probabilities,
    abl_probability,
    born_probability,
    certainty_outcomes,
    postselect,
)
from .shutter import (
    ShutterScenario,
    build_scenario,
    certainty_orthogonality_report,
    default_scenario,
    exact_probabilities,
    interact,
    joint_initial,
    postselection_prob_given_reflection,
    postselection_subspace,
    reflected_reduced_density,
    transmitted_in_postselection_basis,
    transmitted_state,
)

__version__ = "0.1.0"

__all__ = [
    "DensityOperator",
    "Operator",
    "SpaceShape",
    "StateVector",
    "Subspace",
    "change_basis",
    "inner",
    "normalize",
    "orthogonal_complement",
    "partial_trace",
    "projector",
    "tensor",
    "Observable",
    "PrePostEnsemble",
    "abl_probabilities",
    "abl_probability",
    "born_probability",
    "certainty_outcomes",
    "postselect",
    "ShutterScenario",
    "build_scenario",
    "certainty_orthogonality_report",
    "default_scenario",
    "exact_probabilities",
    "interact",
    "joint_initial",
    "postselection_prob_given_reflection",
    "postselection_subspace",
    "reflected_reduced_density",
    "transmitted_in_postselection_basis",
    "transmitted_state",
]
