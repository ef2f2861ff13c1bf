"""Integrator for event-selected hybrid systems.

Conventional Dormand-Prince integration away from guards alternates with a
first-order projection onto guards once the state comes within ``epsilon``
(in event-function units) of one.
"""

__version__ = "0.1.0"

from .core import (
    HybridSystem,
    IntegratorConfig,
    StepKind,
    StepRecord,
    Trajectory,
    entered_band,
    in_band,
    numeric_jacobian,
)
from .errors import *  # noqa: F401,F403
from .loop import ProjectionOutcome, integrate, project_step
from .models import (
    HopperParams,
    PlateParams,
    hopper_affine,
    hopper_system,
    order_test_affine,
    order_test_system,
    plate_system,
    rescale_events,
)
from .modelfile import dump_model, load_model, parse_model, save_model
from .oracles import (
    AffinePiece,
    AffinePiecewiseSystem,
    PiecewiseAffineFlow,
    affine_flow,
    exact_piecewise_trajectory,
    expm,
    fit_loglog_slope,
    impact_point,
    rms_error,
)
from .smooth import SmoothStepResult, smooth_integrate
