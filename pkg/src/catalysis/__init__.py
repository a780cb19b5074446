"""Interaction-driven collaboration models for scientific conferences.

The nonlinear catalysis model treats a pair's collaboration probability as a
particle in a double-well potential tilted by their momentary interaction;
this package fits it and its simpler alternatives to conference records,
tests interaction effects, and builds counterfactual group schedules.
"""

from importlib import metadata

from .conference import Conference, Participant, ProposalTeam, Session, SessionKind, load_conference, save_conference
from .dynamics import DynamicsModel, LinearParams
from .fitting import FitResult, fit, negative_log_likelihood
from .model_selection import cumulative_collaboration_curve, select
from .models import ModelKind, get_model
from .potential import CatalysisParams

try:
    __version__ = metadata.version("artifact")
except metadata.PackageNotFoundError:  # running from a source tree
    __version__ = "0.0.0"

__all__ = [
    "CatalysisParams", "Conference", "DynamicsModel", "FitResult", "LinearParams", "ModelKind",
    "Participant", "ProposalTeam", "Session", "SessionKind", "cumulative_collaboration_curve",
    "fit", "get_model", "load_conference", "negative_log_likelihood", "save_conference", "select",
]
