"""Joint communication and radar precoder design with rate-splitting multiple access.

A multi-antenna transmitter serves K users and shapes a radar beampattern at
the same time.  The design maximises a weighted sum rate while matching a
desired beampattern under a per-antenna power constraint; it is solved by
ADMM with a WMMSE communication step and an MM radar step.
"""

from .admm import AdmmConfig, SolveReport, run_admm
from .comms import FeasibilityError, ipr, wsr
from .radar import beampattern, beampattern_mse, beampattern_rmse, ibr, lb_ibr
from .scenario import (
    AngleGrid,
    ArrayGeometry,
    ChannelSet,
    DesiredBeampattern,
    Scenario,
    build_scenario,
    paper_scenario,
    scenario_from_config,
)
from .solution import ALL_MODES, ModeConfig, MultipleAccess, PrecoderSolution, RadarSequence

__all__ = [
    "AdmmConfig",
    "SolveReport",
    "run_admm",
    "FeasibilityError",
    "ipr",
    "wsr",
    "beampattern",
    "beampattern_mse",
    "beampattern_rmse",
    "ibr",
    "lb_ibr",
    "AngleGrid",
    "ArrayGeometry",
    "ChannelSet",
    "DesiredBeampattern",
    "Scenario",
    "build_scenario",
    "paper_scenario",
    "scenario_from_config",
    "ALL_MODES",
    "ModeConfig",
    "MultipleAccess",
    "PrecoderSolution",
    "RadarSequence",
]

__version__ = "0.1.0"
