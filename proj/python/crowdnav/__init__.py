# Copyright (c) 2026 The crowdnav Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Crowd navigation workbench.

Thin re-export of the compiled ``_crowdnav`` extension: heuristic and learned
waypoint risk, CBF-constrained MPC, the Multi-RRT planner, proxemic metrics
and the collect/train/eval/replay pipeline.
"""

from ._crowdnav import (
    ConfigError,
    FormatError,
    NoPath,
    cbf_residual,
    collect_dataset,
    current_guidance,
    cvar_gaussian,
    epistemic_jrd,
    epistemic_jrd_raw,
    evaluate,
    plan,
    psi,
    replay,
    run_episode,
    solve_mpc,
    train,
    var_gaussian,
    zone_of_distance,
)

__all__ = [
    "ConfigError",
    "FormatError",
    "NoPath",
    "cbf_residual",
    "collect_dataset",
    "current_guidance",
    "cvar_gaussian",
    "epistemic_jrd",
    "epistemic_jrd_raw",
    "evaluate",
    "plan",
    "psi",
    "replay",
    "run_episode",
    "solve_mpc",
    "train",
    "var_gaussian",
    "zone_of_distance",
]
