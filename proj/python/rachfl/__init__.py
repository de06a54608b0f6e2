# Copyright 2026 The rachfl Authors. All Rights Reserved.
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
# ==============================================================================
"""Federated SGD over a framed slotted-ALOHA channel."""

from rachfl._core import (
    ConfigError,
    RunError,
    SparseUpdate,
    aog_broadcast,
    apply_threshold,
    expected_throughput,
    metrics_csv,
    normalize_config,
    rand_k,
    residual,
    run_experiment,
    scatter_add,
    select_fixed_random,
    simulate_frame,
    slot_capacity,
    top_k,
)

__all__ = [
    "ConfigError",
    "RunError",
    "SparseUpdate",
    "aog_broadcast",
    "apply_threshold",
    "expected_throughput",
    "metrics_csv",
    "normalize_config",
    "rand_k",
    "residual",
    "run_experiment",
    "scatter_add",
    "select_fixed_random",
    "simulate_frame",
    "slot_capacity",
    "top_k",
]
