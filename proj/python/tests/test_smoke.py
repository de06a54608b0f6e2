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
# =============================================================================
import csv
import io
import json
import math

import pytest

import rachfl


def test_channel():
    assert rachfl.slot_capacity(10, 20.0) == 2
    assert rachfl.slot_capacity(3, 1.38e8, 0.3) == 13800000
    assert rachfl.expected_throughput(10, 0.1) == pytest.approx(0.387420489)

    frame = rachfl.simulate_frame([0, 1, 2], 1.0, 4)
    assert [kind for kind, _ in frame["slots"]] == ["collision"] * 4
    assert frame["received"] == []

    solo = rachfl.simulate_frame([5], 1.0, 2)
    assert solo["received"] == [5]


def test_sparsify():
    s = rachfl.top_k([3.0, -5.0, 1.0, 0.0], 2)
    assert s.indices == [0, 1]
    assert s.values == [3.0, -5.0]
    assert s.dense() == [3.0, -5.0, 0.0, 0.0]
    assert rachfl.residual([3.0, -5.0, 1.0, 0.0], s) == [0.0, 0.0, 1.0, 0.0]
    assert rachfl.scatter_add([1.0, 1.0, 1.0, 1.0], s, -1.0) == [-2.0, 6.0, 1.0, 1.0]

    r = rachfl.rand_k(list(range(10)), 3, seed=4)
    assert len(r) == 3
    assert all(r.values[j] == r.indices[j] for j in range(3))
    assert rachfl.rand_k(list(range(10)), 3, seed=4) == r

    with pytest.raises(ValueError):
        rachfl.SparseUpdate(3, [2, 1], [1.0, 1.0])


def test_policies():
    bp = rachfl.aog_broadcast(3.0, [10, 9, 8, 7, 6, 5, 4, 3, 2, 1], slope=1.0)
    assert bp == {"threshold": 7.0, "tx_prob": 0.25, "target_active": 4}
    assert rachfl.apply_threshold(7.0, 7.0)

    active, rho = rachfl.select_fixed_random(10, 5, seed=3)
    assert len(active) == 5 and active == sorted(set(active))
    assert rho == 0.2


def test_config_errors():
    with pytest.raises(rachfl.ConfigError, match="polcy: unknown key"):
        rachfl.normalize_config('{"polcy": {}}')
    with pytest.raises(ValueError):
        rachfl.normalize_config('{"slots": 30}')
    full = json.loads(rachfl.normalize_config("{}"))
    assert full["users"] == 10 and full["policy"]["kind"] == "aog"


def test_run_and_metrics():
    cfg = json.dumps({"frames": 5, "task": {"points": 200, "test_points": 50}})
    run = rachfl.run_experiment(cfg, 7)
    assert [m["frame"] for m in run["metrics"]] == [1, 2, 3, 4, 5]
    assert run["policy"] == "aog"
    assert len(run["final_model"]) == 20
    assert all(math.isfinite(m["loss"]) for m in run["metrics"])

    text = rachfl.metrics_csv(cfg, 7)
    assert text == rachfl.metrics_csv(cfg, 7)
    rows = list(csv.DictReader(io.StringIO(text)))
    assert len(rows) == 5
    assert rows[0]["policy"] == "aog" and rows[0]["accuracy"] == ""


def test_always_collide_keeps_model():
    cfg = json.dumps({
        "users": 2, "frames": 10, "slots": 1, "budget": 20,
        "policy": {"kind": "fixed_random", "active": 2, "tx_prob": 1.0},
        "task": {"points": 200, "batch": 20},
    })
    run = rachfl.run_experiment(cfg, 1)
    assert run["final_model"] == [0.0] * 20
    assert all(m["received_users"] == 0 for m in run["metrics"])
    assert all(any(x != 0.0 for x in mem) for mem in run["memories"])
