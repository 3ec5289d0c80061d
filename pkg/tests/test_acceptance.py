"""Acceptance suite: one test per criterion, each printing a pass/fail line.

Run with `pytest tests/test_acceptance.py -s` to see the per-criterion lines.
"""

from __future__ import annotations

import json
import math
import random
import statistics
import time
from pathlib import Path

import numpy as np
import pytest

from hofvsr.cost import conv2d_cost, graph_cost, hofvsr_cost, LayerSpec
from hofvsr.metrics import Raster, psnr, ssim
from hofvsr.orchestrator import BudgetSpec, resume_search, run_search
from hofvsr.reporting import pareto_front
from hofvsr.samplers import SamplerSpec
from hofvsr.space import default_space, enumerate_space, space_size
from hofvsr.synthetic import SyntheticEvaluator, true_optimum
from hofvsr.trial_log import ListSink, TrialLogWriter, read_log

from test_cost import oracle_graph, random_graph
from test_reporting import brute_force_front, make_point

REPO_ROOT = Path(__file__).parent.parent
ADAPTER = REPO_ROOT / "adapter" / "dist" / "main.js"

# fixed benchmark objective for the sampler comparison (see the search seeds
# 0..49 below); every quantity derived from it is deterministic
BENCHMARK_PROFILE_SEED = 36
BENCHMARK_SEARCH_SEEDS = range(50)

BIG_WALL = 10**9


def report(name: str, detail: str, t0: float) -> None:
    print(f"\nACCEPTANCE PASS  {name}: {detail}  [{time.monotonic() - t0:.2f}s]")


@pytest.fixture(scope="module")
def space():
    return default_space()


def test_space_cardinality(space):
    t0 = time.monotonic()
    assert space_size(space) == 800
    assert time.monotonic() - t0 < 1.0
    report("space-cardinality", "shipped space has exactly 800 configurations", t0)


def test_budget_reproduction(space):
    t0 = time.monotonic()
    budget = BudgetSpec(max_trials=40, epochs_per_trial=20, wall_clock_s=32 * 3600)

    exact = run_search(
        space, SamplerSpec("random"),
        SyntheticEvaluator(space, profile_seed=1, epoch_duration_s=240.0),
        budget, seed=0, sink=ListSink(),
    )
    assert len(exact.trials) == 24

    jitter_counts = []
    for seed in range(10):
        res = run_search(
            space, SamplerSpec("random"),
            SyntheticEvaluator(space, profile_seed=seed, epoch_duration_s=240.0,
                               duration_jitter=0.1),
            budget, seed=seed, sink=ListSink(),
        )
        jitter_counts.append(len(res.trials))
    assert all(22 <= c <= 25 for c in jitter_counts)
    assert time.monotonic() - t0 < 10.0 * 11
    report(
        "table2-budget",
        f"4 min epochs give exactly 24 trials; jittered counts {sorted(set(jitter_counts))} in [22, 25]",
        t0,
    )


def test_sampler_benchmark(space):
    t0 = time.monotonic()
    budget = BudgetSpec(max_trials=40, epochs_per_trial=20, wall_clock_s=BIG_WALL)
    _, plateau = true_optimum(space, BENCHMARK_PROFILE_SEED)

    medians = {}
    for name in ("random", "tpe", "smac"):
        bests = []
        for seed in BENCHMARK_SEARCH_SEEDS:
            evaluator = SyntheticEvaluator(space, profile_seed=BENCHMARK_PROFILE_SEED)
            res = run_search(space, SamplerSpec(name), evaluator, budget, seed,
                             ListSink())
            bests.append(res.best_objective)
        medians[name] = statistics.median(bests)

    assert medians["tpe"] <= medians["random"]
    assert medians["smac"] <= medians["random"]
    assert medians["tpe"] <= 1.05 * plateau
    elapsed = time.monotonic() - t0
    assert elapsed < 120.0
    report(
        "sampler-benchmark",
        f"medians random={medians['random']:.5f} tpe={medians['tpe']:.5f} "
        f"smac={medians['smac']:.5f}; tpe/plateau={medians['tpe'] / plateau:.4f} <= 1.05",
        t0,
    )


def test_cost_oracle_equivalence():
    t0 = time.monotonic()
    layer = LayerSpec(kind="conv2d", in_channels=1, out_channels=64,
                      kernel_h=3, kernel_w=3)
    params, flops, _ = conv2d_cost(layer, (36, 36, 1))
    assert (params, flops) == (640, 1_575_936)

    rng = random.Random(777)
    for _ in range(20):
        graph = random_graph(rng)
        rep = graph_cost(graph)
        oracle_params, oracle_flops = oracle_graph(graph)
        assert rep.total_params == oracle_params
        assert rep.total_flops == oracle_flops
    assert time.monotonic() - t0 < 1.0
    report("cost-oracle", "20 random graphs match the brute-force summation exactly", t0)


def test_cost_monotonicity(space):
    t0 = time.monotonic()
    costs = {}
    for config in enumerate_space(space):
        c = config.as_dict()
        rep = hofvsr_cost(c["res_channels"], c["n_res"], c["up_channels"])
        costs[(c["res_channels"], c["n_res"], c["up_channels"])] = (
            rep.total_params, rep.total_flops,
        )
    res_vals = space.domain("res_channels").values
    n_vals = space.domain("n_res").values
    up_vals = space.domain("up_channels").values
    for r in res_vals:
        for n in n_vals:
            for u0, u1 in zip(up_vals, up_vals[1:]):
                assert costs[(r, n, u0)] <= costs[(r, n, u1)]
    for r in res_vals:
        for u in up_vals:
            for n0, n1 in zip(n_vals, n_vals[1:]):
                assert costs[(r, n0, u)] <= costs[(r, n1, u)]
    for n in n_vals:
        for u in up_vals:
            for r0, r1 in zip(res_vals, res_vals[1:]):
                assert costs[(r0, n, u)] <= costs[(r1, n, u)]
    elapsed = time.monotonic() - t0
    assert elapsed < 5.0
    report("cost-monotonicity", "params/flops non-decreasing in each dimension over all 800 configs", t0)


def test_paper_cost_target(capsys):
    t0 = time.monotonic()
    rep = hofvsr_cost(64, 5, 64, scale=4, in_shape=(36, 36, 1, 3))
    params_m = rep.total_params / 1e6
    gflops = rep.total_flops / 1e9
    assert 0.375 <= params_m <= 0.625
    assert 1.5 <= gflops <= 2.5
    with capsys.disabled():
        print("\nassumption ledger for the generated candidate family:")
        for key, value in rep.assumptions.items():
            print(f"  {key}: {value}")
    report(
        "paper-cost-target",
        f"{rep.label}: {params_m:.3f} M params in [0.375, 0.625], "
        f"{gflops:.3f} GFLOPs in [1.5, 2.5]",
        t0,
    )


def test_metrics():
    t0 = time.monotonic()
    base = Raster.from_array(np.full((16, 16), 100.0))
    plus_one = Raster.from_array(np.full((16, 16), 101.0))
    assert psnr(base, plus_one) == pytest.approx(48.1308, abs=1e-3)

    assert ssim(
        Raster.from_array(np.full((8, 8), 100.0)),
        Raster.from_array(np.full((8, 8), 110.0)),
    ) == pytest.approx(0.99548, abs=1e-4)

    rng = np.random.default_rng(12345)
    for _ in range(100):
        h = int(rng.integers(8, 20))
        w = int(rng.integers(8, 20))
        a = Raster.from_array(rng.uniform(0, 255, (h, w)))
        b = Raster.from_array(rng.uniform(0, 255, (h, w)))
        assert ssim(a, a) == 1.0
        assert ssim(a, b) == ssim(b, a)
    assert time.monotonic() - t0 < 1.0
    report("metrics", "PSNR/SSIM pinned values hold; identity and symmetry on 100 rasters", t0)


def test_pareto_correctness():
    t0 = time.monotonic()
    for seed in range(100):
        rng = random.Random(seed)
        points = [
            make_point(rng.uniform(0, 1), rng.randrange(1, 30) * 1000,
                       rng.randrange(1, 30) * 500)
            for _ in range(200)
        ]
        assert pareto_front(points) == brute_force_front(points)
    elapsed = time.monotonic() - t0
    assert elapsed < 5.0
    report("pareto", "front equals the O(n^2) dominance filter on 100 seeds x 200 points", t0)


def _strip_created_at(text: str) -> list[str]:
    lines = text.splitlines()
    head = json.loads(lines[0])
    head.pop("created_at", None)
    return [json.dumps(head, sort_keys=True)] + lines[1:]


def test_determinism_and_resume(tmp_path, space):
    t0 = time.monotonic()
    budget = BudgetSpec(max_trials=6, epochs_per_trial=4, wall_clock_s=BIG_WALL)

    paths = [tmp_path / "a.jsonl", tmp_path / "b.jsonl"]
    for path in paths:
        with TrialLogWriter(path) as sink:
            run_search(
                space, SamplerSpec("tpe"),
                SyntheticEvaluator(space, profile_seed=6),
                budget, seed=13, sink=sink,
            )
    assert _strip_created_at(paths[0].read_text()) == _strip_created_at(paths[1].read_text())

    full_lines = paths[0].read_text().splitlines()
    cut = tmp_path / "cut.jsonl"
    cut.write_text("".join(l + "\n" for l in full_lines[: 1 + 2 * 5 + 3]))
    res = resume_search(
        cut, space, SamplerSpec("tpe"),
        SyntheticEvaluator(space, profile_seed=6), budget, seed=13,
    )
    assert cut.read_text() == paths[0].read_text()
    full_log = read_log(paths[0])
    assert [t.trial_id for t in res.trials] == [t.trial_id for t in full_log.trials]
    assert [t.config.as_dict() for t in res.trials] == [
        t.config.as_dict() for t in full_log.trials
    ]
    report("determinism", "same-seed logs byte-identical modulo created_at; resumed log equals uninterrupted", t0)


def test_full_scale_results_not_desk_reproducible():
    """The published full-scale quality/speed numbers (PSNR 30.14 dB,
    SSIM 0.909, 47.62 FPS) require the face video dataset and GPU training;
    nothing in this suite asserts them."""
    t0 = time.monotonic()
    report(
        "not-desk-reproducible",
        "full-scale PSNR/SSIM/FPS figures are explicitly out of scope",
        t0,
    )


def _validate_log_schema(path: Path) -> None:
    lines = [json.loads(l) for l in path.read_text().splitlines() if l.strip()]
    head = lines[0]
    assert head["type"] == "header"
    assert set(head) == {"type", "protocol", "space_hash", "sampler", "seed",
                         "budget", "rng", "created_at"}
    assert set(head["budget"]) == {"max_trials", "epochs_per_trial", "wall_clock_s"}
    assert lines[-1]["type"] == "result"
    assert set(lines[-1]) == {"type", "best_trial", "elapsed_s"}
    for doc in lines[1:-1]:
        if doc["type"] == "epoch":
            assert set(doc) == {"type", "trial_id", "epoch", "config",
                                "eval_loss", "duration_s"}
            assert isinstance(doc["config"], dict)
        elif doc["type"] == "trial_done":
            assert set(doc) == {"type", "trial_id", "status", "objective"}
            assert doc["status"] in ("completed", "failed", "cut_by_budget")
        else:
            raise AssertionError(f"unexpected record type {doc['type']!r}")


def test_secondary_adapter_protocol_conformance(tmp_path, space):
    t0 = time.monotonic()
    assert ADAPTER.exists(), (
        f"adapter not built: {ADAPTER} missing (run `npm run build` in adapter/)"
    )
    profile_seed = 77
    budget = BudgetSpec(max_trials=5, epochs_per_trial=6, wall_clock_s=BIG_WALL)

    builtin_path = tmp_path / "builtin.jsonl"
    with TrialLogWriter(builtin_path) as sink:
        run_search(
            space, SamplerSpec("random"),
            SyntheticEvaluator(space, profile_seed=profile_seed),
            budget, seed=4, sink=sink,
        )

    from hofvsr.protocol import ExternalEvaluator

    adapter_path = tmp_path / "adapter.jsonl"
    evaluator = ExternalEvaluator(
        f"node {ADAPTER} --profile-seed {profile_seed}", epoch_timeout_s=30.0
    )
    try:
        with TrialLogWriter(adapter_path) as sink:
            run_search(space, SamplerSpec("random"), evaluator, budget, seed=4,
                       sink=sink)
    finally:
        evaluator.close()

    _validate_log_schema(adapter_path)

    ref = read_log(builtin_path)
    got = read_log(adapter_path)
    assert len(got.trials) == 5
    for t_ref, t_got in zip(ref.trials, got.trials):
        assert t_ref.config.as_dict() == t_got.config.as_dict()
        assert len(t_ref.epoch_reports) == len(t_got.epoch_reports)
        for r_ref, r_got in zip(t_ref.epoch_reports, t_got.epoch_reports):
            assert math.isclose(
                r_ref.eval_loss, r_got.eval_loss, rel_tol=0.0, abs_tol=1e-9
            )
    report(
        "secondary-adapter",
        "5-trial exec: run is schema-valid and losses match the built-in evaluator within 1e-9",
        t0,
    )
