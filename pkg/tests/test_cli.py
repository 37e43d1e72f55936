import itertools
import json
import time

import numpy as np
import pytest

from dictsel import AverageSparsity, IndividualSparsity, dct2_basis
from dictsel.cli import (
    ExperimentConfig,
    ExperimentResult,
    brute_force_optimum,
    build_constraint,
    build_ground_set,
    main,
    residual_variance,
    run_experiment,
)
from dictsel.data_io import synth_dataset
from dictsel.errors import ParseError, TooLarge
from dictsel.offline import SelectorConfig, replacement_omp

from conftest import random_unit_atoms
from oracles import f_value


def test_residual_variance_exact_recovery():
    gs = dct2_basis(4)
    ds = synth_dataset(gs, 8, 5, 2, seed=0)
    dictionary = gs[:, ds.provenance["planted"]]
    assert residual_variance(dictionary, ds, 2) <= 1e-12


def test_residual_variance_empty_dictionary():
    rng = np.random.default_rng(1)
    y = rng.standard_normal((6, 4))
    expected = float((y * y).sum()) / (4 * 6)
    assert residual_variance(np.zeros((6, 0)), y, 3) == pytest.approx(expected)
    assert residual_variance(np.zeros((6, 0)), y, 0) == pytest.approx(expected)


def test_planted_dictionary_beats_random():
    gs = dct2_basis(6)
    rng = np.random.default_rng(2)
    wins = 0
    for seed in range(20):
        ds = synth_dataset(gs, 12, 6, 3, seed=seed)
        planted = ds.provenance["planted"]
        random_atoms = rng.choice(36, size=6, replace=False)
        rv_planted = residual_variance(gs[:, planted], ds, 3)
        rv_random = residual_variance(gs[:, random_atoms], ds, 3)
        wins += rv_planted < rv_random
    assert wins == 20


def test_brute_force_trivial_full_representation():
    gs = dct2_basis(3)
    rng = np.random.default_rng(3)
    y = rng.standard_normal((9, 2))
    value, atoms, supports = brute_force_optimum(y, gs[:, :4], IndividualSparsity(9), 4)
    # Four orthonormal atoms cannot span R^9; optimum is the projection mass.
    proj = gs[:, :4].T @ y
    assert value == pytest.approx(0.5 * float((proj * proj).sum()), abs=1e-9)
    assert atoms == (0, 1, 2, 3)


def test_brute_force_spanning_ground_set():
    # k = n and s = d: every point is represented exactly.
    gs = dct2_basis(2)
    rng = np.random.default_rng(30)
    y = rng.standard_normal((4, 3))
    value, _, _ = brute_force_optimum(y, gs, IndividualSparsity(4), 4)
    assert value == pytest.approx(0.5 * float((y * y).sum()), abs=1e-9)


def test_brute_force_matches_nested_loop_reimplementation():
    rng = np.random.default_rng(4)
    a = random_unit_atoms(rng, 5, 6)
    y = rng.standard_normal((5, 2))
    value, atoms, supports = brute_force_optimum(y, a, IndividualSparsity(1), 2)

    best = -np.inf
    for pair in itertools.combinations(range(6), 2):
        total = 0.0
        for t in range(2):
            total += max(f_value(a, [j], y[:, t]) for j in pair)
        best = max(best, total)
    assert value == pytest.approx(best, abs=1e-10)
    for t in range(2):
        assert set(supports[t]) <= set(atoms)


def test_brute_force_average_respects_budget():
    rng = np.random.default_rng(5)
    a = random_unit_atoms(rng, 6, 7)
    y = rng.standard_normal((6, 3))
    constraint = AverageSparsity((2, 2, 2), 4)
    value, atoms, supports = brute_force_optimum(y, a, constraint, 3)
    sizes = [len(z) for z in supports]
    assert all(size <= 2 for size in sizes)
    assert sum(sizes) <= 4
    # Exhaustive cross-check over all support tuples.
    best = 0.0
    options = []
    for t in range(3):
        opts = [()]
        for size in (1, 2):
            opts.extend(itertools.combinations(atoms, size))
        options.append(opts)
    for combo in itertools.product(*options):
        if sum(len(c) for c in combo) > 4:
            continue
        best = max(best, sum(f_value(a, c, y[:, t]) for t, c in enumerate(combo)))
    assert value == pytest.approx(best, abs=1e-10)


def test_brute_force_bounds_selectors():
    rng = np.random.default_rng(6)
    a = random_unit_atoms(rng, 6, 8)
    y = rng.standard_normal((6, 3))
    constraint = IndividualSparsity(2)
    opt, _, _ = brute_force_optimum(y, a, constraint, 3)
    state = replacement_omp(y, a, constraint, SelectorConfig(k=3))
    assert state.objective <= opt + 1e-9


def test_brute_force_guard():
    rng = np.random.default_rng(7)
    a = random_unit_atoms(rng, 8, 40)
    y = rng.standard_normal((8, 50))
    with pytest.raises(TooLarge):
        brute_force_optimum(y, a, IndividualSparsity(4), 12)


def base_config(trials=2, methods=None):
    return {
        "ground_set": {"bases": [{"name": "dct2", "side": 4}]},
        "train": {"kind": "synthetic", "T": 10, "k_planted": 4, "s": 2},
        "constraint": {"family": "individual", "s": 2},
        "methods": methods
        or [
            {"name": "replacement_omp", "k": 4},
            {"name": "modular_greedy", "k": 4},
        ],
        "trials": trials,
        "seed": 7,
    }


def test_run_experiment_cardinality_and_determinism():
    config = ExperimentConfig.from_dict(base_config())
    result = run_experiment(config)
    assert len(result.rows) == 4  # 2 trials x 2 methods
    again = run_experiment(ExperimentConfig.from_dict(base_config()))
    assert [r.objective for r in result.rows] == [r.objective for r in again.rows]
    assert all(r.test_residual_variance >= 0.0 for r in result.rows)


def test_run_experiment_threaded_matches_serial():
    config = ExperimentConfig.from_dict(base_config(trials=3))
    serial = run_experiment(config, threads=1)
    threaded = run_experiment(config, threads=3)
    assert [r.objective for r in serial.rows] == [r.objective for r in threaded.rows]


def test_result_round_trip_and_aggregates():
    result = run_experiment(ExperimentConfig.from_dict(base_config()))
    back = ExperimentResult.from_json(result.to_json())
    assert [r.to_dict() for r in back.rows] == [r.to_dict() for r in result.rows]
    for entry in result.aggregates():
        rows = [r for r in result.rows if r.method == entry["method"] and r.k == entry["k"]]
        values = np.array([r.objective for r in rows])
        assert entry["mean_objective"] == pytest.approx(float(values.mean()), abs=1e-12)
    csv_text = result.to_csv()
    assert csv_text.count("\n") == len(result.rows) + 1


def test_config_rejects_unknown_method():
    doc = base_config(methods=[{"name": "sparse_magic", "k": 3}])
    with pytest.raises(ParseError, match="methods\\[0\\].name"):
        ExperimentConfig.from_dict(doc)


def test_config_rejects_missing_fields():
    with pytest.raises(ParseError, match="train"):
        ExperimentConfig.from_dict({"ground_set": {}, "constraint": {}, "methods": [{}]})


def test_build_constraint_variants():
    c = build_constraint({"family": "average", "s_t": 2, "s_prime_per_point": 3}, 4)
    assert isinstance(c, AverageSparsity)
    assert c.s_prime == 12
    with pytest.raises(ParseError, match="family"):
        build_constraint({"family": "nope"}, 4)
    matroid = build_constraint(
        {"family": "partition_matroid", "rules": [[[[0, 1, 2], 1], [[3, 4], 2]]]}, 3
    )
    assert len(matroid.rules) == 3
    assert matroid.independent(0, [0, 3, 4])
    assert not matroid.independent(0, [0, 1])
    block = build_constraint(
        {"family": "block", "blocks": [[0, 1], [2, 3]], "caps": [2, 1]}, 4
    )
    assert block.caps == (2, 1)


def test_build_ground_set_unknown_basis():
    with pytest.raises(ParseError, match="bases\\[0\\]"):
        build_ground_set({"bases": [{"name": "fourier", "side": 4}]})


def test_cli_bench_and_select(tmp_path):
    cfg_path = tmp_path / "config.json"
    cfg_path.write_text(json.dumps(base_config()))
    out = tmp_path / "result.json"
    assert main(["bench", "--config", str(cfg_path), "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert len(doc["rows"]) == 4
    assert out.with_suffix(".csv").exists()

    sel_out = tmp_path / "select.json"
    code = main(
        ["select", "--config", str(cfg_path), "--method", "modular_greedy", "--out", str(sel_out)]
    )
    assert code == 0
    assert json.loads(sel_out.read_text())["row"]["method"] == "modular_greedy"


def test_cli_oracle(tmp_path):
    doc = base_config()
    doc["train"]["T"] = 3
    doc["k"] = 2
    cfg_path = tmp_path / "config.json"
    cfg_path.write_text(json.dumps(doc))
    out = tmp_path / "oracle.json"
    assert main(["oracle", "--config", str(cfg_path), "--out", str(out)]) == 0
    payload = json.loads(out.read_text())
    assert payload["optimum"] > 0.0
    assert len(payload["atoms"]) == 2


def test_cli_online(tmp_path):
    doc = base_config()
    doc["online"] = {"method": "online_replacement_omp", "k": 4, "s": 2, "horizon": 10}
    doc["train"]["T"] = 10
    cfg_path = tmp_path / "config.json"
    cfg_path.write_text(json.dumps(doc))
    out = tmp_path / "ledger.csv"
    assert main(["online", "--config", str(cfg_path), "--out", str(out)]) == 0
    lines = out.read_text().strip().splitlines()
    assert lines[0] == "round,player_gain,cumulative_player_gain"
    assert len(lines) == 11


def test_cli_groundset(tmp_path, capsys):
    cfg_path = tmp_path / "config.json"
    cfg_path.write_text(json.dumps({"ground_set": {"bases": [{"name": "haar2", "side": 4}]}}))
    assert main(["groundset", "--config", str(cfg_path)]) == 0
    info = json.loads(capsys.readouterr().out)
    assert (info["d"], info["n"]) == (16, 16)


def test_cli_exit_codes(tmp_path):
    missing = tmp_path / "missing.json"
    assert main(["bench", "--config", str(missing)]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"ground_set": {}, "train": {}, "constraint": {}, "methods": [{"name": "x", "k": 1}]}))
    assert main(["bench", "--config", str(bad)]) == 2
    # Runtime error: oracle beyond the guard.
    big = base_config()
    big["train"] = {"kind": "synthetic", "T": 40, "k_planted": 10, "s": 3}
    big["ground_set"] = {"bases": [{"name": "dct2", "side": 8}]}
    big["k"] = 10
    cfg = tmp_path / "big.json"
    cfg.write_text(json.dumps(big))
    assert main(["oracle", "--config", str(cfg)]) == 3


def test_romp_runtime_scales_linearly_in_data_count():
    # Doubling T should roughly double the per-run wall time.
    rng = np.random.default_rng(8)
    a = random_unit_atoms(rng, 32, 64)
    constraint = IndividualSparsity(3)
    config = SelectorConfig(k=8)

    def run_time(t_count):
        y = rng.standard_normal((32, t_count))
        times = []
        for _ in range(5):
            start = time.perf_counter()
            replacement_omp(y, a, constraint, config)
            times.append(time.perf_counter() - start)
        return float(np.median(times))

    run_time(400)  # warm-up
    small = run_time(400)
    large = run_time(800)
    assert 1.5 <= large / small <= 3.0
