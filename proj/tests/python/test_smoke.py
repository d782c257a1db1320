import math

import pytest

import simple_pl as sp


def small_set(n_passes=3, ids=(4, 9, 2, 7)):
    rows = []
    for i, sid in enumerate(ids):
        for p in range(n_passes):
            label = (i + p) % 2
            rows.append((sid, p, label, [0.3, 0.7] if label else [0.8, 0.2], [float(i), float(p) * 0.5]))
    return sp.RecordSet(n_passes, 2, 2, rows)


def test_record_round_trip(tmp_path):
    s = small_set()
    assert len(s) == 12 and s.n_samples == 4
    for fmt in ("jsonl", "binary"):
        path = tmp_path / f"r.{fmt}"
        sp.write_records(s, path, fmt)
        assert sp.load_records(path) == s
    assert [r[0] for r in s.records()][:3] == [2, 2, 2]


def test_uncertainty_matches_formulas():
    s = small_set()
    rows = sp.uncertainty(s, k=3)
    assert len(rows) == len(s)
    for r in rows:
        if r["sigma"] > 0:
            assert math.isclose(r["s"], (r["J"] - r["E"]) / r["sigma"], rel_tol=1e-12)
        else:
            assert r["s"] == 0.0


def test_edit_keeps_every_sample():
    edited = sp.edit(small_set(), fraction=0.2, k=3)
    assert [e[0] for e in edited] == [2, 4, 7, 9]
    assert all(e[2] in ("vote", "fallback") for e in edited)
    assert len(sp.edit(small_set(), fraction=0.0)) == 4


def test_errors_map_to_exception_kinds(tmp_path):
    with pytest.raises(sp.ConfigError):
        sp.edit(small_set(), fraction=1.5, k=3)
    with pytest.raises(sp.ConfigError):
        sp.uncertainty(small_set(), k=50)
    with pytest.raises(sp.DataError):
        sp.load_records(tmp_path / "missing.jsonl")
    with pytest.raises(sp.DataError):
        sp.RecordSet(2, 2, 2, [(0, 0, 0, [1.0, 0.0], [0.0, 0.0])])
    assert issubclass(sp.NumericalError, sp.SimpleError)


def test_synth_writes_corpus(tmp_path):
    path = tmp_path / "c.jsonl"
    sp.synth(path, n_classes=3, dimension=4, per_class=5, seed=1)
    lines = path.read_text().splitlines()
    assert len(lines) == 16
    assert '"SPLE-CORPUS"' in lines[0]


def test_run_strategy_and_compare():
    r = sp.run_strategy("setred", seed=1, epochs=1)
    assert r["strategy"] == "setred" and r["trained"] == 320
    assert len(r["eval_accuracy"]) == 1
    r = sp.run_strategy("simple", seed=1, epochs=0)
    assert r["trained"] == 400 and sum(r["histogram_after"]) == 400
    a = sp.compare(["baseline_st", "simple"], seeds=2)
    b = sp.compare(["baseline_st", "simple"], seeds=2, workers=3)
    assert a == b
    assert a[0].splitlines()[0].startswith("strategy,seed,eval_acc")
    assert len(a[0].splitlines()) == 5
