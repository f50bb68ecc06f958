import math

import numpy as np
import pytest

import scml


def small_data(train=120, test=60, seed=3):
    spec = scml.DatasetSpec()
    spec.train_size, spec.test_size, spec.seed = train, test, seed
    return spec, *scml.generate(spec)


def test_generate_and_jsonl_round_trip(tmp_path):
    spec, train, test = small_data()
    assert len(train) == 120 and len(test) == 60
    inst = train[0]
    assert inst.objects.shape == (spec.n_objects, spec.descriptor_dim)
    assert inst.question[0] == inst.qtype
    path = tmp_path / "train.jsonl"
    scml.write_jsonl(train, str(path))
    assert scml.read_jsonl(str(path)) == train


def test_similarity_and_selection():
    rng = np.random.default_rng(0)
    v = rng.normal(size=(6, 4))
    q = rng.normal(size=(2, 4))
    sim = scml.similarity_scores(v, q)
    cos = (v / np.linalg.norm(v, axis=1, keepdims=True)) @ (q / np.linalg.norm(q, axis=1, keepdims=True)).T
    np.testing.assert_allclose(sim, cos.sum(axis=1), atol=1e-12)

    fixed = scml.fixed_topk_split(v, sim, 2)
    assert fixed["mask"].sum() == 2
    np.testing.assert_array_equal(fixed["positive"] + fixed["negative"], v)

    cut = scml.adaptive_split(v, sim, 0.5, np.zeros(6), scoring="sim_gap")
    assert 1 <= cut["k_chosen"] <= 6
    np.testing.assert_array_equal(cut["positive"] + cut["negative"], v)


def test_loss_values():
    assert scml.vqa_bce(np.zeros(12), np.full(12, 0.3)) == pytest.approx(math.log(2.0), abs=1e-15)
    at_margin = np.array([[0.5, math.sqrt(0.75)]])
    got = scml.ms_loss(np.array([[1.0, 0.0]]), [at_margin], [np.zeros((0, 2))])
    assert got == pytest.approx(math.log(2.0) / 2.0, abs=1e-14)
    ans = np.zeros(12)
    ans[[2, 5]] = 1.0
    pred = np.zeros(12)
    pred[5] = 4.0
    np.testing.assert_array_equal(scml.pseudo_labels(pred, ans, 1), np.eye(12)[2])


def test_errors_map_to_python_exceptions():
    with pytest.raises(scml.DomainError):
        scml.similarity_scores(np.array([[1.0, 0.0], [0.0, 0.0]]), np.array([[1.0, 1.0]]))
    with pytest.raises(scml.ShapeError):
        scml.vqa_bce(np.zeros(3), np.zeros(4))
    with pytest.raises(ValueError):
        scml.train({**scml.default_config(), "not_a_field": 1}, [], [])


def test_train_evaluate_predict_deterministic():
    _, train, test = small_data()
    cfg = {**scml.default_config(), "epochs": 2, "learning_rate": 0.01, "batch_size": 32, "seed": 1}
    a = scml.train(cfg, train, test)
    b = scml.train(cfg, train, test)
    assert a["metrics"] == b["metrics"]
    assert len(a["metrics"]["loss_curve"]) == 2
    report = scml.evaluate(a["checkpoint"], test)
    assert report == a["metrics"]["test"]
    preds = scml.predict(a["checkpoint"], test)
    assert len(preds) == len(test)
    hits = sum(p["answer"] in inst.answers for p, inst in zip(preds, test))
    assert hits / len(test) == pytest.approx(report["overall_accuracy"])


def test_ablate_and_gradcheck():
    spec, train, test = small_data(80, 40)
    cfg = {**scml.default_config(), "epochs": 1, "learning_rate": 0.01, "batch_size": 32}
    csv = scml.ablate(cfg, ["pos", "pos_neg_ms_adaptive"], [0, 1], train, test, spec.num_question_types)
    lines = csv.strip().splitlines()
    assert lines[0].startswith("variant,seed,status,overall")
    assert len(lines) == 1 + 4 + 2
    records = scml.gradcheck(points=4)
    assert records and all(r["passed"] for r in records)
