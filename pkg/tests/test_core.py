import json

import numpy as np
import pytest

from mtsparse.core import (
    CouplingGraph,
    DataError,
    Edge,
    HyperParams,
    ModelWeights,
    MultiTaskDataset,
    TaskDataset,
    read_dataset,
    read_edges,
    read_model,
    validate_dataset,
    write_dataset,
    write_edges,
    write_model,
)


def test_valid_dataset_has_no_violations(small_ds):
    assert validate_dataset(small_ds) == []


def test_zero_label_is_reported_with_task_and_row(small_ds):
    bad = MultiTaskDataset(
        (small_ds.tasks[0], TaskDataset(small_ds.tasks[1].x, [-1, 0, 1])),
        small_ds.task_names,
        small_ds.feature_names,
    )
    problems = validate_dataset(bad)
    assert len(problems) == 1
    assert "FS" in problems[0] and "row 1" in problems[0]


def test_inconsistent_feature_dimension():
    ds = MultiTaskDataset(
        (TaskDataset(np.ones((2, 3)), [1, 1]), TaskDataset(np.ones((2, 4)), [1, -1])),
        ("a", "b"),
        ("f0", "f1", "f2"),
    )
    problems = validate_dataset(ds)
    assert len(problems) == 1
    assert "inconsistent feature dimension" in problems[0]


@pytest.mark.parametrize(
    "mutate",
    [
        lambda ds: MultiTaskDataset(ds.tasks, ("LI", "LI"), ds.feature_names),
        lambda ds: MultiTaskDataset(ds.tasks, ds.task_names, ("job", "job", "rent")),
        lambda ds: MultiTaskDataset((), (), ds.feature_names),
        lambda ds: MultiTaskDataset((TaskDataset(ds.tasks[0].x, [1, -1, 1]), ds.tasks[1]), ds.task_names, ds.feature_names),
        lambda ds: MultiTaskDataset((TaskDataset(ds.tasks[0].x * np.nan, [1, -1]), ds.tasks[1]), ds.task_names, ds.feature_names),
        lambda ds: MultiTaskDataset(ds.tasks, ds.task_names, ("job", "food")),
        lambda ds: MultiTaskDataset(ds.tasks, ("LI",), ds.feature_names),
    ],
    ids=["dup-task", "dup-feature", "no-tasks", "row-count", "non-finite", "dim-vs-names", "name-count"],
)
def test_each_mutation_yields_a_violation(small_ds, mutate):
    assert len(validate_dataset(mutate(small_ds))) >= 1


def test_dataset_round_trip(tmp_path, rng):
    x = rng.standard_normal((7, 4)) * 1e3
    ds = MultiTaskDataset(
        (TaskDataset(x, np.where(rng.random(7) < 0.5, -1, 1)), TaskDataset(x[:3] / 7, [1, 1, -1])),
        ("LI", "HI"),
        ("a", "b,c", "d\"e", "f"),
    )
    write_dataset(ds, tmp_path / "ds")
    meta = json.loads((tmp_path / "ds" / "meta.json").read_text())
    assert meta["C"] == 2 and meta["d"] == 4
    assert (tmp_path / "ds" / "task_LI.csv").read_text().splitlines()[0].endswith(",label")
    assert read_dataset(tmp_path / "ds") == ds


def test_model_round_trip(tmp_path, rng):
    model = ModelWeights(rng.standard_normal((3, 2)), ("a", "b", "c"), ("x", "y"), np.array([0.5, -0.25]),
                         HyperParams().to_dict())
    write_model(model, tmp_path / "model.json")
    back = read_model(tmp_path / "model.json")
    assert back == model
    assert back.hyperparams == model.hyperparams
    raw = json.loads((tmp_path / "model.json").read_text())
    assert set(raw) == {"w", "feature_names", "task_names", "bias", "hyperparams"}
    assert len(raw["w"]) == 3 and len(raw["w"][0]) == 2


def test_model_without_bias_omits_field(tmp_path):
    model = ModelWeights(np.zeros((2, 1)), ("a", "b"), ("t",))
    write_model(model, tmp_path / "m.json")
    assert "bias" not in json.loads((tmp_path / "m.json").read_text())
    assert read_model(tmp_path / "m.json").bias is None


def test_model_weights_reject_bad_shapes():
    with pytest.raises(ValueError):
        ModelWeights(np.zeros((2, 2)), ("a",), ("x", "y"))
    with pytest.raises(ValueError):
        ModelWeights(np.array([[np.inf]]), ("a",), ("x",))


def test_types_are_read_only(small_ds):
    with pytest.raises(ValueError):
        small_ds.tasks[0].x[0, 0] = 5.0


def test_graph_normalizes_and_validates():
    g = CouplingGraph(((2, 0, 1.5),))
    assert g.edges == (Edge(0, 2, 1.5),)
    assert g.validate(3) == []
    assert g.validate(2)
    assert CouplingGraph((Edge(0, 1, 1.0), Edge(1, 0, 2.0))).validate(2) == ["duplicate edge (0, 1)"]
    assert CouplingGraph((Edge(1, 1, 1.0),)).validate(3)
    assert CouplingGraph((Edge(0, 1, -1.0),)).validate(2)


def test_edges_round_trip(tmp_path):
    g = CouplingGraph((Edge(0, 1, 0.5), Edge(1, 3, 2.0)))
    names = ("LI", "FS", "HI", "UM")
    write_edges(g, names, tmp_path / "e.csv")
    assert read_edges(tmp_path / "e.csv", names) == g


def test_edges_unknown_task(tmp_path):
    (tmp_path / "e.csv").write_text("task_a,task_b,weight\nLI,XX,1\n")
    with pytest.raises(DataError, match="XX"):
        read_edges(tmp_path / "e.csv", ("LI", "FS"))


@pytest.mark.parametrize("field,value", [("lambda_sparse", -1.0), ("rho", 0.0), ("eps_primal", 0.0),
                                         ("max_iter", 0), ("inner_max_iter", 0), ("inner_grad_tol", -1e-3)])
def test_hyperparams_validation(field, value):
    with pytest.raises(ValueError):
        HyperParams(**{field: value})
