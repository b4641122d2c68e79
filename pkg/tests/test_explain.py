import json

import numpy as np
import pytest

from trustcues.explain import (INTERVENTIONAL, PATH_DEPENDENT, TreeExplainer,
                               brute_force_shapley, plot_data, summarize, tree_shap)
from trustcues.forest import RandomForest, Tree


def _and_tree():
    # x0 <= .5 -> class 0; else x1 <= .5 -> class 0; else class 1.
    return Tree(left=[1, -1, 3, -1, -1], right=[2, -1, 4, -1, -1],
                feature=[0, -1, 1, -1, -1], threshold=[0.5, -2, 0.5, -2, -2],
                value=[[3, 1], [2, 0], [1, 1], [1, 0], [0, 1]])


UNIFORM = np.array([[0, 0], [0, 1], [1, 0], [1, 1]], dtype=float)


def test_stump_oracle():
    stump = Tree([1, -1, -1], [2, -1, -1], [0, -1, -1], [0.5, -2, -2], [[3, 1], [3, 0], [0, 1]])
    bg = np.array([[0.0], [0.0], [0.0], [1.0]])
    a = tree_shap(RandomForest.from_trees([stump], [0, 1], 1), [1.0], bg)
    assert np.allclose(a.base, [0.75, 0.25])
    assert np.allclose(a.phi[:, 0], [-0.75, 0.75])


def test_and_tree_hand_values():
    # v({})=1/4, v({0})=v({1})=1/2, v({0,1})=1, so each feature gets 3/8.
    model = RandomForest.from_trees([_and_tree()], [0, 1], 2)
    for method in (PATH_DEPENDENT, INTERVENTIONAL):
        a = tree_shap(model, [1.0, 1.0], UNIFORM, feature_perturbation=method)
        assert np.allclose(a.phi[1], [0.375, 0.375], atol=1e-15)
        assert np.allclose(a.phi[0], [-0.375, -0.375], atol=1e-15)
        assert a.local_accuracy_gap() < 1e-15


def _random_case(seed):
    r = np.random.default_rng(seed)
    X = r.integers(0, 3, size=(80, 8)).astype(float)
    y = (X[:, 0] + X[:, 1] * (X[:, 2] > 0) + r.integers(0, 2, 80)) % 3
    model = RandomForest(n_estimators=4, max_depth=4, max_features=3,
                         random_state=seed).fit(X, y)
    return model, X


@pytest.mark.parametrize("seed", range(10))
@pytest.mark.parametrize("method", [PATH_DEPENDENT, INTERVENTIONAL])
def test_matches_brute_force(seed, method):
    model, X = _random_case(seed)
    bg = X[:25] if method == INTERVENTIONAL else X
    exp = TreeExplainer(model, bg, feature_perturbation=method)
    for x in X[::20]:
        fast = exp.explain(x)
        slow = brute_force_shapley(model, x, bg, value=method)
        assert np.max(np.abs(fast.phi - slow.phi)) < 1e-9
        assert np.allclose(fast.base, slow.base, atol=1e-12)
        assert np.allclose(fast.output, slow.output, atol=1e-12)


@pytest.mark.parametrize("seed", range(3))
def test_local_accuracy_and_missingness(seed):
    model, X = _random_case(seed)
    exp = TreeExplainer(model, X)
    phi = exp.shap_values(X)
    out = exp.model_output(X)
    assert np.max(np.abs(exp.expected_value + phi.sum(axis=2) - out)) < 1e-12
    used = set().union(*[set(t.used_features().tolist()) for t in model.estimators_])
    unused = [j for j in range(X.shape[1]) if j not in used]
    assert np.all(phi[:, :, unused] == 0)
    # Vote fractions sum to one, so class attributions cancel per feature.
    assert np.allclose(phi.sum(axis=1), 0, atol=1e-12)


def test_input_validation():
    model, X = _random_case(0)
    with pytest.raises(ValueError):
        TreeExplainer(model, X, feature_perturbation="marginal")
    with pytest.raises(ValueError):
        TreeExplainer(model, X[:, :3])
    with pytest.raises(ValueError):
        TreeExplainer(model, np.zeros((0, 8)))
    with pytest.raises(ValueError):
        TreeExplainer(model, X).shap_values(X[:, :3])
    with pytest.raises(ValueError):
        brute_force_shapley(model, X[0], X, max_features=1)


def test_summarize_ranking_and_direction():
    # Feature 1 pushes class 1 up when present; feature 0 is weaker; feature 2 is inert.
    phi = np.zeros((4, 2, 3))
    X = np.array([[1, 1, 0], [0, 0, 0], [1, 1, 0], [0, 0, 0]], dtype=float)
    phi[:, 1, 1] = [0.4, -0.2, 0.4, -0.2]
    phi[:, 1, 0] = [0.1, -0.1, 0.1, -0.1]
    phi[:, 0] = -phi[:, 1]
    s = summarize(phi, X, ["a", "b"], ["x", "y", "z"])
    top = s.top("b")
    assert [f.name for f in top] == ["y", "x"]
    assert top[0].mean_abs == pytest.approx(0.3)
    assert top[0].direction == pytest.approx(1.0)
    assert s.top("a")[0].direction == pytest.approx(-1.0)
    assert "z" not in s.to_csv()
    assert s.to_csv().splitlines()[0] == "class,rank,feature,index,mean_abs_shap,direction"
    assert "class b:" in s.to_table()


def test_summarize_ties_and_attributions():
    phi = np.ones((2, 1, 3)) * 0.5
    s = summarize(phi, np.ones((2, 3)), ["c"])
    assert [f.index for f in s.top("c")] == [0, 1, 2]
    model, X = _random_case(1)
    attrs = TreeExplainer(model, X).explain_many(X[:5], sample_ids=list("abcde"))
    assert attrs[2].sample_id == "c"
    s2 = summarize(attrs, X[:5], list(model.classes_))
    assert s2.n_samples == 5
    with pytest.raises(ValueError):
        summarize(phi, np.ones((3, 3)), ["c"])


def test_plot_data_json():
    model, X = _random_case(2)
    phi = TreeExplainer(model, X).shap_values(X[:10])
    doc = json.loads(plot_data(phi, X[:10], list(model.classes_),
                               [f"f{j}" for j in range(8)], k=3))
    assert len(doc["panels"]) == len(model.classes_)
    feat = doc["panels"][0]["features"][0]
    assert len(feat["shap"]) == len(feat["present"]) == 10
