import numpy as np
import pytest
from sklearn.base import clone
from sklearn.svm import SVC

from atbat_mdp.exceptions import EmptyData, SingleClassData, ZeroPlateAppearances
from atbat_mdp.seeding import child_rng, derive_seed
from atbat_mdp.spatial import (
    BatterProfile,
    BelievedTrajectoryNoise,
    LabeledTrajectory,
    QuadraticKernelSVC,
    believed_trajectory,
    chance_threshold,
    compute_alpha,
    dual_objective,
    gate_batter,
    labeled_trajectories,
    quadratic_kernel,
    smo_solve,
    train_classifier,
)
from atbat_mdp.states import PitchClass
from atbat_mdp.synthgen import generate_season, random_spec

from conftest import close_templates


@pytest.fixture(scope="module")
def separated():
    spec = random_spec("P", 1)
    train = labeled_trajectories(generate_season(spec, 600, 0.5, seed=1))
    test = labeled_trajectories(generate_season(spec, 200, 0.5, seed=2, season=2010))
    return train_classifier(train), train, test


def test_compute_alpha():
    assert compute_alpha(0, 100) == 0.0
    assert compute_alpha(1, 3) == 1 / 3
    # a 2010 line of 95 strikeouts in 648 plate appearances gives the tabulated 0.1466
    assert round(compute_alpha(95, 648), 4) == 0.1466
    with pytest.raises(ZeroPlateAppearances):
        compute_alpha(0, 0)
    with pytest.raises(ValueError):
        compute_alpha(5, 4)
    assert BatterProfile("B", 10, 40).alpha == 0.25


def test_believed_trajectory_identity_and_bound(rng):
    x = rng.normal(size=300)
    out = believed_trajectory(x, 0.0, rng)
    np.testing.assert_array_equal(out, x)
    assert out is not x
    noisy = believed_trajectory(x, 0.2, rng)
    assert np.all(np.abs(noisy - x) <= 0.2)
    with pytest.raises(ValueError):
        believed_trajectory(x, -0.1, rng)


def test_believed_trajectory_golden():
    assert derive_seed(42, "golden") == 1572983400101207569
    v = believed_trajectory(np.zeros(300), 0.2, child_rng(42, "golden"))
    np.testing.assert_array_equal(v[:5], [
        -0.06976282535500791, -0.016631767841751355, -0.07996909081588038,
        0.05981017667900815, 0.09787954715616541,
    ])
    assert v[-1] == 0.0940804179462249
    assert float(v.sum()) == pytest.approx(1.203598208470145, abs=1e-12)


def test_noise_transformer(rng):
    X = rng.normal(size=(4, 300))
    t = BelievedTrajectoryNoise(alpha=0.0).fit(X)
    np.testing.assert_array_equal(t.transform(X), X)
    a = BelievedTrajectoryNoise(alpha=0.5, random_state=3).fit_transform(X)
    b = clone(BelievedTrajectoryNoise(alpha=0.5, random_state=3)).fit_transform(X)
    np.testing.assert_array_equal(a, b)


def test_smo_matches_libsvm():
    rng = np.random.default_rng(0)
    X = np.vstack([rng.normal(0.0, 1.0, (60, 5)), rng.normal(1.0, 1.0, (60, 5))])
    y = np.r_[np.ones(60), -np.ones(60)]
    s = X.shape[1]
    K = quadratic_kernel(X, X, s)
    alpha, rho, _ = smo_solve(K, y, C=1.0, tol=1e-8)
    ref = SVC(kernel="poly", degree=2, gamma=1.0 / s, coef0=1.0, C=1.0, tol=1e-8).fit(X, y)
    ref_alpha = np.zeros(len(y))
    ref_alpha[ref.support_] = np.abs(ref.dual_coef_[0])
    assert dual_objective(alpha, K, y) == pytest.approx(dual_objective(ref_alpha, K, y), rel=1e-9)
    # positive decisions favour label +1 in both (sklearn's classes_[1])
    np.testing.assert_allclose(K @ (alpha * y) - rho, ref.decision_function(X), rtol=0, atol=1e-5)
    assert np.all(alpha >= -1e-12) and np.all(alpha <= 1 + 1e-12)
    assert abs(alpha @ y) < 1e-10


def test_separable_clusters():
    X = np.zeros((20, 3))
    X[:10, 0], X[10:, 0] = -10, 10
    X[:, 1] = np.arange(20) % 5
    y = np.r_[np.zeros(10), np.ones(10)]
    clf = QuadraticKernelSVC().fit(X, y)
    assert clf.score(X, y) == 1.0


def test_one_example_per_class():
    X = np.eye(4) * 3.0
    clf = QuadraticKernelSVC(C=100.0).fit(X, np.arange(4))
    np.testing.assert_array_equal(clf.predict(X), np.arange(4))


def test_multiclass_against_sklearn(separated):
    clf, train, test = separated
    X = np.vstack([d.x for d in train])
    y = np.array([int(d.label) for d in train])
    assert clf.score(X, y) >= 0.99
    Xt = np.vstack([d.x for d in test])
    yt = np.array([int(d.label) for d in test])
    Z, Zt = clf._standardize(X), clf._standardize(Xt)
    ref = SVC(kernel="poly", degree=2, gamma=1.0 / X.shape[1], coef0=1.0).fit(Z, y)
    assert np.mean(clf.predict(Xt) == ref.predict(Zt)) >= 0.99
    assert clf.score(Xt, yt) >= 0.99


def test_single_class_rejected():
    with pytest.raises(SingleClassData):
        QuadraticKernelSVC().fit(np.zeros((3, 2)), [1, 1, 1])
    with pytest.raises(EmptyData):
        train_classifier([])


def test_estimator_api():
    clf = QuadraticKernelSVC(C=2.0)
    assert clf.get_params() == {"C": 2.0, "tol": 1e-3, "kernel_scale": None, "max_iter": 1_000_000}
    assert clone(clf).set_params(C=3.0).C == 3.0


def test_save_load(tmp_path, separated):
    clf, _, test = separated
    path = tmp_path / "clf.json"
    clf.save(path)
    back = QuadraticKernelSVC.load(path)
    Xt = np.vstack([d.x for d in test])
    np.testing.assert_array_equal(back.predict(Xt), clf.predict(Xt))
    assert back.chance_threshold_ == clf.chance_threshold_


def test_chance_threshold():
    assert chance_threshold([PitchClass.FASTBALL] * 5) == 1.0
    assert chance_threshold([0, 1, 0, 1]) == 0.5
    assert chance_threshold([0] * 2005 + [1] * 1371) == pytest.approx(0.5939, abs=5e-5)
    with pytest.raises(EmptyData):
        chance_threshold([])


def test_gate(separated):
    clf, train, test = separated
    acc0, ok0 = gate_batter(clf, test, BatterProfile("B", 0, 10), child_rng(1, "g"))
    Xt = np.vstack([d.x for d in test])
    yt = np.array([int(d.label) for d in test])
    assert acc0 == clf.score(Xt, yt)
    assert ok0 and clf.chance_threshold_ < 1
    acc, ok = gate_batter(clf, test, 1e6, child_rng(1, "g"))
    assert not ok
    assert abs(acc - clf.chance_threshold_) < 0.15
    assert clf.chance_threshold_ == chance_threshold(train)


def test_gate_accuracy_falls_with_alpha():
    spec = random_spec("P", 1, templates=close_templates(0.05), jitter=0.005)
    clf = train_classifier(labeled_trajectories(generate_season(spec, 250, 0.5, seed=1)))
    test = labeled_trajectories(generate_season(spec, 120, 0.5, seed=2, season=2010))
    means = [np.mean([gate_batter(clf, test, a, child_rng(s, "gate", a))[0] for s in range(20)])
             for a in (0.0, 0.1, 0.3, 1.0)]
    assert all(x >= y for x, y in zip(means, means[1:]))
    assert means[0] > means[-1]


def test_labeled_trajectories_skip_untyped_and_missing():
    spec = random_spec("P", 2, untyped_rate=0.3)
    season = generate_season(spec, 40, 0.5, seed=3)
    data = labeled_trajectories(season)
    typed = sum(p.raw_type is not None for ab in season for p in ab.pitches)
    assert len(data) == typed and all(isinstance(d, LabeledTrajectory) and d.x.shape == (300,) for d in data)
    assert labeled_trajectories(generate_season(spec, 5, 0.5, seed=3, with_trajectories=False)) == []
