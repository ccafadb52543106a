import numpy as np
import pytest

from incfm.mf import LatentTable, MfModel, imf_update, mf_batch_train, mf_score_items


def _set(model, user, item, p, q):
    u, i = model.ensure_user(user), model.ensure_item(item)
    model.P.matrix[u] = p
    model.Q.matrix[i] = q


def test_update_reads_pre_update_vectors():
    model = MfModel(2, eta=0.1, lam=0.5)
    _set(model, "u", "i", np.array([1.0, 0.0]), np.array([0.5, 1.0]))
    imf_update(model, "u", "i")
    # err = 1 - 0.5 = 0.5; p += 0.2 * (0.5 q - 0.5 p); q += 0.2 * (0.5 p - 0.5 q)
    np.testing.assert_allclose(model.P["u"], [0.95, 0.1])
    np.testing.assert_allclose(model.Q["i"], [0.55, 0.9])


@pytest.mark.parametrize("case", range(20))
def test_update_is_a_gradient_step(case):
    rng = np.random.default_rng(case)
    k = int(rng.integers(1, 9))
    eta, lam = 0.03, float(rng.uniform(0, 0.5))
    model = MfModel(k, eta, lam, init_sigma=0.7, seed=case)
    u, i = model.ensure_user(0), model.ensure_item(0)
    p, q = model.P.matrix[u].copy(), model.Q.matrix[i].copy()
    imf_update(model, 0, 0)

    def objective(pp, qq):
        return (1 - pp @ qq) ** 2 + lam * (pp @ pp + qq @ qq)

    h = 1e-3
    for f in range(k):
        e = np.eye(k)[f] * h
        gp = (objective(p + e, q) - objective(p - e, q)) / (2 * h)
        gq = (objective(p, q + e) - objective(p, q - e)) / (2 * h)
        assert (model.P.matrix[u][f] - p[f]) / -eta == pytest.approx(gp, rel=1e-5, abs=1e-10)
        assert (model.Q.matrix[i][f] - q[f]) / -eta == pytest.approx(gq, rel=1e-5, abs=1e-10)


def test_fitted_pair_without_regularization_is_a_fixed_point():
    model = MfModel(2, eta=0.1, lam=0.0)
    _set(model, "u", "i", np.array([1.0, 0.0]), np.array([1.0, 3.0]))
    imf_update(model, "u", "i")
    np.testing.assert_array_equal(model.P["u"], [1.0, 0.0])
    np.testing.assert_array_equal(model.Q["i"], [1.0, 3.0])


def test_fitted_pair_with_regularization_decays():
    model = MfModel(2, eta=0.1, lam=0.5)
    _set(model, "u", "i", np.array([1.0, 0.0]), np.array([1.0, 0.0]))
    imf_update(model, "u", "i")
    # err = 0, so both vectors shrink by 2 * eta * lam = 10%
    np.testing.assert_allclose(model.P["u"], [0.9, 0.0])
    np.testing.assert_allclose(model.Q["i"], [0.9, 0.0])


def test_other_vectors_are_untouched():
    model = MfModel(3, 0.05, 0.01, seed=1)
    for key in ("a", "b"):
        model.ensure_user(key)
        model.ensure_item(key)
    pb, qb = model.P["b"].copy(), model.Q["b"].copy()
    imf_update(model, "a", "a")
    np.testing.assert_array_equal(model.P["b"], pb)
    np.testing.assert_array_equal(model.Q["b"], qb)


def test_lazy_init_depends_on_seed_and_order():
    a, b = MfModel(4, 0.1, 0.0, seed=3), MfModel(4, 0.1, 0.0, seed=3)
    for m in (a, b):
        m.ensure_user("x")
        m.ensure_item("y")
    assert a.state_bytes() == b.state_bytes()
    c = MfModel(4, 0.1, 0.0, seed=3)
    c.ensure_item("y")
    c.ensure_user("x")
    assert not np.array_equal(c.P["x"], a.P["x"])


def test_latent_table_grows_past_initial_capacity():
    table = LatentTable(2)
    for j in range(40):
        table.insert(j, np.full(2, float(j)))
    assert len(table) == 40 and table.matrix.shape == (40, 2)
    assert table[17].tolist() == [17.0, 17.0]


class TestBatch:
    def test_zero_epochs_only_registers(self):
        model = MfModel(2, 0.1, 0.0, seed=0)
        mf_batch_train(model, [("u1", "i1"), ("u2", "i1")], epochs=0, seed=0)
        assert set(model.P.rows) == {"u1", "u2"} and set(model.Q.rows) == {"i1"}
        ref = MfModel(2, 0.1, 0.0, seed=0)
        for key in ("u1", "i1", "u2"):
            (ref.ensure_item if key.startswith("i") else ref.ensure_user)(key)
        assert model.state_bytes() == ref.state_bytes()

    def test_repeated_pair_converges_to_one(self):
        model = MfModel(3, 0.05, 0.0, init_sigma=0.3, seed=2)
        mf_batch_train(model, [("u", "i")], epochs=500, seed=0)
        assert float(model.P["u"] @ model.Q["i"]) == pytest.approx(1.0, abs=1e-6)

    def test_negative_epochs_rejected(self):
        with pytest.raises(ValueError):
            mf_batch_train(MfModel(2, 0.1, 0.0), [], epochs=-1, seed=0)


def test_score_items_registers_unknown_keys():
    model = MfModel(2, 0.1, 0.0, seed=0)
    scores = mf_score_items(model, "new-user", ["a", "b"])
    assert scores.shape == (2,)
    assert "new-user" in model.P and "b" in model.Q
    assert scores[1] == pytest.approx(model.P["new-user"] @ model.Q["b"])


@pytest.mark.parametrize("kwargs", [dict(k=0), dict(eta=0.0), dict(lam=-0.1), dict(init_sigma=0.0)])
def test_invalid_hyperparameters(kwargs):
    with pytest.raises(ValueError):
        MfModel(**(dict(k=2, eta=0.1, lam=0.0) | kwargs))
