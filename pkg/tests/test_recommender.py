import numpy as np
import pytest

from incfm.fm import DimensionError, SparseVector, fm_init, fm_predict
from incfm.mf import MfModel
from incfm.recommender import Catalog, EventContext, rank_by_closeness, rank_of, score_all, top_n


def test_ranks_by_distance_to_one_with_stable_ties():
    # binary-exact values so the three 0.25 distances are genuinely tied
    scored = rank_by_closeness(["a", "b", "c", "d"], [0.75, 1.5, 1.25, 0.75])
    assert scored.ranked_keys() == ["a", "c", "d", "b"]
    assert scored.distances.tolist() == [0.25, 0.25, 0.25, 0.5]


def test_overshooting_is_penalized_like_undershooting():
    scored = rank_by_closeness(["low", "high"], [0.5, 1.4])
    assert scored.ranked_keys() == ["high", "low"]


def test_exclusion_removes_candidates():
    scored = rank_by_closeness(["a", "b", "c"], [1.0, 0.8, 0.1], exclude={"a"})
    assert scored.ranked_keys() == ["b", "c"]
    assert len(scored) == 2
    with pytest.raises(KeyError):
        rank_of(scored, "a")


def test_top_n_and_rank_of():
    scored = rank_by_closeness(list("wxyz"), [0.0, 0.99, 2.5, 0.7])
    assert top_n(scored, 2) == ["x", "z"]
    assert top_n(scored, 10) == ["x", "z", "w", "y"]
    assert rank_of(scored, "w") == 2
    with pytest.raises(KeyError):
        rank_of(scored, "missing")
    with pytest.raises(ValueError):
        top_n(scored, 0)


def _catalog(rng, d_ctx, n_items, d_item):
    """Items own disjoint ID features plus shared attribute features."""
    catalog = Catalog()
    for j in range(n_items):
        attrs = rng.choice(d_item, size=int(rng.integers(0, 3)), replace=False)
        entries = {d_ctx + j: 1.0}
        entries.update({d_ctx + n_items + int(a): float(rng.uniform(0.5, 1.5)) for a in attrs})
        catalog.add(f"item{j}", SparseVector.from_dict(d_ctx + n_items + d_item, entries))
    return catalog


@pytest.mark.parametrize("seed", range(10))
def test_vectorized_scores_match_per_item_prediction(seed):
    rng = np.random.default_rng(seed)
    d_ctx, n_items, d_item = 6, 9, 4
    d = d_ctx + n_items + d_item
    model = fm_init(d, 3, 0.1, sigma=0.4, seed=seed)
    model.w = rng.normal(size=d)
    model.w0 = 0.3
    catalog = _catalog(rng, d_ctx, n_items, d_item)
    ctx_idx = np.sort(rng.choice(d_ctx, size=3, replace=False))
    ctx = SparseVector(d, ctx_idx, rng.uniform(0.1, 1.0, size=3))
    scored = score_all(model, EventContext("u", ctx), catalog)
    for j, block in enumerate(catalog.blocks):
        expect = fm_predict(model, SparseVector.concat(d, ctx, block))
        assert scored.scores[j] == pytest.approx(expect, rel=1e-12, abs=1e-12)


def test_catalog_cache_refreshes_after_add(rng):
    model = fm_init(4, 2, 0.1, sigma=0.5)
    catalog = Catalog()
    catalog.add("a", SparseVector(4, [2], [1.0]))
    ctx = SparseVector(4, [0], [1.0])
    assert len(score_all(model, EventContext(0, ctx), catalog)) == 1
    catalog.add("b", SparseVector(4, [3], [1.0]))
    scored = score_all(model, EventContext(0, ctx), catalog)
    assert len(scored) == 2
    assert scored.scores[1] == pytest.approx(fm_predict(model, SparseVector(4, [0, 3], [1.0, 1.0])))
    assert catalog.add("a") == 0 and len(catalog) == 2


def test_catalog_beyond_model_dimension_is_rejected():
    catalog = Catalog()
    catalog.add("a", SparseVector(6, [5], [1.0]))
    with pytest.raises(DimensionError):
        score_all(fm_init(4, 2, 0.1), EventContext(0, SparseVector(4, [0], [1.0])), catalog)


def test_mf_scores_are_dot_products():
    model = MfModel(3, 0.1, 0.0, init_sigma=0.5, seed=1)
    catalog = Catalog()
    for key in ("a", "b", "c"):
        catalog.add(key)
        model.ensure_item(key)
    model.ensure_user("u")
    scored = score_all(model, EventContext("u"), catalog)
    np.testing.assert_allclose(scored.scores, model.Q.matrix @ model.P["u"])


def test_empty_catalog_and_unknown_model():
    with pytest.raises(ValueError):
        score_all(MfModel(2, 0.1, 0.0), EventContext("u"), Catalog())
    catalog = Catalog()
    catalog.add("a")
    with pytest.raises(TypeError):
        score_all(object(), EventContext("u"), catalog)
