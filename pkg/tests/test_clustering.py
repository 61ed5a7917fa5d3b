import random

import pytest

from conftest import VOCAB, make_bag, random_bag
from oracles import naive_dbscan
from trafficdist.clustering import CLUS_EPS, NOISE, clus_score, dbscan
from trafficdist.corpus import Bag
from trafficdist.distributional import TermVector


def vec(**weights):
    return TermVector.from_weights({k: float(v) for k, v in weights.items()})


class TestDbscan:
    def test_all_identical_points_one_cluster(self):
        points = [vec(a=1, b=2)] * 6
        out = dbscan(points, eps=0.4, min_pts=2)
        assert set(out.labels) == {0}
        assert out.clusters == {0: list(range(6))}

    def test_two_disjoint_groups_two_clusters(self):
        points = [vec(a=1)] * 3 + [vec(b=1)] * 3
        out = dbscan(points, eps=0.4, min_pts=2)
        assert out.labels == [0, 0, 0, 1, 1, 1]

    def test_isolated_point_is_noise(self):
        points = [vec(a=1)] * 3 + [vec(z=1)]
        out = dbscan(points, eps=0.4, min_pts=2)
        assert out.labels == [0, 0, 0, NOISE]

    def test_min_pts_one_makes_everything_core(self):
        points = [vec(a=1), vec(b=1), vec(c=1)]
        out = dbscan(points, eps=0.1, min_pts=1)
        assert out.labels == [0, 1, 2]

    def test_parameter_validation(self):
        with pytest.raises(ValueError):
            dbscan([vec(a=1)], eps=0.0, min_pts=2)
        with pytest.raises(ValueError):
            dbscan([vec(a=1)], eps=0.5, min_pts=0)

    def test_matches_naive_reference_on_random_instances(self):
        rng = random.Random(99)
        vocab = ["a", "b", "c", "d", "e"]
        for _ in range(100):
            n = 20
            sparse = []
            for _ in range(n):
                weights = {
                    t: rng.randint(1, 3)
                    for t in rng.sample(vocab, rng.randint(1, 3))
                }
                sparse.append(weights)
            eps = rng.uniform(0.1, 0.9)
            min_pts = rng.randint(1, 4)
            points = [TermVector.from_weights({k: float(v) for k, v in w.items()}) for w in sparse]
            dense = [[float(w.get(t, 0)) for t in vocab] for w in sparse]
            expected = naive_dbscan(dense, eps, min_pts)
            got = dbscan(points, eps=eps, min_pts=min_pts)
            assert got.labels == expected


class TestClusScore:
    def test_identical_bags_hit_cap(self):
        bag = make_bag("c", "a b", "a b", "c d", "e")
        assert clus_score(bag, bag) == pytest.approx(1.0 / CLUS_EPS)

    def test_disjoint_equal_sizes(self):
        g = make_bag("c", *(["alpha beta"] * 3 + ["gamma delta"] * 3))
        r = make_bag("c", *(["one two"] * 3 + ["three four"] * 3))
        # Every cluster pure: d(C) = 0.5 everywhere, score = 1/(0.5 + eps).
        assert clus_score(g, r) == pytest.approx(1.0 / (0.5 + CLUS_EPS))

    def test_mixing_ratio_reflected(self):
        g = make_bag("c", *["same text"] * 70)
        r = make_bag("c", *["same text"] * 30)
        # One cluster, p(B) = |R|/|B| = 0.3 and p(C) = 0.3, so d = 0.
        assert clus_score(g, r) == pytest.approx(1.0 / CLUS_EPS)

    def test_symmetric_for_equal_sizes(self, rng):
        for _ in range(10):
            g = random_bag(rng, "c", VOCAB, max_sentences=6)
            r = random_bag(rng, "c", VOCAB, max_sentences=6)
            m = min(len(g), len(r))
            g, r = Bag("c", g.items[:m]), Bag("c", r.items[:m])
            assert clus_score(g, r) == pytest.approx(clus_score(r, g), abs=1e-9)

    def test_score_bounds(self, rng):
        upper = 1.0 / CLUS_EPS
        lower = 1.0 / (1.0 + CLUS_EPS)
        for _ in range(20):
            g = random_bag(rng, "c", VOCAB)
            r = random_bag(rng, "c", VOCAB)
            score = clus_score(g, r)
            assert lower - 1e-9 <= score <= upper + 1e-9

    def test_noise_points_count_as_singletons(self):
        # One matching pair clusters; the lone extra text in each bag is
        # noise and must still contribute its purity deviation.
        g = make_bag("c", "a b", "a b", "zz qq")
        r = make_bag("c", "a b", "a b", "yy ww")
        # Cluster {a b} x4: p(C) = 0.5 = p(B), d = 0. Two singletons with
        # p(C) in {0, 1}: d = 0.5, weight 1/6 each.
        expected = 1.0 / (2 * 0.5 / 6 + CLUS_EPS)
        assert clus_score(g, r) == pytest.approx(expected)

    def test_order_and_origin_canonicalization(self, rng):
        for _ in range(10):
            g = random_bag(rng, "c", VOCAB)
            r = random_bag(rng, "c", VOCAB)
            g_rev = Bag("c", tuple(reversed(g.items)))
            assert clus_score(g, r) == clus_score(g_rev, r)
