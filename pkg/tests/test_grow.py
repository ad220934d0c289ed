import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from marg.grow import (
    GrowConfig,
    ThresholdPair,
    candidate_grid,
    color_distance,
    grow_region,
    promote_seed,
    segment,
)
from marg.imgio import sobel_edges
from marg.topology import NeighborSpec, Topology, neighbors

import oracles
from suites import blocky_image


def two_tone(H=16, W=16, left=100, right=200):
    img = np.full((H, W, 3), left, dtype=np.uint8)
    img[:, W // 2:] = right
    return img


def test_color_distance():
    assert color_distance((10, 20, 30), (10, 20, 30)) == 0
    assert color_distance((40, 20, 30), (10, 20, 30)) == 10
    assert color_distance((0, 0, 0), (255, 255, 255)) == 255


def test_threshold_pair_rejects_negatives():
    with pytest.raises(ValueError):
        ThresholdPair(-1, 0)


def test_candidate_grid():
    assert candidate_grid(64, 64, 1) == [(32, 32)]
    assert candidate_grid(64, 64, 2) == [(16, 16), (16, 48), (48, 16), (48, 48)]
    full = candidate_grid(8, 8, 8)
    assert len(set(full)) == 64
    assert full == [(h, w) for h in range(8) for w in range(8)]


@given(st.integers(1, 40), st.integers(1, 40), st.integers(1, 40))
def test_candidate_grid_matches_placement_formula(H, W, n):
    assert candidate_grid(H, W, n) == oracles.brute_grid(H, W, n)


def test_promotion_without_constraints():
    cfg = GrowConfig()
    covered = np.zeros((16, 16), dtype=bool)
    edges = np.zeros((16, 16), dtype=bool)
    assert promote_seed((5, 5), covered, edges, cfg, np.random.default_rng(0)) == (5, 5)


def test_promotion_rejects_window_overlap():
    cfg = GrowConfig(seed_window_k=2)
    covered = np.zeros((16, 16), dtype=bool)
    edges = np.zeros((16, 16), dtype=bool)
    covered[7, 7] = True
    rng = np.random.default_rng(0)
    assert promote_seed((5, 5), covered, edges, cfg, rng) is None
    assert promote_seed((4, 4), covered, edges, cfg, rng) == (4, 4)


def test_modular_window_sees_across_the_border():
    covered = np.zeros((16, 16), dtype=bool)
    covered[15, 15] = True
    edges = np.zeros_like(covered)
    rng = np.random.default_rng(0)
    assert promote_seed((0, 0), covered, edges, GrowConfig(topology=Topology.MODULAR), rng) is None
    assert promote_seed((0, 0), covered, edges, GrowConfig(topology=Topology.CARTESIAN), rng) == (0, 0)


def _walk(c, edges, seed, modular, max_steps=20):
    rng = np.random.default_rng(seed)
    H, W = edges.shape
    h, w = c
    for _ in range(max_steps):
        if not edges[h, w]:
            return (h, w)
        dh, dw = oracles.DIRS[int(rng.integers(8))]
        h, w = h + dh, w + dw
        if modular:
            h, w = h % H, w % W
        elif not (0 <= h < H and 0 <= w < W):
            return None
    return (h, w) if not edges[h, w] else None


def test_promotion_walks_off_a_thin_edge():
    edges = np.zeros((16, 16), dtype=bool)
    edges[:, 8] = True
    covered = np.zeros_like(edges)
    for seed in range(20):
        cfg = GrowConfig(prng_seed=seed)
        got = promote_seed((8, 8), covered, edges, cfg, np.random.default_rng(seed))
        assert got == _walk((8, 8), edges, seed, modular=True)
        assert got is not None and not edges[got]
        again = promote_seed((8, 8), covered, edges, cfg, np.random.default_rng(seed))
        assert again == got


def test_promotion_gives_up_after_max_steps():
    edges = np.ones((8, 8), dtype=bool)
    covered = np.zeros_like(edges)
    assert promote_seed((4, 4), covered, edges, GrowConfig(), np.random.default_rng(0)) is None


def test_cartesian_walk_can_exit():
    edges = np.ones((3, 3), dtype=bool)
    edges[1, 1] = True
    covered = np.zeros_like(edges)
    cfg = GrowConfig(topology=Topology.CARTESIAN, max_displacement_steps=100)
    assert promote_seed((0, 0), covered, edges, cfg, np.random.default_rng(1)) is None


def test_grow_constant_image():
    img = np.full((7, 9, 3), 42, dtype=np.uint8)
    for topo in Topology:
        r = grow_region(img, (3, 3), ThresholdPair(0, 0), topo)
        assert r.size == 63


def test_grow_two_tone_gives_left_half():
    img = two_tone()
    r = grow_region(img, (4, 2), ThresholdPair(10, 10))
    expect = np.zeros((16, 16), dtype=bool)
    expect[:, :8] = True
    assert (r.mask((16, 16)) == expect).all()
    oracle = oracles.flood_fill(img.tolist(), (4, 2), 10, 10, modular=True)
    assert set(zip(*np.nonzero(r.mask((16, 16))))) == oracle


def test_ramp_is_bounded_by_the_seed_threshold():
    img = np.repeat(np.arange(256, dtype=np.uint8)[None, :, None], 3, axis=2).repeat(2, axis=0)
    r = grow_region(img, (0, 0), ThresholdPair(255, 50))
    cols = set(np.flatnonzero(r.mask((2, 256)).any(axis=0)))
    assert cols == set(range(51))
    # per-pixel check: d_s binds exactly at |x - 0| <= 50
    assert r.size == 2 * 51


def test_grow_rejects_seed_outside():
    with pytest.raises(ValueError):
        grow_region(two_tone(), (16, 0), ThresholdPair(1, 1))


def test_segment_flat_image():
    img = np.full((64, 64, 3), 128, dtype=np.uint8)
    rs = segment(img, GrowConfig())
    assert rs.n_regions == 1 and rs.covered.all()


def test_segment_two_tone():
    rs = segment(two_tone(64, 64), GrowConfig(thresholds=ThresholdPair(5, 5)))
    assert rs.n_regions == 2
    assert rs.covered.all()
    sizes = sorted(r.size for r in rs.regions)
    assert sizes == [2048, 2048]


def test_zero_thresholds_give_single_pixels():
    img = np.arange(8 * 8 * 3, dtype=np.uint8).reshape(8, 8, 3)
    # a linear ramp is all edge, so promotion is bypassed with an empty edge map
    no_edges = np.zeros((8, 8), dtype=bool)
    cfg = GrowConfig(ThresholdPair(0, 0), Topology.CARTESIAN, seed_grid=8, seed_window_k=2)
    rs = segment(img, cfg, edges=no_edges)
    assert all(r.size == 1 for r in rs.regions)
    assert rs.covered.sum() == rs.n_regions
    # radius-2 windows admit every third candidate along each axis
    assert [r.seed for r in rs.regions] == [(h, w) for h in (0, 3, 6) for w in (0, 3, 6)]
    # on the torus, row/column 6 windows reach back to 0
    mod = segment(img, GrowConfig(ThresholdPair(0, 0), Topology.MODULAR, seed_grid=8), edges=no_edges)
    assert [r.seed for r in mod.regions] == [(0, 0), (0, 3), (3, 0), (3, 3)]


def test_random_seeds_allow_duplicates():
    img = np.full((4, 4, 3), 9, dtype=np.uint8)
    rs = segment(img, GrowConfig(seed_strategy="random", n_random_seeds=5))
    assert rs.n_regions == 5
    assert all(r.size == 16 for r in rs.regions)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(0, 30), st.integers(0, 30),
       st.sampled_from(list(Topology)), st.sampled_from(["grid", "random"]))
def test_segment_matches_flood_fill_oracle(seed, tl, ts, topo, strategy):
    rng = np.random.default_rng(seed)
    img = blocky_image(rng, 10)
    cfg = GrowConfig(ThresholdPair(tl, ts), topo, seed_grid=int(rng.integers(1, 12)),
                     seed_window_k=int(rng.integers(2, 4)), prng_seed=seed % 1000,
                     seed_strategy=strategy, n_random_seeds=int(rng.integers(1, 8)))
    rs = segment(img, cfg)
    want = oracles.brute_segment(img, tl, ts, topo is Topology.MODULAR, grid=cfg.seed_grid,
                                 k=cfg.seed_window_k, prng_seed=cfg.prng_seed,
                                 strategy=strategy, n_random=cfg.n_random_seeds)
    W = img.shape[1]
    got = [(r.seed, frozenset((int(p) // W, int(p) % W) for p in r.pixels)) for r in rs.regions]
    assert got == want


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from(list(Topology)))
def test_regions_are_connected_and_seed_consistent(seed, topo):
    rng = np.random.default_rng(seed)
    img = blocky_image(rng, 12)
    tp = ThresholdPair(int(rng.integers(0, 40)), int(rng.integers(0, 40)))
    rs = segment(img, GrowConfig(tp, topo, seed_grid=4))
    H, W = img.shape[:2]
    spec = NeighborSpec(1, topo)
    for r in rs.regions:
        px = {(int(p) // W, int(p) % W) for p in r.pixels}
        assert r.seed in px
        s = img[r.seed].astype(int)
        for p in px:
            assert np.abs(img[p].astype(int) - s).sum() <= 3 * tp.tau_s
        # reachable from the seed inside the region
        seen, stack = {r.seed}, [r.seed]
        while stack:
            q = stack.pop()
            for n in neighbors(q, spec, H, W):
                if n in px and n not in seen:
                    seen.add(n)
                    stack.append(n)
        assert seen == px


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_growth_is_monotone_in_both_thresholds(seed):
    rng = np.random.default_rng(seed)
    img = blocky_image(rng, 14)
    H, W = img.shape[:2]
    s = (int(rng.integers(H)), int(rng.integers(W)))
    topo = Topology.MODULAR if seed % 2 else Topology.CARTESIAN
    base = int(rng.integers(0, 40))
    prev = None
    for ts in range(0, 90, 6):
        cur = set(grow_region(img, s, ThresholdPair(base, ts), topo).pixels.tolist())
        assert prev is None or prev <= cur
        prev = cur
    prev = None
    for tl in range(0, 90, 6):
        cur = set(grow_region(img, s, ThresholdPair(tl, base), topo).pixels.tolist())
        assert prev is None or prev <= cur
        prev = cur


def test_segment_is_deterministic():
    img = blocky_image(np.random.default_rng(3), 16)
    cfg = GrowConfig(ThresholdPair(6, 12), prng_seed=7, seed_grid=6)
    a, b = segment(img, cfg), segment(img, cfg)
    assert [(r.seed, r.pixels.tolist()) for r in a.regions] == [(r.seed, r.pixels.tolist()) for r in b.regions]


def test_precomputed_edges_are_equivalent():
    img = blocky_image(np.random.default_rng(5), 16)
    cfg = GrowConfig(ThresholdPair(6, 12), seed_grid=6)
    a = segment(img, cfg)
    b = segment(img, cfg, edges=sobel_edges(img))
    assert [r.pixels.tolist() for r in a.regions] == [r.pixels.tolist() for r in b.regions]


def test_config_validation():
    with pytest.raises(ValueError):
        GrowConfig(seed_window_k=1)
    with pytest.raises(ValueError):
        GrowConfig(seed_strategy="spiral")
