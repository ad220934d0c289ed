import numpy as np
import pytest

from marg.adapt import SweepReport, SweepSpec, adaptive_thresholds, coverage, plateau_index
from marg.grow import GrowConfig, RegionSet, ThresholdPair, segment


def test_coverage_values():
    cov = np.zeros((64, 64), dtype=bool)
    assert coverage(RegionSet([], cov)) == 0.0
    cov[:32] = True
    assert coverage(RegionSet([], cov)) == 0.5
    assert coverage(RegionSet([], np.ones((3, 3), dtype=bool))) == 1.0


def test_plateau_rule():
    # two consecutive steps below eps; tau* is the first value of the plateau
    assert plateau_index([0.1, 0.5, 0.8, 0.801, 0.802], 0.005, 2) == (4, 2)
    assert plateau_index([0.1, 0.5, 0.8, 0.801, 0.9], 0.005, 2) is None
    assert plateau_index([0.1, 0.2, 0.3, 0.3], 0.005, 2) is None
    assert plateau_index([0.1, 0.2, 0.2, 0.2], 0.005, 1) == (2, 1)


def test_full_coverage_stops_at_once():
    assert plateau_index([1.0], 0.005, 2) == (0, 0)
    assert plateau_index([0.3, 0.6, 1.0], 0.005, 2) == (2, 2)
    assert plateau_index([0.3, 0.998, 1.0], 0.005, 2) == (2, 1)


def test_flat_image_single_point():
    img = np.full((32, 32, 3), 90, dtype=np.uint8)
    rep = adaptive_thresholds(img, GrowConfig())
    assert rep.chosen == ThresholdPair(2, 2)
    assert len(rep.seed_sweep) == 1 and len(rep.local_sweep) == 1
    assert rep.seed_sweep[0].coverage == 1.0
    assert rep.converged_s and rep.converged_l


def test_two_tone_stays_below_the_split():
    img = np.full((16, 16, 3), 50, dtype=np.uint8)
    img[:, 8:] = 150
    rep = adaptive_thresholds(img, GrowConfig(seed_grid=8))
    assert rep.chosen.tau_s < 100
    rs = segment(img, GrowConfig(rep.chosen, seed_grid=8))
    assert coverage(rs) == 1.0
    for r in rs.regions:
        cols = set(int(p) % 16 for p in r.pixels)
        assert cols <= set(range(8)) or cols <= set(range(8, 16))


def test_three_grays_stay_separate():
    img = np.zeros((18, 18, 3), dtype=np.uint8)
    img[:, 6:12] = 100
    img[:, 12:] = 200
    rep = adaptive_thresholds(img, GrowConfig(seed_grid=9), SweepSpec(plateau_eps=0.005))
    assert rep.chosen.tau_s < 100
    rs = segment(img, GrowConfig(rep.chosen, seed_grid=9))
    for r in rs.regions:
        vals = {int(img.reshape(-1, 3)[p, 0]) for p in r.pixels}
        assert len(vals) == 1


def _recompute(img, cfg, spec):
    """Full grid, no early exit; then apply the plateau rule by hand."""
    def run(pairs, taus):
        covs = [coverage(segment(img, cfg.with_thresholds(*p))) for p in pairs]
        for j in range(len(covs)):
            if covs[j] >= 1.0:
                k = j
                while k > 0 and covs[k] - covs[k - 1] < spec.plateau_eps:
                    k -= 1
                return taus[k], covs[: j + 1]
            if j >= spec.plateau_window and all(
                    covs[i] - covs[i - 1] < spec.plateau_eps for i in range(j - spec.plateau_window + 1, j + 1)):
                return taus[j - spec.plateau_window], covs[: j + 1]
        return taus[-1], covs
    ts, s_covs = run([(spec.tau_l_during_s_sweep, t) for t in spec.tau_s_grid], spec.tau_s_grid)
    tl, l_covs = run([(t, ts) for t in spec.tau_l_grid], spec.tau_l_grid)
    return ThresholdPair(tl, ts), s_covs, l_covs


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_sweep_matches_independent_recompute(seed):
    rng = np.random.default_rng(seed)
    img = np.clip(np.linspace(0, 200, 24)[None, :, None] + rng.integers(-6, 7, (24, 24, 3)), 0, 255).astype(np.uint8)
    cfg = GrowConfig(seed_grid=6)
    spec = SweepSpec()
    rep = adaptive_thresholds(img, cfg, spec)
    chosen, s_covs, l_covs = _recompute(img, cfg, spec)
    assert rep.chosen == chosen
    assert [p.coverage for p in rep.seed_sweep] == s_covs
    assert [p.coverage for p in rep.local_sweep] == l_covs


def test_parallel_equals_serial():
    rng = np.random.default_rng(4)
    img = np.clip(np.linspace(0, 220, 32)[None, :, None] + rng.integers(-8, 9, (32, 32, 3)), 0, 255).astype(np.uint8)
    cfg = GrowConfig(seed_grid=8)
    serial = adaptive_thresholds(img, cfg, threads=1)
    for t in (2, 3, 8):
        assert adaptive_thresholds(img, cfg, threads=t) == serial


def test_no_plateau_uses_last_value():
    # two grid points cannot hold a two-step plateau
    img = np.linspace(0, 255, 40).astype(np.uint8)[None, :, None].repeat(40, 0).repeat(3, 2)
    spec = SweepSpec(tau_s_grid=(2, 4), tau_l_grid=(2, 4))
    rep = adaptive_thresholds(img, GrowConfig(seed_strategy="random", n_random_seeds=3), spec)
    assert not rep.converged_s and not rep.converged_l
    assert rep.chosen == ThresholdPair(4, 4)
    assert len(rep.seed_sweep) == 2


def test_report_round_trip():
    img = np.full((8, 8, 3), 5, dtype=np.uint8)
    rep = adaptive_thresholds(img, GrowConfig(seed_grid=2))
    assert SweepReport.from_dict(rep.to_dict()) == rep


def test_bad_grids():
    with pytest.raises(ValueError):
        SweepSpec(tau_s_grid=())
    with pytest.raises(ValueError):
        SweepSpec(tau_l_grid=(4, 2))
