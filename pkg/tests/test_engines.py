import numpy as np
import pytest

import oracle
from conftest import make_uniform_fluid, strip_boundary
from sphbench.engines import (EngineConfig, compute_forces_cellpairs,
                              compute_forces_gather, initial_slice_bounds,
                              make_engine, merge_accumulators,
                              rebalance_slices)


def run_config(frame, cfg):
    eng = make_engine(cfg)
    return eng.compute(frame["system"], frame["derived"], frame["grid"],
                       frame["cindex"], frame["params"], ranges=frame["ranges"])


# ------------------------------------------------------------- config

def test_config_rejects_gather_with_symmetry():
    with pytest.raises(ValueError, match="symmetry"):
        EngineConfig(engine="gather", symmetry=True).validated()


def test_config_rejects_symmetric_threading_without_symmetry():
    with pytest.raises(ValueError, match="requires symmetry"):
        EngineConfig(symmetry=False, threading="symmetric").validated()


def test_config_asymmetric_forces_symmetry_off():
    cfg = EngineConfig(symmetry=True, threading="asymmetric").validated()
    assert cfg.symmetry is False


@pytest.mark.parametrize("bad", [
    dict(engine="cuda"),
    dict(lane_batch=2),
    dict(threading="farm"),
    dict(thread_count=0),
    dict(block_of_cells=0),
    dict(derived_mode="live"),
    dict(engine="gather", symmetry=False, gather_variant="fastcellsh"),
])
def test_config_rejects_invalid(bad):
    with pytest.raises(ValueError):
        EngineConfig(**bad).validated()


def test_config_tags_are_unique_across_matrix():
    from sphbench.bench.harness import standard_matrix
    tags = [c.validated().tag for c in standard_matrix()]
    assert len(set(tags)) == len(tags)


# ------------------------------------------------------------- basics

def test_single_particle_has_no_pairs():
    frame = make_uniform_fluid(1, h=0.05)
    out = run_config(frame, EngineConfig())
    assert out.stats.true_pairs == 0
    assert np.all(out.accel == 0.0) and np.all(out.drho_dt == 0.0)


def test_two_particles_symmetry_on_off_agree():
    frame = make_uniform_fluid(2, box=0.05, h=0.05, seed=1)
    on = run_config(frame, EngineConfig(symmetry=True))
    off = run_config(frame, EngineConfig(symmetry=False))
    assert on.stats.true_pairs == 1 == off.stats.true_pairs
    assert oracle.rel_linf(on.accel, off.accel) < 1e-6


def test_boundary_particles_never_accelerate(frame_small):
    moving = dict(frame_small)
    moving["system"] = frame_small["system"].copy()
    nb = moving["system"].count_boundary
    rng = np.random.default_rng(21)
    moving["system"].vel[nb:] = rng.normal(0, 0.5, (moving["system"].count_fluid, 3)
                                           ).astype(np.float32)
    out = run_config(moving, EngineConfig())
    assert np.all(out.accel[:nb] == 0.0)
    assert np.any(out.drho_dt[:nb] != 0.0)
    assert np.isfinite(out.accel).all() and np.isfinite(out.drho_dt).all()


def test_engine_rejects_mismatched_grid(frame_small):
    import copy
    bad = copy.deepcopy(frame_small["grid"])
    bad.cell_of = bad.cell_of[:-1]
    with pytest.raises(ValueError, match="mismatch"):
        make_engine(EngineConfig()).compute(
            frame_small["system"], frame_small["derived"], bad,
            frame_small["cindex"], frame_small["params"])


def test_stats_invariants_hold_for_all_strategies(frame_small):
    for cfg in [EngineConfig(),
                EngineConfig(symmetry=False),
                EngineConfig(symmetry=False, threading="asymmetric", thread_count=2),
                EngineConfig(threading="symmetric", thread_count=2),
                EngineConfig(threading="slices", thread_count=2)]:
        out = run_config(frame_small, cfg)
        out.stats.validate()


# ------------------------------------------------------------- counters

def test_counters_match_bruteforce_oracle(frame_small):
    ref = oracle.brute_force(frame_small["system"], frame_small["params"])
    on = run_config(frame_small, EngineConfig(symmetry=True))
    off = run_config(frame_small, EngineConfig(symmetry=False))
    assert on.stats.true_pairs == ref["true_pairs"]
    assert off.stats.true_pairs == ref["true_pairs"]
    assert on.stats.force_evals == on.stats.true_pairs
    assert off.stats.force_evals == 2 * off.stats.true_pairs
    assert on.stats.ff_force_evals == ref["ff_pairs"]
    assert off.stats.ff_force_evals == 2 * ref["ff_pairs"]


def test_ff_evals_halve_with_symmetry_everywhere(frame_small, frame_small_n2):
    off = run_config(frame_small, EngineConfig(symmetry=False))
    on = run_config(frame_small, EngineConfig(symmetry=True))
    assert 2 * on.stats.ff_force_evals == off.stats.ff_force_evals
    gat = run_config(frame_small_n2, EngineConfig(engine="gather", symmetry=False))
    assert gat.stats.ff_force_evals == off.stats.ff_force_evals


def test_gather_variants_same_true_pairs_fewer_candidates(frame_small, frame_small_n2):
    slow_h = run_config(frame_small, EngineConfig(
        engine="gather", symmetry=False, gather_variant="slowcellsh"))
    slow_half = run_config(frame_small_n2, EngineConfig(
        engine="gather", symmetry=False, gather_variant="slowcellshalf"))
    fast_half = run_config(frame_small_n2, EngineConfig(
        engine="gather", symmetry=False, gather_variant="fastcellshalf"))
    assert slow_h.stats.true_pairs == slow_half.stats.true_pairs \
        == fast_half.stats.true_pairs
    assert slow_half.stats.candidate_pairs < slow_h.stats.candidate_pairs
    assert fast_half.stats.candidate_pairs == slow_half.stats.candidate_pairs


def test_candidate_ratio_on_uniform_data():
    n = 120_000
    f1 = make_uniform_fluid(n, h=0.05, n_subdiv=1)
    f2 = make_uniform_fluid(n, h=0.05, n_subdiv=2)
    c1 = run_config(f1, EngineConfig(symmetry=False)).stats.candidate_pairs
    c2 = run_config(f2, EngineConfig(symmetry=False)).stats.candidate_pairs
    assert 1.55 <= c1 / c2 <= 1.90


# ------------------------------------------------------------- physics agreement

ALL_CONFIGS_N1 = [
    EngineConfig(symmetry=True, lane_batch=1),
    EngineConfig(symmetry=True, lane_batch=4),
    EngineConfig(symmetry=False, lane_batch=1),
    EngineConfig(symmetry=False, lane_batch=4),
    EngineConfig(symmetry=False, lane_batch=1, threading="asymmetric", thread_count=2),
    EngineConfig(symmetry=False, lane_batch=4, threading="asymmetric", thread_count=3),
    EngineConfig(symmetry=True, lane_batch=1, threading="symmetric", thread_count=2),
    EngineConfig(symmetry=True, lane_batch=4, threading="symmetric", thread_count=3),
    EngineConfig(symmetry=True, lane_batch=1, threading="slices", thread_count=2),
    EngineConfig(symmetry=True, lane_batch=4, threading="slices", thread_count=3),
    EngineConfig(symmetry=True, derived_mode="recomputed"),
    EngineConfig(engine="gather", symmetry=False, gather_variant="slowcellsh"),
]

ALL_CONFIGS_N2 = [
    EngineConfig(engine="gather", symmetry=False, gather_variant="slowcellshalf"),
    EngineConfig(engine="gather", symmetry=False, gather_variant="fastcellshalf"),
    EngineConfig(engine="gather", symmetry=False, gather_variant="fastcellshalf",
                 derived_mode="recomputed", thread_count=2),
    EngineConfig(symmetry=True),
]


def test_every_configuration_matches_bruteforce(frame_small, frame_small_n2):
    for frame, configs in ((frame_small, ALL_CONFIGS_N1),
                           (frame_small_n2, ALL_CONFIGS_N2)):
        ref = oracle.brute_force(frame["system"], frame["params"])
        for cfg in configs:
            out = run_config(frame, cfg)
            assert oracle.rel_linf(out.accel, ref["accel"]) < 1e-4, cfg
            assert oracle.rel_linf(out.drho_dt, ref["drho_dt"]) < 1e-4, cfg
            assert out.stats.true_pairs == ref["true_pairs"], cfg


def test_lane_batching_matches_single_lane(frame_small):
    l1 = run_config(frame_small, EngineConfig(lane_batch=1))
    l4 = run_config(frame_small, EngineConfig(lane_batch=4))
    assert oracle.rel_linf(l1.accel, l4.accel) < 1e-5
    assert l1.stats.true_pairs == l4.stats.true_pairs


def test_gather_matches_cellpairs_reference(frame_small):
    ref = run_config(frame_small, EngineConfig(symmetry=True))
    gat = run_config(frame_small, EngineConfig(engine="gather", symmetry=False,
                                               gather_variant="slowcellsh"))
    assert oracle.rel_linf(gat.accel, ref.accel) < 1e-5
    assert oracle.rel_linf(gat.drho_dt, ref.drho_dt) < 1e-5


def test_derived_modes_agree_bitwise_and_change_bytes(frame_small):
    pre = run_config(frame_small, EngineConfig(derived_mode="precomputed"))
    rec = run_config(frame_small, EngineConfig(derived_mode="recomputed"))
    assert np.array_equal(pre.accel, rec.accel)
    assert np.array_equal(pre.drho_dt, rec.drho_dt)
    assert pre.stats.neighbor_bytes == 40 and rec.stats.neighbor_bytes == 32
    assert rec.stats.est_read_bytes == 32 * rec.stats.force_evals


def test_momentum_conservation_without_boundaries(frame_small):
    fluid = strip_boundary(frame_small)
    m = fluid["system"].mass_fluid
    for cfg in (EngineConfig(symmetry=True),
                EngineConfig(symmetry=False),
                EngineConfig(engine="gather", symmetry=False,
                             gather_variant="slowcellsh")):
        out = run_config(fluid, cfg)
        total = (m * out.accel).sum(axis=0)
        scale = (m * np.abs(out.accel)).sum()
        assert np.abs(total).max() <= 1e-3 * scale


def test_zero_boundary_frame_boundary_pass_is_noop():
    frame = make_uniform_fluid(500, h=0.08)
    out = run_config(frame, EngineConfig(engine="gather", symmetry=False,
                                         gather_variant="slowcellsh"))
    ref = run_config(frame, EngineConfig(symmetry=True))
    assert oracle.rel_linf(out.accel, ref.accel) < 1e-5


# ------------------------------------------------------------- threading

def test_slices_cross_slab_pairs_are_one_sided():
    frame = make_uniform_fluid(4000, h=0.08, seed=9)
    single = run_config(frame, EngineConfig(symmetry=True))
    sliced = run_config(frame, EngineConfig(threading="slices", thread_count=3))
    assert sliced.stats.true_pairs == single.stats.true_pairs
    assert sliced.stats.force_evals > sliced.stats.true_pairs
    assert sliced.stats.force_evals < 2 * sliced.stats.true_pairs
    assert oracle.rel_linf(sliced.accel, single.accel) < 1e-12
    assert len(sliced.stats.per_slice_seconds) == 3


def test_symmetric_threading_is_bit_deterministic(frame_small):
    eng = make_engine(EngineConfig(threading="symmetric", thread_count=3))
    a = eng.compute(frame_small["system"], frame_small["derived"],
                    frame_small["grid"], frame_small["cindex"], frame_small["params"])
    b = eng.compute(frame_small["system"], frame_small["derived"],
                    frame_small["grid"], frame_small["cindex"], frame_small["params"])
    assert np.array_equal(a.accel, b.accel)
    assert np.array_equal(a.drho_dt, b.drho_dt)


def test_gather_output_independent_of_thread_count(frame_small_n2):
    outs = [run_config(frame_small_n2,
                       EngineConfig(engine="gather", symmetry=False,
                                    thread_count=t))
            for t in (1, 2, 5)]
    for other in outs[1:]:
        assert np.array_equal(outs[0].accel, other.accel)
        assert np.array_equal(outs[0].drho_dt, other.drho_dt)
        assert np.array_equal(outs[0].visc_dt, other.visc_dt)


def test_asymmetric_threading_matches_single(frame_small):
    single = run_config(frame_small, EngineConfig(symmetry=False))
    dyn = run_config(frame_small, EngineConfig(symmetry=False,
                                               threading="asymmetric",
                                               thread_count=4,
                                               block_of_cells=7))
    assert np.array_equal(single.accel, dyn.accel)
    assert single.stats.true_pairs == dyn.stats.true_pairs


def test_functional_facades(frame_small, frame_small_n2):
    out = compute_forces_cellpairs(
        frame_small["system"], frame_small["derived"], frame_small["grid"],
        frame_small["cindex"], frame_small["params"], EngineConfig())
    assert out.stats.true_pairs > 0
    out2 = compute_forces_gather(
        frame_small_n2["system"], frame_small_n2["derived"],
        frame_small_n2["grid"], frame_small_n2["cindex"],
        frame_small_n2["ranges"], frame_small_n2["params"],
        EngineConfig(engine="gather", symmetry=False))
    assert out2.stats.true_pairs == out.stats.true_pairs


def test_gather_requires_matching_subdiv_and_ranges(frame_small, frame_small_n2):
    with pytest.raises(ValueError, match="n_subdiv"):
        run_config(frame_small, EngineConfig(engine="gather", symmetry=False,
                                             gather_variant="fastcellshalf"))
    eng = make_engine(EngineConfig(engine="gather", symmetry=False,
                                   gather_variant="fastcellshalf"))
    with pytest.raises(ValueError, match="ranges"):
        eng.compute(frame_small_n2["system"], frame_small_n2["derived"],
                    frame_small_n2["grid"], frame_small_n2["cindex"],
                    frame_small_n2["params"], ranges=None)


# ------------------------------------------------------------- merge / slices

def test_merge_single_accumulator_is_identity():
    a = np.random.default_rng(1).normal(size=(100, 3))
    assert np.array_equal(merge_accumulators([a]), a)


def test_merge_equal_shares_recover_total():
    x = np.random.default_rng(2).normal(size=(50, 3))
    merged = merge_accumulators([x / 4] * 4)
    np.testing.assert_allclose(merged, x, rtol=1e-6)


def test_merge_matches_fixed_order_sequential_sum_exactly():
    rng = np.random.default_rng(3)
    accs = [rng.normal(size=200_000) for _ in range(5)]
    seq = accs[0].copy()
    for a in accs[1:]:
        seq += a
    assert np.array_equal(merge_accumulators(accs, workers=1), seq)
    assert np.array_equal(merge_accumulators(accs, workers=4, chunk=1 << 12), seq)


def test_merge_rejects_mismatched_lengths():
    with pytest.raises(ValueError, match="mismatch"):
        merge_accumulators([np.zeros(3), np.zeros(4)])


def test_rebalance_equal_times_keeps_bounds():
    bounds = np.array([0, 8, 16, 24, 32])
    new = rebalance_slices(bounds, [1.0, 1.0, 1.0, 1.0])
    assert np.array_equal(new, bounds)


def test_rebalance_shrinks_slow_slice_proportionally():
    # Equal-time quantiles of the piecewise-linear cumulative cost: with
    # times (3,1,1,1) over 8-wide slabs the targets 1.5/3.0/4.5 land at
    # columns 4, 8 and 20, halving the slow slab's share.  Each new slab then
    # carries exactly total/S = 1.5 under the uniform per-column model.
    bounds = np.array([0, 8, 16, 24, 32])
    new = rebalance_slices(bounds, [3.0, 1.0, 1.0, 1.0])
    assert list(new) == [0, 4, 8, 20, 32]
    widths = np.diff(new)
    per_col = np.repeat([3 / 8, 1 / 8, 1 / 8, 1 / 8], 8)
    carried = [per_col[a:b].sum() for a, b in zip(new[:-1], new[1:])]
    np.testing.assert_allclose(carried, 1.5)
    assert widths[0] == 4


def test_rebalance_min_width_clamp():
    bounds = np.array([0, 1, 2, 3, 4, 5, 6, 7, 8])
    new = rebalance_slices(bounds, [5.0, 1, 1, 1, 1, 1, 1, 1])
    assert np.all(np.diff(new) >= 1)
    assert new[0] == 0 and new[-1] == 8
    new8 = rebalance_slices(np.array([0, 1, 2, 3, 4, 5, 6, 7, 8]),
                            [9, 1, 1, 1, 1, 1, 1, 1])
    assert list(np.diff(new8)) == [1] * 8


def test_rebalance_rejects_too_few_cells():
    with pytest.raises(ValueError, match="fewer cells"):
        initial_slice_bounds(3, 4)
    with pytest.raises(ValueError, match="fewer cells"):
        rebalance_slices(np.array([0, 0, 1]), [1.0, 1.0])
    with pytest.raises(ValueError, match="positive"):
        rebalance_slices(np.array([0, 4, 8]), [1.0, 0.0])
