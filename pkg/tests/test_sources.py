import math

import mpmath
import numpy as np
import pytest
from scipy import stats

from bosonsim.core import (
    FockConfiguration,
    InvalidInputError,
    OutputDistribution,
    ResourceLimitError,
    standard_input,
    total_variation_distance,
)
from bosonsim.interferometer import haar_unitary
from bosonsim.sampler import output_distribution
from bosonsim.sources import (
    DetectorKind,
    ErrorKind,
    HeraldDetector,
    NoiseModel,
    SourceConfig,
    SpdcSource,
    apply_input_noise,
    hardness_threshold_check,
    herald_acceptance_probability,
    heralded_idler_distribution,
    multiplex_sources,
    scattershot_run,
    scattershot_sample,
    simulate_input_noise,
    spdc_pair_distribution,
    undercount_bound,
    undercount_simulation,
)

from oracles import sigma_binomial


def test_spdc_vacuum():
    assert spdc_pair_distribution(SpdcSource(0.0)) == {0: 1.0}


def test_spdc_half_squeezing_values():
    d = spdc_pair_distribution(SpdcSource(0.5))
    for k, expected in [(0, 0.75), (1, 0.1875), (2, 0.046875)]:
        assert abs(d[k] - expected) <= 1e-12


@pytest.mark.parametrize("chi", [0.0, 0.1, 0.5, 0.9, 0.99])
def test_spdc_normalized_and_tail_bounded(chi):
    src = SpdcSource(chi)
    assert src.tail_mass() <= 1e-12
    assert abs(math.fsum(spdc_pair_distribution(src).values()) - 1) <= 1e-12


def test_spdc_validation():
    with pytest.raises(InvalidInputError):
        SpdcSource(1.0)
    with pytest.raises(InvalidInputError):
        SpdcSource(0.5, cutoff=3)
    assert SpdcSource(0.5, cutoff=100).cutoff == 100


def _mc_herald(chi, det, trials, seed):
    """Monte-Carlo: draw pair numbers, detect each signal photon, condition."""
    rng = np.random.default_rng(seed)
    k = rng.geometric(1 - chi**2, trials) - 1
    detected = rng.binomial(k, det.efficiency)
    fired = detected >= 1 if det.kind is DetectorKind.BUCKET else detected == 1
    return k[fired]


@pytest.mark.parametrize("chi", [0.1, 0.5, 0.9])
def test_pnr_unit_efficiency_gives_single_photon(chi):
    assert heralded_idler_distribution(SpdcSource(chi), HeraldDetector(1.0, "pnr")) == {1: 1.0}


def test_bucket_unit_efficiency_conditional():
    d = heralded_idler_distribution(SpdcSource(0.5), HeraldDetector(1.0, "bucket"))
    assert d[1] == pytest.approx(0.1875 / 0.25, abs=1e-12)
    idler = _mc_herald(0.5, HeraldDetector(1.0, "bucket"), 100_000, 3)
    assert abs(np.mean(idler == 1) - d[1]) <= 3 * sigma_binomial(d[1], len(idler))


@pytest.mark.parametrize("kind", ["bucket", "pnr"])
def test_low_efficiency_matches_monte_carlo(kind):
    det = HeraldDetector(0.05, kind)
    d = heralded_idler_distribution(SpdcSource(0.6), det)
    idler = _mc_herald(0.6, det, 400_000, 11)
    for k in (1, 2, 3):
        assert abs(np.mean(idler == k) - d[k]) <= 3 * sigma_binomial(d[k], len(idler))


def test_zero_efficiency_limit_is_k_weighted():
    src = SpdcSource(0.6)
    pk = spdc_pair_distribution(src)
    limit = heralded_idler_distribution(src, HeraldDetector(0.0, "bucket"))
    z = math.fsum(k * p for k, p in pk.items())
    for k in range(1, 5):
        assert limit[k] == pytest.approx(k * pk[k] / z, rel=1e-12)
    near = heralded_idler_distribution(src, HeraldDetector(1e-7, "bucket"))
    assert near[2] == pytest.approx(limit[2], rel=1e-5)


@pytest.mark.parametrize("chi", [0.2, 0.7])
@pytest.mark.parametrize("det", [HeraldDetector(0.3, "bucket"), HeraldDetector(0.8, "pnr")])
def test_conditionals_normalized(chi, det):
    assert abs(math.fsum(heralded_idler_distribution(SpdcSource(chi), det).values()) - 1) <= 1e-12


def test_herald_impossible_without_pairs():
    with pytest.raises(InvalidInputError):
        heralded_idler_distribution(SpdcSource(0.0), HeraldDetector(1.0))


def test_multiplex_certain_heralds():
    res = multiplex_sources(10, 4, 1.0, seed=2)
    assert res.success and res.routed == (0, 1, 2, 3)


def test_multiplex_routes_lowest_heralded():
    res = multiplex_sources(30, 3, 0.5, seed=7)
    assert res.success
    assert res.routed == res.heralded[:3]


def test_multiplex_single_source_rate():
    q, trials = 0.37, 10_000
    rng = np.random.default_rng(0)
    wins = sum(multiplex_sources(1, 1, q, rng).success for _ in range(trials))
    assert abs(wins / trials - q) <= 3 * sigma_binomial(q, trials)


def test_multiplex_binomial_tail():
    trials = 10_000
    tail = sum(math.comb(20, k) * 0.3**k * 0.7 ** (20 - k) for k in range(4, 21))
    rng = np.random.default_rng(1)
    wins = sum(multiplex_sources(20, 4, 0.3, rng).success for _ in range(trials))
    assert abs(wins / trials - tail) <= 3 * sigma_binomial(tail, trials)


def test_multiplex_validation():
    with pytest.raises(InvalidInputError):
        multiplex_sources(2, 3, 0.5, 0)


def test_scattershot_faint_source_single_photon():
    u = haar_unitary(4, 6)
    src = [SpdcSource(0.05)] * 4
    t, s = scattershot_run(u, src, HeraldDetector(1.0, "pnr"), seed=5, n=1)
    assert len(t) == 1 and s.total() == 1
    res = scattershot_sample(u, src, HeraldDetector(1.0, "pnr"), 4000, seed=2, n=1)
    j = 2
    outs = [o for t, o in zip(res.heralded, res.outputs) if t == (j,)]
    ref = output_distribution(u, FockConfiguration.from_modes([j], 4))
    emp = OutputDistribution.from_samples(outs, 1, 4)
    assert total_variation_distance(ref, emp) < 3 * math.sqrt(4 / len(outs))


def test_scattershot_conditional_outputs_match_boson_sampling():
    m, u = 5, haar_unitary(5, 12)
    res = scattershot_sample(u, [SpdcSource(0.4)] * m, HeraldDetector(0.9, "pnr"), 30_000, seed=4, n=2)
    groups = {}
    for t, s in zip(res.heralded, res.outputs):
        groups.setdefault(t, []).append(s)
    assert len(groups) == math.comb(m, 2)
    for t, outs in groups.items():
        ref = output_distribution(u, FockConfiguration.from_modes(t, m))
        emp = OutputDistribution.from_samples(outs, 2, m)
        assert total_variation_distance(ref, emp) < 3 * math.sqrt(len(ref) / len(outs))


def test_scattershot_herald_count_statistics():
    m = 4
    src, det = SpdcSource(0.5), HeraldDetector(0.7, "pnr")
    res = scattershot_sample(haar_unitary(m, 1), [src] * m, det, 20_000, seed=8)
    p0, p1 = herald_acceptance_probability(src, det)
    r = p1 / (p0 + p1)
    weights = np.array([math.comb(m, k) * r**k * (1 - r) ** (m - k) for k in range(1, m + 1)])
    expected = weights / weights.sum()
    sizes = np.array([len(t) for t in res.heralded])
    for k in range(1, m + 1):
        f = expected[k - 1]
        assert abs(np.mean(sizes == k) - f) <= 3 * sigma_binomial(f, len(sizes))


def test_scattershot_gives_up():
    with pytest.raises(ResourceLimitError):
        scattershot_sample(np.eye(2), [SpdcSource(1e-9)] * 2, HeraldDetector(1.0), 1, seed=0, max_retries=1000)
    with pytest.raises(InvalidInputError):
        scattershot_sample(np.eye(2), [SpdcSource(0.5)] * 2, HeraldDetector(1.0, "bucket"), 1, seed=0)


def test_noise_perfect_fidelity():
    realized, ideal = simulate_input_noise(NoiseModel(1.0), standard_input(3, 5), 1000, 0)
    assert ideal.all()
    assert (realized == [1, 1, 1, 0, 0]).all()


def test_single_noise_draw():
    cfg, ideal = apply_input_noise(NoiseModel(0.0, "two_photon"), standard_input(2, 3), seed=1)
    assert cfg == FockConfiguration((2, 2, 0)) and not ideal


@pytest.mark.parametrize("p", [0.8, 0.9, 0.99])
@pytest.mark.parametrize("n", [1, 2, 3, 5])
def test_noise_ideal_rate(p, n):
    trials = 100_000
    _, ideal = simulate_input_noise(NoiseModel(p), standard_input(n, n + 2), trials, seed=n)
    target = p**n
    assert abs(ideal.mean() - target) <= 3 * sigma_binomial(target, trials)


def test_vacuum_errors_only_lose_photons():
    realized, _ = simulate_input_noise(NoiseModel(0.5, "vacuum"), standard_input(4, 6), 5000, 3)
    assert (realized.sum(axis=1) <= 4).all()
    realized, ideal = simulate_input_noise(NoiseModel(0.5, "two_photon"), standard_input(4, 6), 5000, 3)
    assert (realized.sum(axis=1) >= 4).all()
    assert ((realized.sum(axis=1) == 4) == ideal).all()


def test_temporal_mismatch_folds_into_p():
    model = NoiseModel(0.9, temporal_mismatch=0.1)
    assert model.effective_p == pytest.approx(0.81)
    _, ideal = simulate_input_noise(model, standard_input(2, 2), 100_000, 4)
    target = 0.81**2
    assert abs(ideal.mean() - target) <= 3 * sigma_binomial(target, 100_000)


def test_noise_requires_collision_free_input():
    with pytest.raises(InvalidInputError):
        simulate_input_noise(NoiseModel(0.9), FockConfiguration((2, 0)), 10, 0)


def _threshold_oracle(p, n, c, d):
    mpmath.mp.dps = 50
    return mpmath.mpf(n) * mpmath.log(p) > -(mpmath.log(c) + d * mpmath.log(n))


@pytest.mark.parametrize(
    "p, n, c, d, expected",
    [
        (1.0, 5, 2.0, 1.0, True),
        (1.0, 100, 1.0, 2.0, True),
        (0.99, 100, 1.0, 2.0, True),
        (0.99, 2000, 1.0, 2.0, False),
        (0.5, 50, 1.0, 3.0, False),
    ],
)
def test_hardness_threshold(p, n, c, d, expected):
    assert hardness_threshold_check(p, n, c, d) is expected
    assert bool(_threshold_oracle(mpmath.mpf(p), n, c, d)) is expected


def test_hardness_threshold_eventually_fails():
    lo = [n for n in range(1, 5000) if hardness_threshold_check(0.99, n, 1.0, 2.0)]
    assert lo and max(lo) < 2000
    assert not hardness_threshold_check(0.0, 3, 1.0, 1.0)


def test_source_config_round_trip():
    obj = {"p": 0.9, "error_kind": "two_photon", "epsilon": 0.1, "chi": 0.3, "herald": {"kind": "bucket", "eta": 0.6}}
    cfg = SourceConfig.from_json_obj(obj)
    assert cfg.noise.error_kind is ErrorKind.TWO_PHOTON
    assert cfg.herald.kind is DetectorKind.BUCKET
    assert cfg.to_json_obj() == obj
    with pytest.raises(InvalidInputError):
        SourceConfig.from_json_obj({"p": 2.0})
    with pytest.raises(InvalidInputError):
        SourceConfig.from_json_obj({"p": 0.9, "error_kind": "dephasing"})


def test_undercount_single_photon():
    assert undercount_simulation(1, 10, 1000, 0) == 0.0


def test_undercount_two_photons():
    trials = 100_000
    rate = undercount_simulation(2, 100, trials, seed=1)
    assert undercount_bound(2, 100) == pytest.approx(0.01)
    assert abs(rate - 0.01) <= 3 * sigma_binomial(0.01, trials)


def test_undercount_three_photons():
    trials = 100_000
    rate = undercount_simulation(3, 50, trials, seed=2)
    bound = undercount_bound(3, 50)
    assert bound == pytest.approx(0.06)
    assert rate <= bound + 3 * sigma_binomial(bound, trials)
    exact = 1 - (49 / 50) * (48 / 50)
    assert abs(rate - exact) <= 3 * sigma_binomial(exact, trials)
