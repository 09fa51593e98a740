import io
from fractions import Fraction

import numpy as np
import pytest

from singularlab.config import Config
from singularlab.exceptions import DimensionTooLarge, InputError
from singularlab.exterior import wedge_all
from singularlab.flow import (
    DeltaPoint, DeltaProfile, Divergence, FlowParams, classify_divergence, delta_profile, flowed_covolume,
    flowed_lattice, prop_p2_chain, qnd_hypothesis_check, unipotent_lattice,
)
from singularlab.lattice import LatticeBasis, Submodule, apply_matrix, covolume
from singularlab.numeric import scalar_cmp


def constant_profile(value, length=8):
    params = FlowParams(n=1, k_max=length - 1)
    return DeltaProfile((Fraction(0),), params, [DeltaPoint(k, value, (0, value)) for k in range(length)])


class TestFlowPositive:
    def test_unipotent_lattice(self):
        assert unipotent_lattice([0, 0]) == LatticeBasis.standard(3)
        assert unipotent_lattice([Fraction(1, 2)]).vectors == ((1, 0), (Fraction(1, 2), 1))
        assert unipotent_lattice([Fraction(1, 3), Fraction(2, 5)]).vectors == (
            (1, 0, 0), (Fraction(1, 3), 1, 0), (Fraction(2, 5), 0, 1),
        )

    def test_zero_profile_is_diagonal(self, small_config):
        profile = delta_profile([0], FlowParams(n=1, k_max=6), small_config)
        assert profile.deltas() == [Fraction(1, 2 ** k) for k in range(7)]

    def test_rational_point_decays(self, small_config):
        profile = delta_profile([Fraction(3, 7)], FlowParams(n=1, k_max=20), small_config)

        for point in profile.values[3:]:
            assert point.delta <= Fraction(7, 2 ** point.k)
        assert profile.classification.kind == Divergence.DECAYS_TO_ZERO_AT_HORIZON
        assert profile.horizon == {"k_max": 20, "eps": "1/8", "base": "2"}

    def test_badly_approximable_point_stays_bounded(self, small_config, sqrt2):
        profile = delta_profile([sqrt2], FlowParams(n=1, k_max=12), small_config)

        assert all(delta >= Fraction(1, 4) for delta in profile.deltas())
        assert profile.classification.kind == Divergence.BOUNDED_BELOW_AT_HORIZON
        assert profile.classification.floor >= Fraction(1, 4)

    def test_threaded_profile_matches_serial(self, small_config):
        params = FlowParams(n=1, k_max=8)
        serial = delta_profile([Fraction(2, 5)], params, small_config)
        threaded = delta_profile([Fraction(2, 5)], params, small_config.merged(threads=3))

        assert threaded.deltas() == serial.deltas()

    def test_constant_profile_is_bounded(self):
        verdict = classify_divergence(constant_profile(Fraction(1)), Fraction(1, 8))

        assert verdict.kind == Divergence.BOUNDED_BELOW_AT_HORIZON
        assert verdict.floor == 1

    def test_dip_below_eps_is_mixed(self):
        profile = constant_profile(Fraction(1))
        profile.values[2] = DeltaPoint(2, Fraction(1, 100), (0, Fraction(1, 100)))

        assert classify_divergence(profile, Fraction(1, 8)).kind == Divergence.MIXED

    def test_csv_output(self, small_config):
        profile = delta_profile([Fraction(3, 7)], FlowParams(n=1, k_max=3), small_config)
        stream = io.StringIO()

        profile.write_csv(stream)

        lines = stream.getvalue().splitlines()
        assert lines[0] == "k,delta_num,delta_den,delta"
        assert len(lines) == 5
        assert lines[1].startswith("0,")

    def test_qnd_holds_at_identity(self, small_config):
        report = qnd_hypothesis_check([[0]], 0, FlowParams(n=1), Fraction(1, 2), 1, small_config)

        assert report.holds
        assert report.checked == 5

    def test_qnd_finds_rational_obstruction(self, small_config):
        report = qnd_hypothesis_check([[Fraction(3, 7)]], 6, FlowParams(n=1), Fraction(1, 2), 7, small_config)

        assert not report.holds
        assert {((-3, 7),), ((3, -7),)} & {v.gamma.rows for v in report.violations}

    def test_qnd_holds_for_badly_approximable(self, small_config, sqrt2):
        report = qnd_hypothesis_check([[sqrt2]], 4, FlowParams(n=1), Fraction(1, 4), 3, small_config)
        assert report.holds

    def test_p2_chain(self, small_config):
        gamma = Submodule.from_rows([(-3, 7)])

        chain = prop_p2_chain([Fraction(3, 7)], gamma, 6, Fraction(1, 2), FlowParams(n=1), small_config)

        assert chain.covolume == Fraction(7, 64)
        assert chain.applies
        assert chain.holds

    def test_flowed_covolume_matches_flowed_generators(self):
        rng = np.random.default_rng(6)
        for _ in range(60):
            n = int(rng.integers(1, 3))
            x = [Fraction(int(rng.integers(-9, 10)), int(rng.integers(1, 8))) for _ in range(n)]
            rank, k = int(rng.integers(1, n + 2)), int(rng.integers(0, 5))
            rows = [[int(v) for v in rng.integers(-3, 4, size=n + 1)] for _ in range(rank)]
            if wedge_all(rows).is_zero():
                continue
            gamma, params = Submodule.from_rows(rows), FlowParams(n=n)

            direct = covolume(apply_matrix(flowed_lattice(x, k, params), gamma))

            assert flowed_covolume(x, gamma, k, params) == direct

    def test_irrational_points_stay_bounded_at_full_horizon(self, small_config, sqrt3, golden):
        for x in (sqrt3, golden):
            profile = delta_profile([x], FlowParams(n=1, k_max=25), small_config)

            assert profile.classification.kind == Divergence.BOUNDED_BELOW_AT_HORIZON
            assert scalar_cmp(profile.classification.floor, Fraction(1, 4)) >= 0

    def test_rational_points_decay_below_their_denominator(self, small_config):
        for x in (Fraction(1, 2), Fraction(5, 12), Fraction(49, 50)):
            profile = delta_profile([x], FlowParams(n=1, k_max=25), small_config)

            assert all(point.delta <= Fraction(x.denominator, 2 ** point.k) for point in profile.values)
            assert profile.classification.kind == Divergence.DECAYS_TO_ZERO_AT_HORIZON

    @pytest.mark.slow
    def test_dani_dichotomy_for_every_small_denominator(self, config, sqrt2, sqrt3, golden):
        params = FlowParams(n=1, k_max=25)
        rationals = sorted({Fraction(p, q) for q in range(1, 51) for p in range(q)})
        for x in rationals:
            profile = delta_profile([x], params, config)

            assert all(point.delta <= Fraction(x.denominator, 2 ** point.k) for point in profile.values)
            assert profile.classification.kind == Divergence.DECAYS_TO_ZERO_AT_HORIZON
        for x in (sqrt2, sqrt3, golden):
            profile = delta_profile([x], params, config)

            assert profile.classification.kind == Divergence.BOUNDED_BELOW_AT_HORIZON
            assert scalar_cmp(profile.classification.floor, Fraction(1, 4)) >= 0


class TestFlowNegative:
    def test_base_must_exceed_one(self):
        with pytest.raises(InputError):
            FlowParams(n=1, base=1)

    def test_dimension_must_be_positive(self):
        with pytest.raises(InputError):
            FlowParams(n=0)

    def test_eps_must_be_positive(self):
        with pytest.raises(InputError):
            classify_divergence(constant_profile(Fraction(1)), 0)

    def test_x_length_must_match(self, small_config):
        with pytest.raises(InputError):
            delta_profile([0, 0], FlowParams(n=1), small_config)

    def test_svp_cap(self):
        with pytest.raises(DimensionTooLarge):
            delta_profile([0] * 3, FlowParams(n=3, k_max=1), Config(svp_dim_cap=3))

    def test_qnd_needs_samples(self, small_config):
        with pytest.raises(InputError):
            qnd_hypothesis_check([], 0, FlowParams(n=1), Fraction(1, 2), 1, small_config)
