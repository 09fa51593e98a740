from fractions import Fraction
from itertools import combinations, product

import numpy as np
import pytest
from sympy import Matrix

from singularlab.config import Config
from singularlab.dioph import SingularityQuery, Verdict, singular_test
from singularlab.exceptions import BoxOverflow, CertificateInvalid, InputError, NotApplicable, SingularB
from singularlab.exterior import MultiVector, c_decompose, sup_norm
from singularlab.numeric import parse_scalar, quad
from singularlab.subspace import (
    ConditionQuery, ConditionStatus, Mode, Projection, Shape, SubspaceParam, achievable_norm_pairs, apply_RA,
    condition_check, condition_two_star_via_omega, contains, embed_point, everything_witness, lastp_identity,
    left_multiply, permute_rows, r_matrix, ra_norm, remove_row, solvability_table, theorem_main3_pipeline,
    theorem_shape, transfer_solution, zero_row_normalization,
)

C = Fraction(1, 10)


CROSS_PATH_MATRICES = [
    [["1/2"], ["1/3"]],
    [["2/5"], ["0"]],
    [["3/7"], ["5/11"]],
    [["1/2", "1/3"], ["1/5", "1/7"]],
    [["1/4"], ["2/3"], ["3/5"]],
    [["1/3", "2/9"]],
    [["sqrt(2)"], ["sqrt(3)"]],
    [["sqrt(2)"], ["1+sqrt(2)"]],
    [["(1+sqrt(5))/2"], ["sqrt(5)"]],
    [["sqrt(2)", "sqrt(3)"]],
    [["sqrt(2)", "sqrt(3)"], ["sqrt(5)", "sqrt(7)"]],
    [["sqrt(3)"], ["sqrt(2)"], ["sqrt(5)"]],
    [["2*sqrt(2)"], ["sqrt(2)/3"]],
    [["sqrt(2)"], ["1/3"]],
    [["1/2"], ["sqrt(3)"]],
    [["sqrt(2)", "1/3"], ["1/5", "sqrt(3)"]],
    [["sqrt(2)", "1/2"], ["2*sqrt(2)", "1"]],
    [["1/3"], ["sqrt(5)"], ["2/7"]],
    [["sqrt(7)", "0"]],
    [["0"], ["sqrt(2)"]],
]


def box_multivectors(dim: int, bound: int = 2):
    """Every multivector of every grade with coefficients in -bound..bound."""
    values = range(-bound, bound + 1)
    for grade in range(1, dim + 1):
        keys = list(combinations(range(dim), grade))
        for coefficients in product(values, repeat=len(keys)):
            yield MultiVector(dim, grade, dict(zip(keys, coefficients)))


class TestSubspaceParamPositive:
    def test_shape_from_matrix(self, rational_plane):
        assert (rational_plane.n, rational_plane.s) == (2, 1)
        assert rational_plane.is_rational

    def test_embed_point(self, rational_plane):
        assert embed_point(rational_plane, [3]) == (3, Fraction(3, 2))
        assert embed_point(rational_plane, [0]) == (0, Fraction(1, 2))

    def test_r_matrix(self, rational_plane):
        assert r_matrix(rational_plane) == [[1, 0, Fraction(1, 2)], [0, 1, Fraction(1, 3)]]

    def test_embed_single_point(self):
        P = SubspaceParam.from_matrix([[Fraction(1, 2), Fraction(1, 3)]])

        assert P.s == 0
        assert embed_point(P, []) == (Fraction(1, 2), Fraction(1, 3))

    def test_contains(self, rational_plane, irrational_plane, sqrt2, sqrt3):
        assert contains(rational_plane, [3, Fraction(3, 2)])
        assert not contains(rational_plane, [3, 1])
        assert contains(irrational_plane, [sqrt3, sqrt2 + 3])

    def test_ra_norm_for_vectors(self, rational_plane):
        assert ra_norm(rational_plane, MultiVector.from_vector([-3, -2, 6])) == 0
        assert ra_norm(rational_plane, MultiVector.from_vector([0, 0, 1])) == Fraction(1, 2)

    def test_apply_ra_to_vector(self, rational_plane):
        entries = apply_RA(rational_plane, c_decompose(MultiVector.from_vector([0, 0, 1])))
        assert [sup_norm(entry) for entry in entries] == [Fraction(1, 2), Fraction(1, 3)]

    def test_to_json(self, irrational_plane):
        assert irrational_plane.to_json() == {"n": 2, "s": 1, "A": [["sqrt(2)"], ["sqrt(3)"]]}


class TestConditionCheckPositive:
    def test_badly_approximable_line_is_satisfied(self, small_config, sqrt2):
        P = SubspaceParam.from_matrix([[sqrt2], [Fraction(1, 3)]])

        report = condition_check(ConditionQuery(P, C, small_config.schedule), small_config)

        assert report.status == ConditionStatus.SATISFIED
        assert report.satisfying_Q == 256
        assert set(report.per_Q().values()) == {False}

    def test_rational_line_is_violated(self, small_config, rational_plane):
        report = condition_check(ConditionQuery(rational_plane, C, small_config.schedule), small_config)

        assert report.status == ConditionStatus.VIOLATED
        assert report.per_Q() == {16: False, 64: True, 256: True, 1024: True}
        at_64 = [w for Q, j, w in report.certificates() if Q == 64]
        assert at_64 == [MultiVector.from_vector([3, 2, -6])]

    @pytest.mark.parametrize("matrix", [[[Fraction(1, 2)], [Fraction(1, 3)]], [[Fraction(2, 5)], [0]]])
    def test_first_grade_matches_singular_test(self, small_config, matrix):
        P = SubspaceParam.from_matrix(matrix)

        report = condition_check(ConditionQuery(P, C, small_config.schedule, j_range=(1,)), small_config)
        verdict = singular_test(SingularityQuery(P.A, C, small_config.schedule, omega=P.n, box_factor=C),
                                small_config)

        assert list(report.per_Q().values()) == [record.solved for record in verdict.records]

    def test_first_grade_solutions_have_nonzero_q(self, small_config, rational_plane):
        # c / Q^n >= 1 at Q = 1 admits p-only multivectors such as e_0
        report = condition_check(ConditionQuery(rational_plane, 2, [1, 2], j_range=(1,)), small_config)
        verdict = singular_test(SingularityQuery(rational_plane.A, 2, [1, 2], omega=2, box_factor=2), small_config)

        assert report.certificates()
        assert all(w.coeffs.get((2,), 0) != 0 for _, _, w in report.certificates())
        assert MultiVector.from_vector([1, 0, 0]) not in [w for _, _, w in report.certificates()]
        assert list(report.per_Q().values()) == [record.solved for record in verdict.records]

    @pytest.mark.parametrize("matrix", CROSS_PATH_MATRICES)
    def test_first_grade_agrees_with_singular_test_across_fields(self, small_config, matrix):
        P = SubspaceParam.from_matrix([[parse_scalar(x) for x in row] for row in matrix])
        schedule = (16, 64, 256)

        report = condition_check(ConditionQuery(P, C, schedule, j_range=(1,)), small_config)
        verdict = singular_test(SingularityQuery(P.A, C, schedule, omega=P.n, box_factor=C), small_config)

        assert list(report.per_Q().values()) == [record.solved for record in verdict.records]
        assert (report.status == ConditionStatus.SATISFIED) == (verdict.status == Verdict.REFUTED)

    def test_row_permutation_keeps_first_grade_pairs(self, rational_plane):
        swapped = permute_rows(rational_plane, (1, 0))

        assert swapped.A == ((Fraction(1, 3),), (Fraction(1, 2),))
        assert achievable_norm_pairs(swapped, 1, 2) == achievable_norm_pairs(rational_plane, 1, 2)

    def test_row_permutation_keeps_solvability(self, small_config, rational_plane):
        query = ConditionQuery(rational_plane, C, small_config.schedule)
        swapped = ConditionQuery(permute_rows(rational_plane, (1, 0)), C, small_config.schedule)

        assert solvability_table(swapped, small_config) == solvability_table(query, small_config)

    @pytest.mark.parametrize("seed", range(10))
    def test_random_row_swap_keeps_solvability_in_three_dimensions(self, small_config, seed):
        rng = np.random.default_rng(seed)
        A = [[Fraction(int(rng.integers(-9, 10)), int(rng.integers(1, 10))) for _ in range(2)] for _ in range(2)]
        P = SubspaceParam.from_matrix(A)
        schedule = (4, 8, 16, 32, 48)

        query = ConditionQuery(P, C, schedule, j_range=(1, 2))
        swapped = ConditionQuery(permute_rows(P, (1, 0)), C, schedule, j_range=(1, 2))

        assert (P.n, P.s) == (3, 1)
        assert solvability_table(swapped, small_config) == solvability_table(query, small_config)

    def test_two_star_via_omega(self, small_config):
        P = SubspaceParam.from_matrix([[Fraction(1, 2), Fraction(1, 3)], [Fraction(1, 5), Fraction(1, 7)]])
        query = ConditionQuery(P, C, [16, 64, 256])

        direct = condition_check(query, small_config)
        lifted = condition_two_star_via_omega(query, small_config)

        assert direct.horizon["j_range"] == [1, 2]
        assert lifted.solvability() == direct.solvability()
        assert lifted.status == direct.status

    def test_pi_projection_widens_grade_range(self, small_config, rational_plane):
        query = ConditionQuery(rational_plane, C, [16, 64], j_range=(1, 2), projection=Projection.PI)
        report = condition_check(query, small_config)
        assert {j for _, j in report.solvability()} == {1, 2}

    def test_sensitivity_boxes(self, small_config, rational_plane):
        query = ConditionQuery(rational_plane, C, [16], sensitivity=True)

        cell = condition_check(query, small_config).cells[0]

        assert set(cell.conservative_box) == {"1", "2"}
        assert cell.conservative_box["1"] <= cell.conservative_box["2"]

    def test_threaded_check_matches_serial(self, small_config, rational_plane):
        query = ConditionQuery(rational_plane, C, small_config.schedule)

        serial = condition_check(query, small_config)
        threaded = condition_check(query, small_config.merged(threads=4))

        assert threaded.to_json() == serial.to_json()


class TestReductionsPositive:
    def test_left_multiply(self, rational_plane):
        moved = left_multiply(rational_plane, [[1, 1], [0, 2]])
        assert moved.A == ((Fraction(5, 6),), (Fraction(2, 3),))

    def test_transfer_solution_keeps_exact_solutions(self, rational_plane):
        for B in ([[1, 1], [0, 2]], [[Fraction(1, 2), 0], [0, 1]]):
            w, C_factor = transfer_solution(rational_plane, B, MultiVector.from_vector([-3, -2, 6]))

            assert ra_norm(left_multiply(rational_plane, B), w) == 0
            assert C_factor == 2

    def test_transfer_solution_bound(self, rational_plane):
        B = [[1, 1], [0, 2]]
        w = MultiVector.from_vector([1, 0, 1])

        moved, C_factor = transfer_solution(rational_plane, B, w)

        assert ra_norm(left_multiply(rational_plane, B), moved) <= C_factor * ra_norm(rational_plane, w)

    def test_remove_row(self):
        P = SubspaceParam.from_matrix([[Fraction(1, 2)], [1], [Fraction(3, 2)]])

        reduced = remove_row(P, 2, [1, 1])

        assert (reduced.n, reduced.s) == (2, 1)
        assert reduced.A == ((Fraction(1, 2),), (Fraction(1),))

    def test_zero_row_normalization(self):
        P = SubspaceParam.from_matrix([[1], [Fraction(1, 2)]])

        B, sigma, normalized = zero_row_normalization(P, 0, [2])
        assert B == ((1, -2), (0, 1))
        assert sigma == (0, 1)
        assert normalized.A == ((0,), (Fraction(1, 2),))

        _, sigma, normalized = zero_row_normalization(P, 1, [Fraction(1, 2)])
        assert sigma == (1, 0)
        assert normalized.A == ((0,), (1,))

    def test_lastp_identity(self, sqrt2):
        P = SubspaceParam.from_matrix([[0], [sqrt2]])
        samples = [MultiVector.from_vector(v) for v in ([1, 2, 3], [0, -1, 1], [4, 0, 0])]
        samples += [MultiVector(3, 2, {(0, 1): a, (0, 2): b, (1, 2): c})
                    for a, b, c in ((1, 2, 3), (0, 0, 1), (2, -1, 0))]

        for w in samples:
            lhs, rhs = lastp_identity(P, w)
            assert lhs == rhs

    @pytest.mark.parametrize("matrix", [[[0], ["sqrt(2)"]], [[0], ["1/3"]]])
    def test_lastp_identity_on_the_full_box_in_the_plane(self, matrix):
        P = SubspaceParam.from_matrix([[parse_scalar(x) for x in row] for row in matrix])

        for w in box_multivectors(3):
            lhs, rhs = lastp_identity(P, w)
            assert lhs == rhs

    @pytest.mark.slow
    @pytest.mark.parametrize("matrix", [[[0, 0], ["sqrt(2)", "1/3"]], [[0], ["sqrt(3)"], ["2/5"]]])
    def test_lastp_identity_on_the_full_box_in_space(self, matrix):
        P = SubspaceParam.from_matrix([[parse_scalar(x) for x in row] for row in matrix])

        for w in box_multivectors(4):
            lhs, rhs = lastp_identity(P, w)
            assert lhs == rhs

    def test_everything_witness(self, rational_plane, sqrt2):
        witness = everything_witness(rational_plane, [sqrt2], 6, C)

        assert witness.q == (6,)
        assert (witness.p0, witness.p_prime) == (-3, (-2,))
        assert witness.error == 0
        assert witness.certified

    def test_everything_witness_on_sampled_points(self, rational_plane):
        rng = np.random.default_rng(9)
        points = [Fraction(int(rng.integers(-50, 51)), int(rng.integers(1, 20))) for _ in range(50)]
        points += [quad(Fraction(int(rng.integers(-5, 6)), 3), int(rng.integers(1, 4)), 2) for _ in range(50)]

        for x in points:
            for Q in (6, 16, 64):
                witness = everything_witness(rational_plane, [x], Q, C)
                assert witness.error == 0
                assert witness.certified

    def test_everything_witness_without_solution(self, irrational_plane):
        assert everything_witness(irrational_plane, [Fraction(1, 2)], 6, C) is None

    def test_theorem_shape(self, rational_plane, irrational_plane, sqrt2, sqrt3):
        assert theorem_shape(rational_plane) == Shape.ROWS
        assert theorem_shape(irrational_plane) == Shape.COLUMNS
        assert theorem_shape(SubspaceParam.from_matrix([[sqrt2, 1], [2 * sqrt2, 2]])) == Shape.ROWS
        assert theorem_shape(SubspaceParam.from_matrix([[1, sqrt2], [sqrt3, 1]])) is None

    def test_main3_pipeline_on_rational_line(self, small_config, rational_plane):
        report = theorem_main3_pipeline(rational_plane, C, small_config.schedule, small_config)

        assert report.shape == Shape.ROWS
        assert report.steps[0]["agrees"]
        assert report.steps[1]["chain"][0]["certificate"] == ["2/3"]
        assert report.status == "VIOLATED"
        assert report.consistent is True
        assert report.witnesses["all_certified"]
        assert report.conclusion.startswith("n-singular")

    def test_main3_rows_reassembled_from_single_row(self, small_config, sqrt2):
        P = SubspaceParam.from_matrix([[sqrt2], [2 * sqrt2]])

        report = theorem_main3_pipeline(P, C, small_config.schedule, small_config)

        steps = {step["step"]: step for step in report.steps}
        reduced = steps["conditions ((n-j+1)/j, j) for L_a"]
        direct = steps["two-star condition for L_A, direct"]
        assert report.shape == Shape.ROWS
        assert steps["reduce to a single row"]["chain"][0]["result"] == {"n": 1, "s": 0, "A": [["sqrt(2)"]]}
        assert reduced["per_grade"] == {"1": "SATISFIED"}
        assert steps["two-star condition for L_A, reassembled"]["lifts"]
        assert report.status == direct["status"] == "SATISFIED"
        assert [cell["solved"] for cell in reduced["report"]["cells"]] == \
            [cell["solved"] for cell in direct["report"]["cells"]]
        assert report.consistent is True
        assert report.conclusion.startswith("not n-singular")

    def test_main3_rows_in_three_dimensions(self, small_config, sqrt2):
        P = SubspaceParam.from_matrix([[sqrt2, Fraction(1, 3)], [2 * sqrt2, Fraction(2, 3)]])

        report = theorem_main3_pipeline(P, C, [16, 64, 256], small_config)

        steps = {step["step"]: step for step in report.steps}
        assert report.shape == Shape.ROWS
        assert set(steps["conditions ((n-j+1)/j, j) for L_a"]["per_grade"]) == {"1", "2"}
        # q = (0, 3) clears the rational coordinate 1/3 of the row
        assert report.status == "VIOLATED"
        assert report.consistent is True

    def test_main3_single_column_is_a_hyperplane(self, small_config, irrational_plane):
        report = theorem_main3_pipeline(irrational_plane, C, small_config.schedule, small_config)

        steps = {step["step"]: step for step in report.steps}
        assert report.shape == Shape.COLUMNS
        assert steps["reduce to a single column"]["U"] == [[1]]
        assert steps["reduce to a single column"]["kernel"] is None
        assert steps["two-star condition for L_A, reassembled"]["via"] == "hyperplane"
        assert report.status == steps["two-star condition for L_A, direct"]["status"] == "SATISFIED"
        assert report.consistent is True
        assert report.witnesses is None

    def test_main3_columns_give_a_kernel_witness(self, small_config, sqrt2):
        P = SubspaceParam.from_matrix([[sqrt2, 2 * sqrt2], [Fraction(1, 3), Fraction(2, 3)]])

        report = theorem_main3_pipeline(P, C, [16, 64, 256], small_config)

        steps = {step["step"]: step for step in report.steps}
        U = steps["reduce to a single column"]["U"]
        q = steps["reduce to a single column"]["kernel"]
        assert report.shape == Shape.COLUMNS
        assert abs(Matrix(U).det()) == 1
        assert [sum(r * row[k] for r, row in zip((1, 2), U)) for k in range(2)] == [1, 0]
        assert q[0] == -2 * q[1] and q[1] != 0
        reassembled = steps["two-star condition for L_A, reassembled"]
        assert reassembled["via"] == "kernel witness"
        assert reassembled["per_Q"]["64"] is True
        assert report.status == "VIOLATED"
        assert report.consistent is True


class TestSubspaceNegative:
    def test_wrong_matrix_shape(self):
        with pytest.raises(InputError):
            SubspaceParam(3, 1, ((1,), (2,)))

    def test_omega_mode_needs_exponent(self, rational_plane):
        with pytest.raises(InputError):
            ConditionQuery(rational_plane, C, [16], mode=Mode.OMEGA)

    def test_grade_outside_projection_range(self, rational_plane):
        with pytest.raises(InputError):
            ConditionQuery(rational_plane, C, [16], j_range=(2,))

    def test_box_overflow_propagates(self, rational_plane):
        with pytest.raises(BoxOverflow):
            condition_check(ConditionQuery(rational_plane, C, [1024]), Config(box_budget=10))

    def test_singular_b(self, rational_plane):
        with pytest.raises(SingularB):
            left_multiply(rational_plane, [[1, 2], [2, 4]])

    def test_irrational_b(self, rational_plane, sqrt2):
        with pytest.raises(InputError):
            left_multiply(rational_plane, [[sqrt2, 0], [0, 1]])

    def test_bad_certificate(self):
        P = SubspaceParam.from_matrix([[Fraction(1, 2)], [1], [Fraction(3, 2)]])

        with pytest.raises(CertificateInvalid):
            remove_row(P, 2, [1, 2])
        with pytest.raises(CertificateInvalid):
            remove_row(P, 2, [1])

    def test_bad_permutation(self, rational_plane):
        with pytest.raises(InputError):
            permute_rows(rational_plane, (0, 0))

    def test_lastp_needs_zero_first_row(self, rational_plane):
        with pytest.raises(InputError):
            lastp_identity(rational_plane, MultiVector.from_vector([1, 0, 0]))

    def test_main3_not_applicable(self, small_config, sqrt2, sqrt3):
        P = SubspaceParam.from_matrix([[1, sqrt2], [sqrt3, 1]])

        with pytest.raises(NotApplicable):
            theorem_main3_pipeline(P, C, small_config.schedule, small_config)
