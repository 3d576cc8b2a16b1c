from fractions import Fraction

import pytest

from conftest import rat, random_value
from vdfield.diffpoly import evaluate
from vdfield.errors import IntegrationGap, NonDecreasingResidual, VdfError
from vdfield.gridseries import (
    Series,
    log_fragment,
    transseries_fragment,
)
from vdfield.hsolve import (
    LinearOperator,
    apply_op,
    asym_integrate,
    check_bll,
    demo_nonuniqueness,
    lambda_series,
    op_A,
    op_B,
    operator_poly,
    psi_map,
    solve_linear,
)
from vdfield.newton import ndeg_geq
from vdfield.valgroup import GroupElement, zero


def u_mono(K, k, coeff=1):
    """(l0 ... lk)^-1 as a series."""
    return K.monomial_series(
        K.monomial_from_dict({f"l{j}": -1 for j in range(k + 1)}), coeff
    )


class TestLambda:
    def test_first_term(self):
        L = log_fragment(0)
        assert lambda_series(0).same_terms(L.gen("l0", -1))

    def test_displayed_sum(self):
        L = log_fragment(2)
        lam = lambda_series(2)
        assert lam.same_terms(u_mono(L, 0) + u_mono(L, 1) + u_mono(L, 2))

    def test_truncation_past_last_term(self):
        L = log_fragment(2)
        lam = lambda_series(2)
        assert lam.tau == GroupElement([1, 1, 2])

    def test_derivative_of_log_tail(self):
        L = log_fragment(3)
        tail = L.gen("l1") + L.gen("l2") + L.gen("l3")
        assert tail.derive().same_terms(lambda_series(2, L))


class TestPsi:
    def test_exponential_class(self):
        M = transseries_fragment(3)
        assert psi_map(M, M.gen("e_x").valuation()) == zero(5)

    def test_log_class(self):
        M = transseries_fragment(3)
        assert psi_map(M, M.gen("l0").valuation()) == \
            M.gen("l0", -1).valuation()

    def test_scaling_invariance(self, rng):
        M = transseries_fragment(3)
        count = 0
        while count < 100:
            g = random_value(M, rng)
            if g.is_zero():
                continue
            count += 1
            k = rng.randint(1, 5)
            assert psi_map(M, g.scale(k)) == psi_map(M, g)

    def test_zero_rejected(self):
        M = transseries_fragment(1)
        with pytest.raises(VdfError):
            psi_map(M, zero(3))

    def test_generator_logders_match_psi_table(self):
        # declared logders and the psi map tell the same story
        for K in (transseries_fragment(3), log_fragment(3)):
            for g in K.generators:
                if not g.logder.terms:
                    continue
                assert psi_map(K, g.value) == g.logder.valuation()


class TestAsymIntegrate:
    def test_exponential(self):
        M = transseries_fragment(2)
        assert asym_integrate(M.gen("e_x")) == M.gen("e_x")

    def test_log_inverse(self):
        M = transseries_fragment(2)
        assert asym_integrate(M.gen("l0", -1)) == M.gen("l1")

    def test_depth_gap(self):
        for depth in (0, 2, 4):
            M = transseries_fragment(depth)
            with pytest.raises(IntegrationGap):
                asym_integrate(u_mono(M, depth))

    def test_result_never_unit(self, rng):
        M = transseries_fragment(3)
        for _ in range(100):
            g = random_value(M, rng)
            if g.is_zero():
                continue
            f = M.monomial_series(M.monomial_of_value(g), rat(rng, 1, 5))
            try:
                If = asym_integrate(f)
            except IntegrationGap:
                continue
            assert not If.valuation().is_zero()

    def test_derivative_matches_dominant(self, rng):
        # (If)' ~ f on 300 random nonzero single-class inputs
        M = transseries_fragment(4)
        done = 0
        while done < 300:
            g = random_value(M, rng)
            if g.is_zero():
                continue
            f = M.monomial_series(M.monomial_of_value(g), rat(rng, 1, 7)) \
                + M.monomial_series(
                    M.monomial_of_value(g + GroupElement([0, 1, 0, 0, 0, 0])),
                    rat(rng, -3, 3),
                )
            try:
                If = asym_integrate(f)
            except IntegrationGap:
                continue
            done += 1
            diff = If.derive() - f
            if diff.terms:
                assert diff.valuation() > f.valuation()

    def test_flat_claim(self, rng):
        # classes with nonzero exponential part integrate within the
        # class: If =x= f
        M = transseries_fragment(4)
        done = 0
        while done < 120:
            g = random_value(M, rng)
            if g.coords[0] == 0:
                continue
            f = M.monomial_series(M.monomial_of_value(g), rat(rng, 1, 5))
            If = asym_integrate(f)
            done += 1
            assert If.valuation() == f.valuation()


class TestApply:
    def test_exponential_example(self):
        M = transseries_fragment(3)
        A = op_A(M, 3)
        ex = M.gen("e_x")
        assert apply_op(A, ex) == ex - lambda_series(3, M) * ex

    def test_derivation_of_constant(self):
        M = transseries_fragment(1)
        d = LinearOperator(M.zero_series(), M.one())
        assert apply_op(d, M.one()).is_true_zero()

    def test_exponential_shift_identity(self, rng):
        # A(y e_x) = B(y) e_x, the product-rule bridge between the
        # operators
        depth = 4
        M = transseries_fragment(depth)
        L = log_fragment(depth)
        A = op_A(M, depth)
        B = op_B(L, depth)
        ex = M.gen("e_x")
        for _ in range(40):
            y = L.zero_series()
            for _ in range(3):
                y = y + L.monomial_series(
                    L.monomial_of_value(random_value(L, rng)), rat(rng, -4, 4)
                )
            lhs = apply_op(A, y.embed_into(M) * ex)
            rhs = apply_op(B, y).embed_into(M) * ex
            assert lhs == rhs


class TestSolveLinear:
    def test_exponential_target_depth6(self):
        M = transseries_fragment(6)
        A = op_A(M, 6)
        exps = {f"l{j}": -1 for j in range(6)}
        exps["e_x"] = 1
        tau = M.monomial_value(M.monomial_from_dict(exps))
        y, trace = solve_linear(A, M.gen("e_x"), tau)
        assert trace.termination == "reached_tau"
        vals = trace.residual_valuations
        assert all(a < b for a, b in zip(vals, vals[1:]))
        # the ladder climbs v(e_x), v(e_x/l0), v(e_x/(l0 l1)), ...
        assert vals[0] == M.gen("e_x").valuation()
        assert vals[1] == (M.gen("e_x") * M.gen("l0", -1)).valuation()
        assert vals[2] == (
            M.gen("e_x") * u_mono(M, 1)
        ).valuation()

    def test_first_step_example(self):
        M = transseries_fragment(3)
        A = op_A(M, 3)
        exps = {f"l{j}": -1 for j in range(3)}
        exps["e_x"] = 1
        tau = M.monomial_value(M.monomial_from_dict(exps))
        y, trace = solve_linear(A, M.gen("e_x"), tau, max_iter=2)
        # y1 = e_x, z1 = -lambda e_x
        assert trace.iterates[0] == M.gen("e_x")
        assert trace.residual_valuations[1] == (
            M.gen("e_x") * M.gen("l0", -1)
        ).valuation()

    def test_flat_solve_b(self):
        L = log_fragment(6)
        B = op_B(L, 6)
        tau = GroupElement([1, 1, 1, 1, 1, 1, 0])
        y, trace = solve_linear(B, L.one(), tau)
        assert trace.termination == "reached_tau"
        assert trace.iterates[0] == L.one()  # first step is the constant 1
        vals = trace.residual_valuations
        assert all(a < b for a, b in zip(vals, vals[1:]))
        res = apply_op(B, y) - L.one()
        assert res.val_or_tau() >= tau

    def test_flat_solve_against_linear_system(self):
        # coefficientwise oracle: solve B(y) = 1 on an explicit monomial
        # ansatz by exact Gaussian elimination and compare
        depth = 4
        L = log_fragment(depth)
        B = op_B(L, depth)
        tau = GroupElement([1] * depth + [0])
        y, trace = solve_linear(B, L.one(), tau)
        support = _reachable_support(L, depth, tau)
        oracle = _linear_system_solve(L, B, L.one(), support, tau)
        assert oracle is not None
        diff = y - oracle
        assert (not diff.terms) or diff.valuation() >= tau

    def test_consistency_recovery(self, rng):
        # solving against op(w) recovers w up to the certified tail
        depth = 4
        L = log_fragment(depth)
        B = op_B(L, depth)
        for _ in range(10):
            w = L.constant(rat(rng, -3, 3))
            for _ in range(2):
                w = w + L.monomial_series(
                    L.monomial_of_value(
                        GroupElement(
                            [Fraction(rng.randint(0, 2))]
                            + [rat(rng, 0, 2) for _ in range(depth)]
                        )
                    ),
                    rat(rng, -3, 3),
                )
            if not w.terms:
                continue
            g = apply_op(B, w)
            tau = GroupElement([2] + [0] * depth)
            y, trace = solve_linear(B, g, tau, max_iter=64)
            assert trace.termination in ("reached_tau", "truncation_exhausted")
            # recovery is certified to the level the residual reached;
            # the rhs carries the lambda truncation, so that level may
            # sit below the requested tau
            certified = trace.residual_valuations[-1]
            diff = y - w
            if diff.terms:
                assert diff.valuation() >= certified

    def test_exact_closure(self):
        # a polynomial antiderivative closes the equation exactly; the
        # final trace entry is the +infinity bound
        from vdfield.gridseries import laurent_ddt
        from vdfield.hsolve import derivation_op

        K = laurent_ddt()
        d = derivation_op(K)
        tau = GroupElement([10])
        y, trace = solve_linear(d, K.gen("t", 2).scale(3), tau)
        assert trace.termination == "reached_tau"
        assert y == K.gen("t", 3)
        assert trace.as_report()["residual_valuations"][-1] == "inf"

    def test_residual_gap_surfaces(self):
        # a flat constant right-hand side cannot be integrated against A
        M = transseries_fragment(3)
        A = op_A(M, 3)
        tau = GroupElement([1, 0, 0, 0, 0])
        y, trace = solve_linear(A, M.one(), tau)
        assert trace.termination == "integration_gap"
        assert trace.gap is not None

    def test_nondecreasing_rejected(self):
        # an operator outside the solver's contract: the step cannot
        # decrease the residual, which must be reported loudly
        L = log_fragment(3)
        lam = lambda_series(3, L)
        bad = LinearOperator(L.one() - lam, L.gen("l0"))
        tau = GroupElement([2, 0, 0, 0])
        try:
            y, trace = solve_linear(bad, L.one(), tau, max_iter=8)
        except (NonDecreasingResidual, IntegrationGap):
            return
        assert trace.termination in ("integration_gap", "max_iter", "reached_tau")

    def test_newton_degree_bridge(self, rng):
        # every computed solution certifies ndeg_geq(P, v(y)) >= 1 for
        # the operator polynomial P
        depth = 4
        L = log_fragment(depth)
        B = op_B(L, depth)
        tau = GroupElement([1] * depth + [0])
        y, trace = solve_linear(B, L.one(), tau)
        P = operator_poly(B, L.one())
        assert evaluate(P, y).val_or_tau() >= tau
        assert ndeg_geq(P, y.valuation()) >= 1
        M = transseries_fragment(depth)
        A = op_A(M, depth)
        exps = {f"l{j}": -1 for j in range(depth)}
        exps["e_x"] = 1
        tauA = M.monomial_value(M.monomial_from_dict(exps))
        yA, traceA = solve_linear(A, M.gen("e_x"), tauA)
        PA = operator_poly(A, M.gen("e_x"))
        assert ndeg_geq(PA, yA.valuation()) >= 1

    def test_no_unit_values(self, rng):
        # sampled shadow of the gap statement: A(y) is never a unit
        M = transseries_fragment(3)
        A = op_A(M, 3)
        for _ in range(150):
            y = M.zero_series()
            for _ in range(rng.randint(1, 3)):
                y = y + M.monomial_series(
                    M.monomial_of_value(random_value(M, rng)), rat(rng, -4, 4)
                )
            z = apply_op(A, y)
            if z.terms:
                assert not z.valuation().is_zero()


def _reachable_support(L, depth, tau):
    """Monomials in the multiplicative monoid of the lambda terms with
    value below tau (plus 1)."""
    seen = {L.unit_monomial()}
    frontier = [L.unit_monomial()]
    gens = [L.monomial_from_dict({f"l{j}": -1 for j in range(k + 1)})
            for k in range(depth + 1)]
    while frontier:
        m = frontier.pop()
        for g in gens:
            n = m * g
            if n in seen:
                continue
            if L.monomial_value(n) < tau:
                seen.add(n)
                frontier.append(n)
    return sorted(seen, key=lambda m: L.monomial_value(m).coords)


def _linear_system_solve(L, op, rhs, support, tau):
    """Exact Gaussian elimination for op(y) = rhs on a monomial ansatz,
    matching coefficients of every monomial below tau."""
    images = [apply_op(op, L.monomial_series(m)) for m in support]
    rows = set()
    for img in images:
        for mono in img.terms:
            if L.monomial_value(mono) < tau:
                rows.add(mono)
    for mono in rhs.terms:
        rows.add(mono)
    rows = sorted(rows, key=lambda m: L.monomial_value(m).coords)
    matrix = [
        [img.coefficient(row) for img in images] + [rhs.coefficient(row)]
        for row in rows
    ]
    ncols = len(support)
    pivot_of_col = {}
    r = 0
    for c in range(ncols):
        pivot = next((i for i in range(r, len(matrix)) if matrix[i][c] != 0), None)
        if pivot is None:
            continue
        matrix[r], matrix[pivot] = matrix[pivot], matrix[r]
        pv = matrix[r][c]
        matrix[r] = [x / pv for x in matrix[r]]
        for i in range(len(matrix)):
            if i != r and matrix[i][c] != 0:
                f = matrix[i][c]
                matrix[i] = [a - f * b for a, b in zip(matrix[i], matrix[r])]
        pivot_of_col[c] = r
        r += 1
    for row in matrix[r:]:
        if row[-1] != 0:
            return None
    coeffs = {}
    for c, m in enumerate(support):
        if c in pivot_of_col:
            val = matrix[pivot_of_col[c]][-1]
            if val != 0:
                coeffs[m] = val
    return Series(L, coeffs, tau)


class TestCheckBll:
    def test_depth6(self):
        rep = check_bll(6)
        assert rep["passed"]
        assert rep["flat_solve"]["termination"] == "reached_tau"

    def test_depth3_quick(self):
        import time

        t0 = time.perf_counter()
        rep = check_bll(3)
        assert rep["passed"]
        assert time.perf_counter() - t0 < 1.0

    def test_negative_control(self):
        # a deliberately early-truncated solve leaves the lift residual
        # below the required bound
        depth = 4
        L = log_fragment(depth)
        B = op_B(L, depth)
        tau = GroupElement([1] * depth + [0])
        y_short, _ = solve_linear(B, L.one(), tau, max_iter=2)
        M = transseries_fragment(depth)
        A = op_A(M, depth)
        lifted = y_short.embed_into(M) * M.gen("e_x")
        residual = apply_op(A, lifted) - M.gen("e_x")
        target = GroupElement([-1] + [1] * depth + [0])
        assert residual.terms
        assert not residual.valuation() >= target


class TestDemo:
    def test_residual_ladder(self):
        rep = demo_nonuniqueness(4, [Fraction(0)])
        assert len(rep["runs"]) == 1
        vals = rep["runs"][0]["residual_valuations"]
        assert vals[1] == ["-1", "1", "0", "0", "0", "0"]
        assert vals[2] == ["-1", "1", "1", "0", "0", "0"]

    def test_difference_is_flat(self):
        rep = demo_nonuniqueness(4, [Fraction(0), Fraction(1)])
        diff = rep["differences"][0]
        # the computable iterates coincide; the discrepancy is the flat
        # constant, and the would-be correction lives in the log block
        assert diff["iterate_difference_terms"] == []
        assert diff["flat_discrepancy"][0]["monomial"] == []
        assert diff["correction_dominant"] == [["l0", "1"]]
        assert diff["correction_has_e_x_factor"] is False

    def test_single_c_degenerates(self):
        rep = demo_nonuniqueness(3, [Fraction(0)])
        assert rep["differences"] == []
        assert rep["runs"][0]["termination"] == "reached_tau"
