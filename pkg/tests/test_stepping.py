"""Scheme tables, stepping, phase averaging and remainder bounds."""

import math

import numpy as np
import pytest

from oscistep import (BoundInputs, JetOrderError, NumericStepError,
                      TruncationPolicy, bound_R11, bound_R22, build_scheme,
                      builtin_field, estimate_coefficient_bound, big_v,
                      exact_exp_macro, integration_call_count, make_field,
                      make_oscillator, solve, step, step_phase_averaged)


def pol(kappa, rho, nu=0.0):
    return TruncationPolicy.from_order(kappa, rho, nu)


def u1(z):
    return np.array([z], dtype=complex)


class TestBuildScheme:
    def test_first_order_table(self):
        o = make_oscillator("cos", 50.0)
        sch = build_scheme(o, TruncationPolicy(1, 1))
        assert [str(e.word) for e in sch.entries] == ["T", "V"]
        assert sch.entries[0].target == "a"
        assert sch.entries[0].coeff.term_dict == {(1, 0, 0, 0, 0): 1.0}
        # V coefficient evaluates to the increment of the antiderivative
        V = big_v(o)
        got = sch.entries[1].coeff.eval_shifted(o, 0.07, 0.3)
        assert got == pytest.approx(V.eval(o, 0.37) - V.eval(o, 0.3), abs=1e-15)

    def test_second_order_table_has_six_entries(self):
        sch = build_scheme(make_oscillator("exp", 50.0), TruncationPolicy(2, 2))
        assert [str(e.word) for e in sch.entries] == ["T", "V", "TT", "TV", "VT", "VV"]

    def test_order4_regime2_retains_eleven_words(self):
        # the order test Q0/4 + Q1/2 <= 1 keeps all six mixed words as well
        # as the four drift chains and V
        sch = build_scheme(make_oscillator("cos", 50.0), pol(4, 2))
        assert [str(e.word) for e in sch.entries] == [
            "T", "V", "TT", "TV", "VT", "VV",
            "TTT", "TTV", "TVT", "VTT", "TTTT"]
        assert sch.jet_order == 3

    def test_rebuild_is_deterministic_and_cached(self):
        o = make_oscillator("cos", 123.0, phi=0.5)
        a = build_scheme(o, pol(3, 2))
        b = build_scheme(o, pol(3, 2))
        assert a.entries is b.entries

    def test_empty_policy_warns(self):
        with pytest.warns(UserWarning):
            sch = build_scheme(make_oscillator("cos", 5.0), TruncationPolicy(0.5, 0.5))
        f = builtin_field("linear", mu=1.0)
        res = step(sch, f, 0.0, u1(1.0), 0.1)
        assert res.u_next[0] == 1.0

    def test_low_order_policies_keep_exact_coefficients(self):
        # the remainder bounds assume the (1,1) and (2,2) step rules use
        # the raw integrals; the order filter must be a no-op there
        o = make_oscillator("fourier", 45.0, phi=0.7,
                            coeffs={1: 0.4, -1: 0.4, 2: 0.1j, -2: -0.1j})
        for k in (1, 2):
            t = build_scheme(o, TruncationPolicy(k, k))
            x = build_scheme(o, TruncationPolicy(k, k), truncate_coefficients=False)
            for et, ex in zip(t.entries, x.entries):
                assert et.coeff.term_dict == ex.coeff.term_dict

    def test_raw_table_matches_iterated_integrals(self):
        from oscistep import iterated_integral
        o = make_oscillator("exp", 55.0, phi=0.2)
        sch = build_scheme(o, pol(4, 2), truncate_coefficients=False)
        for e in sch.entries:
            got = e.coeff.eval_shifted(o, 0.13, 0.4)
            want = iterated_integral(e.word, o, 0.4, 0.13).value
            assert got == pytest.approx(want, abs=1e-15)

    def test_table_reused_across_fields_without_new_integration(self):
        o = make_oscillator("fourier", 33.0,
                            coeffs={1: 0.3, -1: 0.3, 2: 0.2j, -2: -0.2j})
        sch = build_scheme(o, pol(3, 1))
        before = integration_call_count()
        f1 = builtin_field("linear", mu=2.0)
        f2 = builtin_field("nonlinear", alpha=0.5, mu=0.7)
        step(sch, f1, 0.0, u1(1.0), 0.05)
        step(sch, f2, 0.2, u1(0.9 + 0.1j), 0.05)
        assert integration_call_count() == before


class TestStep:
    def test_linear_case_closed_form(self):
        # a = u t, b = mu, v = cos(omega t), order-(4,2) step from t = 0
        mu, om, h, u0 = 10.0, 100.0, 0.1, 1.0 + 0j
        sch = build_scheme(make_oscillator("cos", om), pol(4, 2))
        res = step(sch, builtin_field("linear", mu=mu), 0.0, u1(u0), h)
        want = u0 * (1 + h * h / 2 + h ** 4 / 8) + mu * math.sin(om * h) / om
        assert res.u_next[0] == pytest.approx(want, rel=1e-13)
        assert res.u_next[0] == u0 + sum(c[0] for c in res.contributions)

    def test_first_order_step_is_two_terms(self):
        rng = np.random.default_rng(8)
        o = make_oscillator("exp", 70.0, phi=0.4)
        sch = build_scheme(o, TruncationPolicy(1, 1))
        f = builtin_field("nonlinear", alpha=0.3 + 1j, mu=0.8)
        V = big_v(o)
        for _ in range(5):
            tn = float(rng.uniform(0, 1))
            h = float(rng.uniform(0.01, 0.3))
            u0 = complex(rng.normal(1, 0.2), rng.normal(0, 0.2))
            res = step(sch, f, tn, u1(u0), h)
            dv = V.eval(o, tn + h) - V.eval(o, tn)
            want = (u0 + f.a_values(tn, u1(u0))[0] * h
                    + f.b_values(tn, u1(u0))[0] * dv)
            assert res.u_next[0] == pytest.approx(want, rel=1e-14)

    def test_drift_only_truncated_exponential(self):
        f = make_field(1, lambda t, u: [u[0]], lambda t, u: [0.0 * t])
        sch = build_scheme(make_oscillator("cos", 40.0), TruncationPolicy(4, 4))
        h = 0.3
        res = step(sch, f, 0.0, u1(1.0), h)
        want = 1 + h + h * h / 2 + h ** 3 / 6 + h ** 4 / 24
        assert res.u_next[0] == pytest.approx(want, rel=1e-15)

    def test_power_gamma1_step_is_exact_increment(self):
        f = builtin_field("power", gamma=1)  # b = 1
        o = make_oscillator("cos", 1.0)
        sch = build_scheme(o, TruncationPolicy(1.0, 8.0))
        h = 0.8
        res = step(sch, f, 0.0, u1(2.0), h)
        assert res.u_next[0] == pytest.approx(2.0 + math.sin(h), abs=1e-15)

    def test_power_series_matches_product_formula(self):
        # all-V scheme: m-th term is dV^m/m! times the (m-1)-fold noise
        # operator applied to b; for b = u^(1-gamma) this telescopes to
        # u0^(1-m gamma) prod_(s<m) (1 - s gamma)
        gamma, u0 = 2, 1.3 + 0j
        f = builtin_field("power", gamma=gamma)
        o = make_oscillator("cos", 1.0)
        sch = build_scheme(o, TruncationPolicy(1.0, 6.0))
        tn, h = 0.0, 0.45
        dv = math.sin(h)
        res = step(sch, f, tn, u1(u0), h)
        want = u0
        for m in range(1, 7):
            coef = u0 ** (1 - m * gamma)
            for s in range(1, m):
                coef *= (1 - s * gamma)
            want += dv ** m / math.factorial(m) * coef
        assert res.u_next[0] == pytest.approx(want, rel=1e-13)

    def test_h_zero_is_identity(self):
        sch = build_scheme(make_oscillator("cos", 50.0), pol(4, 2))
        res = step(sch, builtin_field("linear", mu=3.0), 0.2, u1(1.5), 0.0)
        assert res.u_next[0] == 1.5
        assert all(c[0] == 0 for c in res.contributions)

    def test_negative_h_rejected(self):
        sch = build_scheme(make_oscillator("cos", 50.0), pol(2, 1))
        with pytest.raises(ValueError):
            step(sch, builtin_field("linear", mu=1.0), 0.0, u1(1.0), -0.1)

    def test_non_finite_contribution_identifies_term(self):
        f = make_field(1, lambda t, u: [u[0] * 1e308], lambda t, u: [0.0 * t])
        sch = build_scheme(make_oscillator("cos", 5.0), TruncationPolicy(2, 2))
        with pytest.raises(NumericStepError, match="term T"):
            step(sch, f, 0.0, u1(1e30), 10.0)

    def test_jet_order_capability(self):
        f = make_field(1, lambda t, u: [u[0]], lambda t, u: [u[0]], max_order=2)
        sch = build_scheme(make_oscillator("cos", 5.0), pol(4, 1))
        with pytest.raises(JetOrderError):
            step(sch, f, 0.0, u1(1.0), 0.1)


class TestHigherCorrections:
    def test_next_order_corrections_linear_case(self):
        mu, om, h = 100.0, 50.0, 0.2
        f = builtin_field("linear", mu=mu)
        o = make_oscillator("cos", om)
        outs = {}
        for kappa in (4, 5, 6):
            sch = build_scheme(o, pol(kappa, 2))
            outs[kappa] = step(sch, f, 0.0, u1(1.0), h).u_next[0]
        want5 = -mu * h * math.cos(om * h) / om ** 2
        want6 = h ** 6 / 48 + mu * math.sin(om * h) / om ** 3
        assert outs[5] - outs[4] == pytest.approx(want5, rel=1e-12)
        assert outs[6] - outs[5] == pytest.approx(want6, rel=1e-12)


class TestPhaseAveraging:
    def test_noise_free_problem_unchanged(self):
        f = make_field(1, lambda t, u: [0.7 * u[0]], lambda t, u: [0.0 * t])
        sch = build_scheme(make_oscillator("cos", 60.0, phi=1.2), pol(4, 2))
        a = step(sch, f, 0.1, u1(1.1), 0.2).u_next[0]
        b = step_phase_averaged(sch, f, 0.1, u1(1.1), 0.2).u_next[0]
        assert a == b

    def test_closed_form_average(self):
        # averaged order-(4,2) step: drift chain plus the noise-squared
        # term (1 - cos(omega h)) / (2 omega^2)
        alpha, mu, om, h = 0.3, 2.0, 100.0, 0.1
        t, u0 = 0.3, 0.9 + 0j
        f = builtin_field("nonlinear", alpha=alpha, mu=mu)
        sch = build_scheme(make_oscillator("cos", om, phi=0.77), pol(4, 2))
        got = step_phase_averaged(sch, f, t, u1(u0), h).u_next[0]
        want = (u0 + alpha * u0 * h + alpha ** 2 * u0 * h * h / 2
                + alpha ** 3 * u0 * h ** 3 / 6 + alpha ** 4 * u0 * h ** 4 / 24
                + 2 * mu * mu * u0 ** 3 * (1 - math.cos(om * h)) / (2 * om * om))
        assert got == pytest.approx(want, rel=1e-14)

    def test_monte_carlo_phase_mean(self):
        rng = np.random.default_rng(101)
        alpha, mu, om, h = 0.4, 1.5, 80.0, 0.12
        f = builtin_field("nonlinear", alpha=alpha, mu=mu)
        base = make_oscillator("cos", om)
        sch = build_scheme(base, pol(4, 2))
        analytic = step_phase_averaged(sch, f, 0.0, u1(1.0), h).u_next[0]
        n = 10000
        samples = np.empty(n, dtype=complex)
        for i, phi in enumerate(rng.uniform(0.0, 2 * math.pi, size=n)):
            o = make_oscillator("cos", om, phi=phi)
            s = build_scheme(o, pol(4, 2))
            samples[i] = step(s, f, 0.0, u1(1.0), h).u_next[0]
        mean = samples.mean()
        sem_re = samples.real.std(ddof=1) / math.sqrt(n)
        sem_im = samples.imag.std(ddof=1) / math.sqrt(n)
        assert abs(mean.real - analytic.real) <= 3 * sem_re + 1e-12
        assert abs(mean.imag - analytic.imag) <= 3 * sem_im + 1e-12


class TestSolve:
    def test_single_step_equals_step(self):
        f = builtin_field("linear", mu=10.0)
        sch = build_scheme(make_oscillator("cos", 100.0), pol(4, 2))
        traj = solve(sch, f, 0.0, u1(1.0), 0.1, 0.1)
        assert len(traj) == 2
        assert traj[-1][1][0] == step(sch, f, 0.0, u1(1.0), 0.1).u_next[0]

    def test_endpoints_included(self):
        f = builtin_field("linear", mu=1.0)
        sch = build_scheme(make_oscillator("cos", 100.0), pol(2, 2))
        traj = solve(sch, f, 0.5, u1(1.0), 0.9, 0.1)
        assert traj[0][0] == 0.5 and traj[-1][0] == pytest.approx(0.9)
        assert len(traj) == 5

    def test_step_must_divide_interval(self):
        f = builtin_field("linear", mu=1.0)
        sch = build_scheme(make_oscillator("cos", 100.0), pol(2, 2))
        with pytest.raises(ValueError):
            solve(sch, f, 0.0, u1(1.0), 1.0, 0.3)

    def test_macro_endpoint_against_exact_oracle(self):
        mu, om = 10.0, 100.0
        f = builtin_field("linear", mu=mu)
        o = make_oscillator("cos", om)
        sch = build_scheme(o, pol(4, 2))
        traj = solve(sch, f, 0.0, u1(1.0), 1.0, 0.02)
        ref = exact_exp_macro(lambda s: s, 1, mu, o, 1.0, 1.0,
                              alpha_antideriv=lambda s: s * s / 2.0)
        assert abs(traj[-1][1][0] - ref) / abs(ref) < 1e-3

    def test_drift_only_global_order(self):
        f = make_field(1, lambda t, u: [u[0]], lambda t, u: [0.0 * t])
        o = make_oscillator("cos", 100.0)
        sch = build_scheme(o, TruncationPolicy(4, 4))
        errs = []
        for h in (0.1, 0.05):
            traj = solve(sch, f, 0.0, u1(1.0), 1.0, h)
            errs.append(abs(traj[-1][1][0] - math.e))
        assert errs[0] / errs[1] == pytest.approx(16.0, rel=0.25)


class TestBounds:
    def test_first_bound_hand_values(self):
        # K = 1, ||v|| = 2 pi: h^2 + 6 pi h / omega + 4 pi^2 / omega^2
        for h, om in [(0.1, 50.0), (0.2, 200.0)]:
            b = bound_R11(BoundInputs(1.0, 2 * math.pi, h, om))
            want = h * h + 6 * math.pi * h / om + 4 * math.pi ** 2 / om ** 2
            assert b == pytest.approx(want, rel=1e-14)

    def test_second_bound_hand_values(self):
        # K = 1, ||v|| = 2 pi: 7/6 h^3 + 17 pi h^2/om + 40 pi^2 h/om^2 + 16 pi^3/om^3
        for h, om in [(0.1, 50.0), (0.2, 200.0)]:
            b = bound_R22(BoundInputs(1.0, 2 * math.pi, h, om))
            want = (7 * h ** 3 / 6 + 17 * math.pi * h * h / om
                    + 40 * math.pi ** 2 * h / om ** 2 + 16 * math.pi ** 3 / om ** 3)
            assert b == pytest.approx(want, rel=1e-14)

    def test_bounds_vanish_in_refined_limit(self):
        tiny = bound_R11(BoundInputs(1.0, 2 * math.pi, 1e-9, 1e9))
        assert tiny < 1e-8
        assert bound_R22(BoundInputs(1.0, 2 * math.pi, 1e-3, 1e6)) < \
            bound_R11(BoundInputs(1.0, 2 * math.pi, 1e-3, 1e6))

    def test_positive_inputs_required(self):
        with pytest.raises(ValueError):
            BoundInputs(0.0, 1.0, 0.1, 10.0)

    def test_step_reports_bound_for_supported_policies(self):
        f = builtin_field("linear", mu=2.0)
        o = make_oscillator("cos", 50.0)
        inp = BoundInputs(2.0, 2 * math.pi, 0.1, 50.0)
        r1 = step(build_scheme(o, TruncationPolicy(1, 1)), f, 0.0, u1(1.0), 0.1, inp)
        assert r1.bound_R == pytest.approx(bound_R11(inp))
        r2 = step(build_scheme(o, TruncationPolicy(2, 2)), f, 0.0, u1(1.0), 0.1, inp)
        assert r2.bound_R == pytest.approx(bound_R22(inp))
        with pytest.raises(ValueError):
            step(build_scheme(o, pol(4, 2)), f, 0.0, u1(1.0), 0.1, inp)

    def test_estimated_coefficient_bound_linear_case(self):
        # b = mu dominates a = u t and all derivatives on a small box
        f = builtin_field("linear", mu=10.0)
        K = estimate_coefficient_bound(f, (0.0, 0.25), np.array([1.0 + 0j]), 0.3, 1)
        assert K == pytest.approx(10.0, rel=1e-12)
        K2 = estimate_coefficient_bound(f, (0.0, 0.25), np.array([1.0 + 0j]), 0.3, 2)
        assert K2 == pytest.approx(10.0, rel=1e-12)
