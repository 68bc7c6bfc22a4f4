#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "fdcr/analytic.hpp"

using namespace fdcr;

namespace {

Scenario reference_scenario(int m = 10) {
    RadioParams p;
    p.chi = 0.1;
    p.snr_ss = db_to_linear(10.0);
    p.snr_sp = db_to_linear(9.0);
    p.omega_s = 6e6;
    p.t_s = 1e-3;
    p.eps_over_sigma2 = threshold_for_target_pf(p, 0.1, true);
    Scenario s;
    s.lambda0 = 0.1;
    s.lambda1 = 0.1;
    s.sensing = sensing_probs(p);
    s.p_pf = 0.05;
    s.p_pd = 0.9;
    s.frame = FrameConfig{m, 1e-3};
    s.rate = rates(p);
    return s;
}

Scenario random_scenario(RngStream& rng) {
    Scenario s;
    s.lambda0 = rng.uniform(0.01, 1.0);
    s.lambda1 = rng.uniform(0.01, 1.0);
    s.sensing.p_f = rng.next_double();
    s.sensing.p_d = rng.next_double();
    s.sensing.p_f_si = rng.next_double();
    s.sensing.p_d_si = rng.next_double();
    s.p_pf = rng.next_double();
    s.p_pd = rng.next_double();
    s.frame.m_slots = 2 + static_cast<int>(rng.below(29));
    s.frame.t_s = rng.uniform(1e-4, 5e-3);
    s.rate = Rates{rng.uniform(0.0, 5.0), rng.uniform(0.0, 2.0), rng.uniform(0.0, 5.0),
                   rng.uniform(0.0, 2.0)};
    return s;
}

}  // namespace

TEST_CASE("case C1 occurrence probability, direct arithmetic") {
    Scenario s = reference_scenario();
    s.p_pf = 0.1;
    s.sensing.p_f = 0.05;
    s.frame = FrameConfig{10, 1e-3};  // Tt = 9 ms
    const auto pr = case_probs(s);
    CHECK(pr[0] == doctest::Approx(0.5 * 0.9 * 0.95 * std::exp(-0.09)).epsilon(1e-12));
    CHECK(pr[0] == doctest::Approx(0.39071).epsilon(1e-4));
}

TEST_CASE("occurrence probabilities always partition") {
    RngStream rng(101);
    for (int trial = 0; trial < 1000; ++trial) {
        const auto pr = case_probs(random_scenario(rng));
        double sum = 0.0;
        for (const double p : pr) {
            CHECK(p >= 0.0);
            CHECK(p <= 1.0);
            sum += p;
        }
        CHECK(std::abs(sum - 1.0) <= 1e-12);
    }
}

TEST_CASE("C2 vanishes under perfect prediction and sensing") {
    Scenario s = reference_scenario();
    s.p_pf = 0.0;
    s.sensing.p_f = 0.0;
    CHECK(case_probs(s)[1] == 0.0);
}

TEST_CASE("throughput formulas at the reference operating point") {
    Scenario s = reference_scenario(10);
    const auto cb = case_breakdown(s);
    // full-duplex all-idle case
    CHECK(cb.r[0] == doctest::Approx(2.0 * 0.9 * s.rate.d0_tr).epsilon(1e-12));
    CHECK(cb.r[0] == doctest::Approx(4.6530).epsilon(1e-4));

    // with no in-transmission false alarms the TS case reaches (M-1)/M d0_ts
    Scenario clean = s;
    clean.sensing.p_f_si = 0.0;
    const auto cb2 = case_breakdown(clean);
    CHECK(cb2.r[1] == doctest::Approx(0.9 * clean.rate.d0_ts).epsilon(1e-12));
    CHECK(cb2.r[1] == doctest::Approx(3.1135).epsilon(1e-4));
}

TEST_CASE("binomial slot sums collapse to the closed mean") {
    RngStream rng(102);
    for (int trial = 0; trial < 200; ++trial) {
        Scenario s = random_scenario(rng);
        s.sensing.p_d_si = 1.0;  // keep only the idle-sense sum in r[1]
        const auto cb = case_breakdown(s);
        const int m = s.frame.m_slots;
        const double expect = (m - 1) * (1.0 - s.sensing.p_f_si) / m * s.rate.d0_ts;
        CHECK(cb.r[1] == doctest::Approx(expect).epsilon(1e-10));
    }
}

TEST_CASE("truncated exponential mean") {
    // small-window limit: E -> Tt/2
    const double tt = 1e-5;  // Tt/lambda = 1e-4 at lambda 0.1
    CHECK(truncated_exp_mean(0.1, tt) ==
          doctest::Approx(tt / 2.0).epsilon(1e-3));
    // long-window limit: E -> lambda
    CHECK(truncated_exp_mean(0.1, 1e3) == doctest::Approx(0.1).epsilon(1e-9));
    // monotone in the cutoff
    double prev = 0.0;
    for (double c = 0.01; c < 0.5; c += 0.01) {
        const double e = truncated_exp_mean(0.1, c);
        CHECK(e > prev);
        CHECK(e < c);
        prev = e;
    }
}

TEST_CASE("collision terms never exceed their occurrence probabilities") {
    RngStream rng(103);
    for (int trial = 0; trial < 500; ++trial) {
        const auto cb = case_breakdown(random_scenario(rng));
        for (int i = 0; i < 8; ++i) {
            CHECK(cb.pr_c[i] <= cb.pr[i] + 1e-15);
            CHECK(cb.pr_c[i] >= 0.0);
        }
        CHECK(cb.collision_prob <= 1.0 + 1e-12);
    }
}

TEST_CASE("perfect in-transmission detection removes the TS collision terms") {
    Scenario s = reference_scenario();
    s.sensing.p_d_si = 1.0;
    const auto cb = case_breakdown(s);
    CHECK(cb.pr_c[3] == 0.0);
    CHECK(cb.pr_c[5] == 0.0);
    CHECK(cb.pr_c[7] == 0.0);
    CHECK(cb.collision_prob == doctest::Approx(cb.pr[2] + cb.pr[4] + cb.pr[6]));
}

TEST_CASE("perfect prediction detection removes the TR return collisions") {
    Scenario s = reference_scenario();
    s.p_pd = 1.0;
    const auto cb = case_breakdown(s);
    CHECK(cb.pr[2] == 0.0);  // C3
    CHECK(cb.pr[4] == 0.0);  // C5
    CHECK(cb.pr[6] == 0.0);  // C7
}

TEST_CASE("degenerate substitutions reproduce hand-written baselines") {
    RngStream rng(104);
    for (int trial = 0; trial < 200; ++trial) {
        const Scenario base = random_scenario(rng);
        const double mu0 = base.lambda0 / (base.lambda0 + base.lambda1);
        const double mu1 = 1.0 - mu0;
        const double e0 = std::exp(-base.frame.t_t() / base.lambda0);
        const double e1 = std::exp(-base.frame.t_t() / base.lambda1);
        const double pbar_f = 1.0 - base.sensing.p_f;
        const double pbar_d = 1.0 - base.sensing.p_d;

        // TR-only: the predictor always says idle
        const auto tr = case_breakdown(tr_only(base));
        CHECK(tr.pr[0] == doctest::Approx(mu0 * pbar_f * e0).epsilon(1e-12));
        CHECK(tr.pr[1] == doctest::Approx(mu0 * base.sensing.p_f * e0).epsilon(1e-12));
        CHECK(tr.pr[2] == doctest::Approx(mu0 * pbar_f * (1 - e0)).epsilon(1e-12));
        CHECK(tr.pr[3] == doctest::Approx(mu0 * base.sensing.p_f * (1 - e0)).epsilon(1e-12));
        CHECK(tr.pr[4] == doctest::Approx(mu1 * pbar_d * e1).epsilon(1e-12));
        CHECK(tr.pr[5] == doctest::Approx(mu1 * base.sensing.p_d * e1).epsilon(1e-12));
        CHECK(tr.pr[6] == doctest::Approx(mu1 * pbar_d * (1 - e1)).epsilon(1e-12));
        CHECK(tr.pr[7] == doctest::Approx(mu1 * base.sensing.p_d * (1 - e1)).epsilon(1e-12));

        // TS-only: the TR cases disappear entirely
        const auto ts = case_breakdown(ts_only(base));
        CHECK(ts.pr[0] == 0.0);
        CHECK(ts.pr[2] == 0.0);
        CHECK(ts.pr[4] == 0.0);
        CHECK(ts.pr[6] == 0.0);
        CHECK(ts.pr[1] == doctest::Approx(mu0 * e0).epsilon(1e-12));
        CHECK(ts.pr[3] == doctest::Approx(mu0 * (1 - e0)).epsilon(1e-12));
        CHECK(ts.pr[5] == doctest::Approx(mu1 * e1).epsilon(1e-12));
        CHECK(ts.pr[7] == doctest::Approx(mu1 * (1 - e1)).epsilon(1e-12));
    }
}

TEST_CASE("collision probability grows with M under the reference parameters") {
    double prev_nn = -1.0, prev_tr = -1.0, prev_ts = -1.0;
    for (int m = 2; m <= 30; ++m) {
        const Scenario nn = reference_scenario(m);
        const double c_nn = collision_prob(nn);
        const double c_tr = collision_prob(tr_only(nn));
        const double c_ts = collision_prob(ts_only(nn));
        CHECK(c_nn >= prev_nn - 1e-15);
        CHECK(c_tr >= prev_tr - 1e-15);
        CHECK(c_ts >= prev_ts - 1e-15);
        CHECK(c_tr >= c_nn);
        CHECK(c_nn >= c_ts);
        prev_nn = c_nn;
        prev_tr = c_tr;
        prev_ts = c_ts;
    }
}

TEST_CASE("exact C4 integration stays near the plug-in approximation") {
    Scenario s = reference_scenario(10);
    s.sensing.p_f_si = 0.1;
    s.sensing.p_d_si = 0.9;
    const auto cb = case_breakdown(s);
    const double exact = expected_r4_exact(s);
    CHECK(cb.r[3] == doctest::Approx(exact).epsilon(0.25));
    CHECK(exact > 0.0);
}

TEST_CASE("all-idle limit keeps only the full-duplex case") {
    Scenario s = reference_scenario(10);
    s.lambda1 = 1e-9;  // ON states vanish
    s.lambda0 = 1e6;   // OFF survives any frame
    s.p_pf = 0.0;
    s.sensing.p_f = 0.0;
    const auto cb = case_breakdown(s);
    CHECK(cb.pr[0] == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(avg_throughput(s) == doctest::Approx(cb.r[0]).epsilon(1e-6));
}

TEST_CASE("scenario validation") {
    Scenario s = reference_scenario();
    s.p_pf = 1.5;
    CHECK_THROWS_AS(s.validate(), std::invalid_argument);
    s = reference_scenario();
    s.lambda0 = 0.0;
    CHECK_THROWS_AS(case_breakdown(s), std::invalid_argument);
}
