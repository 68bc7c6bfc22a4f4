#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>
#include <vector>

#include "fdcr/predictor.hpp"
#include "fdcr/traffic.hpp"

using namespace fdcr;

namespace {

// Straight-line reimplementation of the forward pass with plain loops and the
// textbook sigmoid form; kept independent of the Eigen path on purpose.
double forward_oracle(const Mlp& net, const Eigen::VectorXd& x) {
    auto tsig = [](double v) { return 2.0 / (1.0 + std::exp(-2.0 * v)) - 1.0; };
    const int n = net.n_inputs();
    std::vector<double> y1(kHidden1), y2(kHidden2);
    for (int i = 0; i < kHidden1; ++i) {
        double z = net.b1(i);
        for (int k = 0; k < n; ++k) z += net.w1(i, k) * x(k);
        y1[i] = tsig(z);
    }
    for (int j = 0; j < kHidden2; ++j) {
        double z = net.b2(j);
        for (int i = 0; i < kHidden1; ++i) z += net.w2(j, i) * y1[i];
        y2[j] = tsig(z);
    }
    double z = net.b3(0);
    for (int j = 0; j < kHidden2; ++j) z += net.w3(0, j) * y2[j];
    return tsig(z);
}

Eigen::VectorXd random_pm1(int n, RngStream& rng) {
    Eigen::VectorXd x(n);
    for (int i = 0; i < n; ++i) x(i) = rng.bernoulli(0.5) ? 1.0 : -1.0;
    return x;
}

// saturating net that outputs sign(x(0))
Mlp sign_of_first_input_net(int n) {
    Mlp net = Mlp::zeros(n);
    net.w1(0, 0) = 50.0;
    net.w2(0, 0) = 50.0;
    net.w3(0, 0) = 50.0;
    return net;
}

}  // namespace

TEST_CASE("tansig") {
    CHECK(tansig(0.0) == 0.0);
    CHECK(tansig(50.0) > 1.0 - 1e-12);
    CHECK(tansig(700.0) <= 1.0);
    CHECK(tansig(-700.0) >= -1.0);
    for (double x = -5.0; x <= 5.0; x += 0.25) {
        CHECK(tansig(-x) == doctest::Approx(-tansig(x)).epsilon(1e-15));
        const double formula = 2.0 / (1.0 + std::exp(-2.0 * x)) - 1.0;
        CHECK(tansig(x) == doctest::Approx(formula).epsilon(1e-14));
    }
}

TEST_CASE("forward pass") {
    SUBCASE("all-zero parameters give raw 0 and label +1") {
        const Mlp net = Mlp::zeros(4);
        const auto p = forward(net, Eigen::VectorXd::Ones(4));
        CHECK(p.raw == 0.0);
        CHECK(p.label == 1);  // the decision boundary maps 0 to busy
    }
    SUBCASE("dimension mismatch throws") {
        const Mlp net = Mlp::zeros(4);
        CHECK_THROWS_AS(forward(net, Eigen::VectorXd::Ones(5)), std::invalid_argument);
    }
    SUBCASE("deterministic") {
        RngStream rng(8);
        const Mlp net = Mlp::random_init(6, rng);
        const Eigen::VectorXd x = random_pm1(6, rng);
        CHECK(forward(net, x).raw == forward(net, x).raw);
    }
    SUBCASE("matches the straight-line oracle to 1e-12") {
        RngStream rng(9);
        for (int trial = 0; trial < 20; ++trial) {
            const Mlp net = Mlp::random_init(3, rng);
            const Eigen::VectorXd x = random_pm1(3, rng);
            CHECK(std::abs(forward(net, x).raw - forward_oracle(net, x)) <= 1e-12);
        }
    }
}

TEST_CASE("pack/unpack round trip") {
    RngStream rng(10);
    const Mlp net = Mlp::random_init(5, rng);
    const Mlp back = unpack_params(5, pack_params(net));
    CHECK(back.w1 == net.w1);
    CHECK(back.b1 == net.b1);
    CHECK(back.w2 == net.w2);
    CHECK(back.b2 == net.b2);
    CHECK(back.w3 == net.w3);
    CHECK(back.b3 == net.b3);
    CHECK(net.n_params() == 15 * 5 + 15 + 20 * 15 + 20 + 20 + 1);
}

TEST_CASE("jacobian matches central finite differences") {
    RngStream rng(11);
    const int n = 3;
    const Mlp net = Mlp::random_init(n, rng);
    Eigen::MatrixXd inputs(n, 5);
    for (int c = 0; c < 5; ++c) inputs.col(c) = random_pm1(n, rng);

    const Eigen::MatrixXd jac = output_jacobian(net, inputs);
    const Eigen::VectorXd theta = pack_params(net);
    const double h = 1e-6;
    Eigen::MatrixXd fd(inputs.cols(), theta.size());
    for (Eigen::Index p = 0; p < theta.size(); ++p) {
        Eigen::VectorXd tp = theta, tm = theta;
        tp(p) += h;
        tm(p) -= h;
        const Mlp net_p = unpack_params(n, tp);
        const Mlp net_m = unpack_params(n, tm);
        for (Eigen::Index c = 0; c < inputs.cols(); ++c) {
            fd(c, p) =
                (forward(net_p, inputs.col(c)).raw - forward(net_m, inputs.col(c)).raw) /
                (2.0 * h);
        }
    }
    CHECK((jac - fd).norm() / fd.norm() <= 1e-4);
    for (Eigen::Index c = 0; c < fd.rows(); ++c) {
        for (Eigen::Index p = 0; p < fd.cols(); ++p) {
            const double denom = std::max(std::abs(fd(c, p)), 1e-7);
            CHECK(std::abs(jac(c, p) - fd(c, p)) / denom <= 1e-4);
        }
    }
}

TEST_CASE("training data windows") {
    // labels: 12 idle, 4 busy, 12 idle, ...
    std::vector<std::int8_t> labels;
    for (int rep = 0; rep < 40; ++rep) {
        for (int i = 0; i < 12; ++i) labels.push_back(-1);
        for (int i = 0; i < 4; ++i) labels.push_back(1);
    }
    RngStream rng(12);
    const auto set = make_training_data(labels, 8, 4, 500, rng);
    REQUIRE(set.count() == 500);
    for (long c = 0; c < set.count(); ++c) {
        const auto s = set.starts[c];
        bool any_busy = false;
        for (int k = 0; k < 4; ++k) any_busy |= labels[s + 8 + k] > 0;
        CHECK(set.targets(c) == (any_busy ? 1.0 : -1.0));
        CHECK(set.truth(c) == set.targets(c));  // perfect sensing
        for (int k = 0; k < 8; ++k) CHECK(set.inputs(k, c) == double(labels[s + k]));
    }

    SUBCASE("timeline too short") {
        const std::vector<std::int8_t> tiny(10, -1);
        RngStream r2(1);
        CHECK_THROWS_AS(make_training_data(tiny, 8, 4, 10, r2), std::invalid_argument);
    }
    SUBCASE("single busy slot in the tail window forces target +1") {
        std::vector<std::int8_t> seq(20, -1);
        seq[19] = 1;
        RngStream r2(2);
        const auto one = make_training_data(seq, 16, 4, 50, r2);
        for (long c = 0; c < one.count(); ++c) {
            if (one.starts[c] == 0)
                CHECK(one.targets(c) == 1.0);
        }
    }
}

TEST_CASE("idle-target fraction tracks the timeline statistics") {
    TrafficModel m;
    const auto tl = sample_timeline(m, 200.0, 1e-3, 21);
    const int n = 75, mm = 10;
    // direct count over every window position
    long idle = 0, total = 0;
    long run = 0;
    std::vector<long> idle_run(tl.n_slots());
    for (std::size_t i = 0; i < tl.n_slots(); ++i) {
        run = tl.slots[i] < 0 ? run + 1 : 0;
        idle_run[i] = run;
    }
    for (std::size_t s = 0; s + n + mm <= tl.n_slots(); ++s) {
        ++total;
        idle += idle_run[s + n + mm - 1] >= mm;
    }
    const double direct = static_cast<double>(idle) / total;

    RngStream rng(22);
    const auto set = make_training_data(tl.slots, n, mm, 2000, rng);
    long neg = 0;
    for (long c = 0; c < set.count(); ++c) neg += set.targets(c) < 0;
    CHECK(std::abs(static_cast<double>(neg) / set.count() - direct) <= 0.05);
}

TEST_CASE("evaluate counting") {
    SUBCASE("direct arithmetic from counts") {
        const auto s = stats_from_counts(100, 60, 4, 10);
        CHECK(s.p_e == doctest::Approx(0.1).epsilon(1e-12));
        CHECK(*s.p_pf == doctest::Approx(4.0 / 60.0).epsilon(1e-12));
        CHECK(*s.p_pd == doctest::Approx(0.85).epsilon(1e-12));
    }
    SUBCASE("stored probabilities always recompute from the raw counts") {
        RngStream rng(40);
        for (int trial = 0; trial < 500; ++trial) {
            const long n_tt = 1 + static_cast<long>(rng.below(1000));
            const long n_0 = static_cast<long>(rng.below(n_tt + 1));
            const long n_01 = static_cast<long>(rng.below(n_0 + 1));
            const long busy = n_tt - n_0;
            const long miss = static_cast<long>(rng.below(busy + 1));
            const auto s = stats_from_counts(n_tt, n_0, n_01, n_01 + miss);
            CHECK(s.p_e == static_cast<double>(n_01 + miss) / n_tt);
            CHECK(s.p_e >= 0.0);
            CHECK(s.p_e <= 1.0);
            if (s.p_pf) {
                CHECK(*s.p_pf == static_cast<double>(n_01) / n_0);
                CHECK(*s.p_pf >= 0.0);
                CHECK(*s.p_pf <= 1.0);
            }
            if (s.p_pd) {
                CHECK(*s.p_pd == 1.0 - static_cast<double>(miss) / busy);
                CHECK(*s.p_pd >= 0.0);
                CHECK(*s.p_pd <= 1.0);
            }
        }
    }
    SUBCASE("undefined ratios are flagged, not zeroed") {
        const auto s = stats_from_counts(50, 0, 0, 5);
        CHECK_FALSE(s.p_pf.has_value());
        CHECK(s.p_pd.has_value());
        const auto t = stats_from_counts(50, 50, 3, 3);
        CHECK_FALSE(t.p_pd.has_value());
        CHECK(t.p_pf.has_value());
    }
    SUBCASE("counted through a real net") {
        // net predicts sign of the first window element; craft truths to hit
        // n_tt=100, n_0=60, n_01=4, n_e=10 exactly
        const int n = 6;
        const Mlp net = sign_of_first_input_net(n);
        Eigen::MatrixXd windows = Eigen::MatrixXd::Constant(n, 100, -1.0);
        Eigen::VectorXd truth(100);
        // 56 idle predicted idle, 4 idle predicted busy, 34 busy predicted
        // busy, 6 busy predicted idle
        for (int c = 0; c < 100; ++c) {
            const bool pred_busy = (c >= 56 && c < 60) || (c >= 60 && c < 94);
            windows(0, c) = pred_busy ? 1.0 : -1.0;
            truth(c) = c < 60 ? -1.0 : 1.0;
        }
        const auto s = evaluate(net, windows, truth);
        CHECK(s.n_tt == 100);
        CHECK(s.n_0 == 60);
        CHECK(s.n_01 == 4);
        CHECK(s.n_e == 10);
        CHECK(s.p_e == doctest::Approx(0.1));
        CHECK(*s.p_pf == doctest::Approx(4.0 / 60.0));
        CHECK(*s.p_pd == doctest::Approx(0.85));
    }
    SUBCASE("perfect predictor") {
        const int n = 6;
        const Mlp net = sign_of_first_input_net(n);
        Eigen::MatrixXd windows = Eigen::MatrixXd::Constant(n, 40, -1.0);
        Eigen::VectorXd truth(40);
        for (int c = 0; c < 40; ++c) {
            windows(0, c) = c % 2 == 0 ? 1.0 : -1.0;
            truth(c) = windows(0, c);
        }
        const auto s = evaluate(net, windows, truth);
        CHECK(s.n_e == 0);
        CHECK(s.n_01 == 0);
        CHECK(s.p_e == 0.0);
        CHECK(*s.p_pf == 0.0);
        CHECK(*s.p_pd == 1.0);
    }
}

TEST_CASE("train_lm") {
    SUBCASE("zero epoch budget returns the net unchanged") {
        RngStream rng(30);
        const Mlp net = Mlp::random_init(5, rng);
        TrainingSet data;
        data.n_inputs = 5;
        data.m_slots = 1;
        data.inputs = Eigen::MatrixXd::Ones(5, 10);
        data.targets = Eigen::VectorXd::Ones(10);
        data.truth = data.targets;
        TrainOptions opts;
        opts.max_epochs = 0;
        const auto res = train_lm(net, data, opts);
        CHECK(res.stop == TrainStop::ZeroBudget);
        CHECK(pack_params(res.net) == pack_params(net));
        CHECK(res.final_mse == res.initial_mse);
    }

    SUBCASE("learns a linearly separable rule") {
        const int n = 5;
        RngStream rng(31);
        TrainingSet data;
        data.n_inputs = n;
        data.m_slots = 1;
        data.inputs.resize(n, 400);
        data.targets.resize(400);
        for (int c = 0; c < 400; ++c) {
            data.inputs.col(c) = random_pm1(n, rng);
            data.targets(c) = data.inputs(0, c);  // sign of the first element
        }
        data.truth = data.targets;

        const Mlp start = Mlp::random_init(n, rng);
        TrainOptions opts;
        opts.max_epochs = 60;
        const auto res = train_lm(start, data, opts);
        CHECK(res.final_mse <= res.initial_mse);

        long correct = 0;
        const int n_test = 500;
        for (int t = 0; t < n_test; ++t) {
            const Eigen::VectorXd x = random_pm1(n, rng);
            correct += forward(res.net, x).label == (x(0) > 0 ? 1 : -1);
        }
        CHECK(static_cast<double>(correct) / n_test >= 0.99);

        // accepted epochs never increase the training MSE
        for (std::size_t i = 1; i < res.trace.size(); ++i)
            CHECK(res.trace[i].train_mse <= res.trace[i - 1].train_mse);
    }

    SUBCASE("damping ceiling reports no progress and keeps the net") {
        RngStream rng(32);
        const Mlp net = Mlp::random_init(4, rng);
        TrainingSet data;
        data.n_inputs = 4;
        data.m_slots = 1;
        data.inputs.resize(4, 20);
        data.targets.resize(20);
        for (int c = 0; c < 20; ++c) {
            data.inputs.col(c) = random_pm1(4, rng);
            data.targets(c) = data.inputs(0, c);
        }
        data.truth = data.targets;
        TrainOptions opts;
        opts.mu_init = 1e12;  // already past the ceiling
        opts.mu_max = 1e10;
        const auto res = train_lm(net, data, opts);
        CHECK(res.stop == TrainStop::NoProgress);
        CHECK(pack_params(res.net) == pack_params(net));
        CHECK(res.final_mse == res.initial_mse);
        CHECK(res.trace.empty());
    }

    SUBCASE("empty data throws") {
        const Mlp net = Mlp::zeros(3);
        TrainingSet data;
        data.inputs = Eigen::MatrixXd(3, 0);
        data.targets = Eigen::VectorXd(0);
        CHECK_THROWS_AS(train_lm(net, data), std::invalid_argument);
    }
}

TEST_CASE("mlp file round trip is bit exact") {
    RngStream rng(33);
    const Mlp net = Mlp::random_init(7, rng);
    std::stringstream ss;
    save_mlp(ss, net, 987654321, {{"note", "round trip"}});
    const MlpFile file = load_mlp(ss);
    CHECK(file.seed == 987654321);
    CHECK(file.meta.at("note") == "round trip");
    CHECK(file.net.w1 == net.w1);
    CHECK(file.net.b1 == net.b1);
    CHECK(file.net.w2 == net.w2);
    CHECK(file.net.b2 == net.b2);
    CHECK(file.net.w3 == net.w3);
    CHECK(file.net.b3 == net.b3);

    SUBCASE("corrupted header is rejected") {
        std::stringstream bad("fdcr-mlp v2\n");
        CHECK_THROWS_AS(load_mlp(bad), std::invalid_argument);
    }
}
