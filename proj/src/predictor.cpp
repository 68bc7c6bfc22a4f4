#include "fdcr/predictor.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "fdcr/textio.hpp"

namespace fdcr {

double tansig(double x) { return std::tanh(x); }

int Mlp::n_params() const {
    return static_cast<int>(w1.size() + b1.size() + w2.size() + b2.size() +
                            w3.size() + b3.size());
}

void Mlp::validate() const {
    if (w1.rows() != kHidden1 || w1.cols() < 1 || b1.size() != kHidden1 ||
        w2.rows() != kHidden2 || w2.cols() != kHidden1 || b2.size() != kHidden2 ||
        w3.rows() != 1 || w3.cols() != kHidden2 || b3.size() != 1) {
        throw std::invalid_argument("mlp: weight shapes must match the N-15-20-1 layout");
    }
    if (!(w1.allFinite() && b1.allFinite() && w2.allFinite() && b2.allFinite() &&
          w3.allFinite() && b3.allFinite())) {
        throw std::invalid_argument("mlp: parameters must be finite");
    }
}

Mlp Mlp::zeros(int n_inputs) {
    if (n_inputs < 1) throw std::invalid_argument("mlp: n_inputs must be >= 1");
    Mlp net;
    net.w1 = Eigen::MatrixXd::Zero(kHidden1, n_inputs);
    net.b1 = Eigen::VectorXd::Zero(kHidden1);
    net.w2 = Eigen::MatrixXd::Zero(kHidden2, kHidden1);
    net.b2 = Eigen::VectorXd::Zero(kHidden2);
    net.w3 = Eigen::MatrixXd::Zero(1, kHidden2);
    net.b3 = Eigen::VectorXd::Zero(1);
    return net;
}

Mlp Mlp::random_init(int n_inputs, RngStream& rng) {
    Mlp net = zeros(n_inputs);
    auto fill = [&rng](auto& m) {
        for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-0.5, 0.5);
    };
    fill(net.w1);
    fill(net.b1);
    fill(net.w2);
    fill(net.b2);
    fill(net.w3);
    fill(net.b3);
    return net;
}

Prediction forward(const Mlp& net, const Eigen::Ref<const Eigen::VectorXd>& x) {
    if (x.size() != net.w1.cols())
        throw std::invalid_argument("forward: input length does not match the net");
    const Eigen::VectorXd y1 = (net.w1 * x + net.b1).array().tanh();
    const Eigen::VectorXd y2 = (net.w2 * y1 + net.b2).array().tanh();
    const double raw = std::tanh((net.w3 * y2)(0) + net.b3(0));
    return {raw, raw < 0.0 ? std::int8_t{-1} : std::int8_t{1}};
}

Eigen::VectorXd pack_params(const Mlp& net) {
    net.validate();
    Eigen::VectorXd theta(net.n_params());
    Eigen::Index off = 0;
    const int n = net.n_inputs();
    for (int i = 0; i < kHidden1; ++i)
        for (int k = 0; k < n; ++k) theta(off++) = net.w1(i, k);
    for (int i = 0; i < kHidden1; ++i) theta(off++) = net.b1(i);
    for (int j = 0; j < kHidden2; ++j)
        for (int i = 0; i < kHidden1; ++i) theta(off++) = net.w2(j, i);
    for (int j = 0; j < kHidden2; ++j) theta(off++) = net.b2(j);
    for (int j = 0; j < kHidden2; ++j) theta(off++) = net.w3(0, j);
    theta(off++) = net.b3(0);
    return theta;
}

Mlp unpack_params(int n_inputs, const Eigen::Ref<const Eigen::VectorXd>& theta) {
    Mlp net = Mlp::zeros(n_inputs);
    if (theta.size() != net.n_params())
        throw std::invalid_argument("unpack_params: wrong parameter count");
    Eigen::Index off = 0;
    for (int i = 0; i < kHidden1; ++i)
        for (int k = 0; k < n_inputs; ++k) net.w1(i, k) = theta(off++);
    for (int i = 0; i < kHidden1; ++i) net.b1(i) = theta(off++);
    for (int j = 0; j < kHidden2; ++j)
        for (int i = 0; i < kHidden1; ++i) net.w2(j, i) = theta(off++);
    for (int j = 0; j < kHidden2; ++j) net.b2(j) = theta(off++);
    for (int j = 0; j < kHidden2; ++j) net.w3(0, j) = theta(off++);
    net.b3(0) = theta(off++);
    return net;
}

Eigen::MatrixXd output_jacobian(const Mlp& net, const Eigen::MatrixXd& inputs) {
    net.validate();
    const int n = net.n_inputs();
    if (inputs.rows() != n)
        throw std::invalid_argument("output_jacobian: input rows must equal N");
    const long count = static_cast<long>(inputs.cols());
    Eigen::MatrixXd jac(count, net.n_params());

    Eigen::VectorXd y1(kHidden1), y2(kHidden2), d1(kHidden1), d2(kHidden2);
    for (long c = 0; c < count; ++c) {
        const auto x = inputs.col(c);
        y1 = (net.w1 * x + net.b1).array().tanh();
        y2 = (net.w2 * y1 + net.b2).array().tanh();
        const double y3 = std::tanh((net.w3 * y2)(0) + net.b3(0));
        const double d3 = 1.0 - y3 * y3;
        d2 = (1.0 - y2.array().square()) * (net.w3.transpose() * d3).array();
        d1 = (1.0 - y1.array().square()) * (net.w2.transpose() * d2).array();

        Eigen::Index off = 0;
        for (int i = 0; i < kHidden1; ++i)
            for (int k = 0; k < n; ++k) jac(c, off++) = d1(i) * x(k);
        for (int i = 0; i < kHidden1; ++i) jac(c, off++) = d1(i);
        for (int j = 0; j < kHidden2; ++j)
            for (int i = 0; i < kHidden1; ++i) jac(c, off++) = d2(j) * y1(i);
        for (int j = 0; j < kHidden2; ++j) jac(c, off++) = d2(j);
        for (int j = 0; j < kHidden2; ++j) jac(c, off++) = d3 * y2(j);
        jac(c, off++) = d3;
    }
    return jac;
}

TrainingSet make_training_data(const std::vector<std::int8_t>& true_labels,
                               int n_inputs, int m_slots, long count,
                               RngStream& rng, const SensingProbs* sensing,
                               bool with_si) {
    if (n_inputs < 1 || m_slots < 1)
        throw std::invalid_argument("make_training_data: need n_inputs >= 1 and m_slots >= 1");
    if (count < 1) throw std::invalid_argument("make_training_data: count must be >= 1");
    const std::size_t window = static_cast<std::size_t>(n_inputs) + m_slots;
    if (true_labels.size() < window)
        throw std::invalid_argument("make_training_data: timeline shorter than N+M slots");

    TrainingSet set;
    set.n_inputs = n_inputs;
    set.m_slots = m_slots;
    set.inputs.resize(n_inputs, count);
    set.targets.resize(count);
    set.truth.resize(count);
    set.starts.resize(count);

    const std::uint64_t n_starts = true_labels.size() - window + 1;
    for (long c = 0; c < count; ++c) {
        const auto s = static_cast<std::size_t>(rng.below(n_starts));
        set.starts[c] = s;
        for (int k = 0; k < n_inputs; ++k) {
            const std::int8_t lab = sensing
                ? draw_sensing(true_labels[s + k], *sensing, with_si, rng)
                : true_labels[s + k];
            set.inputs(k, c) = lab;
        }
        int idle_true = 0, idle_sensed = 0;
        for (int k = 0; k < m_slots; ++k) {
            const std::int8_t truth = true_labels[s + n_inputs + k];
            const std::int8_t lab =
                sensing ? draw_sensing(truth, *sensing, with_si, rng) : truth;
            if (truth < 0) ++idle_true;
            if (lab < 0) ++idle_sensed;
        }
        // target is idle only when every one of the next M slots looks idle
        set.targets(c) = idle_sensed >= m_slots ? -1.0 : 1.0;
        set.truth(c) = idle_true >= m_slots ? -1.0 : 1.0;
    }
    return set;
}

const char* to_string(TrainStop s) {
    switch (s) {
        case TrainStop::ZeroBudget: return "zero-budget";
        case TrainStop::LossGoal: return "loss-goal";
        case TrainStop::MaxEpochs: return "max-epochs";
        case TrainStop::ValidationPatience: return "validation-patience";
        case TrainStop::NoProgress: return "no-progress";
    }
    return "?";
}

namespace {

double mse_of(const Mlp& net, const Eigen::MatrixXd& x, const Eigen::VectorXd& t) {
    double acc = 0.0;
    for (long c = 0; c < x.cols(); ++c) {
        const double r = t(c) - forward(net, x.col(c)).raw;
        acc += r * r;
    }
    return acc / static_cast<double>(x.cols());
}

}  // namespace

TrainResult train_lm(const Mlp& start, const TrainingSet& data, const TrainOptions& opts) {
    start.validate();
    if (data.count() < 1) throw std::invalid_argument("train_lm: empty training set");
    if (data.inputs.rows() != start.w1.cols())
        throw std::invalid_argument("train_lm: data width does not match the net");

    const long total = data.count();
    long n_val = static_cast<long>(std::floor(opts.val_fraction * total));
    if (total - n_val < 1) n_val = total - 1;
    if (n_val < 0) n_val = 0;
    const long n_tr = total - n_val;

    const Eigen::MatrixXd x_tr = data.inputs.leftCols(n_tr);
    const Eigen::VectorXd t_tr = data.targets.head(n_tr);
    const Eigen::MatrixXd x_val = data.inputs.rightCols(n_val);
    const Eigen::VectorXd t_val = data.targets.tail(n_val);

    TrainResult res;
    res.net = start;
    res.initial_mse = mse_of(res.net, x_tr, t_tr);
    res.final_mse = res.initial_mse;
    if (opts.max_epochs <= 0) {
        res.stop = TrainStop::ZeroBudget;
        return res;
    }

    const int n_params = start.n_params();
    double mu = opts.mu_init;
    double train_mse = res.initial_mse;
    double best_val = n_val > 0 ? mse_of(res.net, x_val, t_val) : 0.0;
    Mlp best_net = res.net;
    int since_best = 0;
    res.stop = TrainStop::MaxEpochs;

    Eigen::VectorXd resid(n_tr);
    for (int epoch = 1; epoch <= opts.max_epochs; ++epoch) {
        const Eigen::MatrixXd jac = output_jacobian(res.net, x_tr);
        for (long c = 0; c < n_tr; ++c) resid(c) = t_tr(c) - forward(res.net, x_tr.col(c)).raw;

        Eigen::MatrixXd jtj = Eigen::MatrixXd::Zero(n_params, n_params);
        jtj.selfadjointView<Eigen::Lower>().rankUpdate(jac.transpose());
        const Eigen::VectorXd jte = jac.transpose() * resid;
        const Eigen::VectorXd theta = pack_params(res.net);

        bool accepted = false;
        while (!accepted && mu <= opts.mu_max) {
            Eigen::MatrixXd damped = jtj;
            damped.diagonal().array() += mu;
            const Eigen::LDLT<Eigen::MatrixXd, Eigen::Lower> ldlt(damped);
            if (ldlt.info() == Eigen::Success) {
                const Eigen::VectorXd step = ldlt.solve(jte);
                if (step.allFinite()) {
                    const Mlp cand = unpack_params(start.n_inputs(), theta + step);
                    const double cand_mse = mse_of(cand, x_tr, t_tr);
                    if (cand_mse < train_mse) {
                        res.net = cand;
                        train_mse = cand_mse;
                        mu = std::max(mu * opts.mu_down, 1e-20);
                        accepted = true;
                        break;
                    }
                }
            }
            mu *= opts.mu_up;
        }
        if (!accepted) {
            res.stop = TrainStop::NoProgress;
            break;
        }

        double val_mse = 0.0;
        bool stop_now = false;
        if (n_val > 0) {
            val_mse = mse_of(res.net, x_val, t_val);
            if (val_mse < best_val) {
                best_val = val_mse;
                best_net = res.net;
                since_best = 0;
            } else if (++since_best >= opts.patience) {
                res.stop = TrainStop::ValidationPatience;
                stop_now = true;
            }
        }
        res.trace.push_back({epoch, mu, train_mse, val_mse});
        if (stop_now) break;
        if (train_mse <= opts.loss_goal) {
            res.stop = TrainStop::LossGoal;
            break;
        }
    }

    // hand back the best-validation snapshot when a split was in use
    if (n_val > 0) res.net = best_net;
    res.final_mse = mse_of(res.net, x_tr, t_tr);
    return res;
}

PredictionStats stats_from_counts(long n_tt, long n_0, long n_01, long n_e) {
    PredictionStats s;
    s.n_tt = n_tt;
    s.n_0 = n_0;
    s.n_01 = n_01;
    s.n_e = n_e;
    s.p_e = n_tt > 0 ? static_cast<double>(n_e) / n_tt : 0.0;
    if (n_0 > 0) s.p_pf = static_cast<double>(n_01) / n_0;
    if (n_tt - n_0 > 0)
        s.p_pd = 1.0 - static_cast<double>(n_e - n_01) / static_cast<double>(n_tt - n_0);
    return s;
}

PredictionStats evaluate(const Mlp& net, const Eigen::MatrixXd& windows,
                         const Eigen::VectorXd& truth) {
    if (windows.cols() != truth.size())
        throw std::invalid_argument("evaluate: window/truth count mismatch");
    if (windows.cols() < 1) throw std::invalid_argument("evaluate: no windows");
    long n0 = 0, n01 = 0, ne = 0;
    for (long c = 0; c < windows.cols(); ++c) {
        const std::int8_t pred = forward(net, windows.col(c)).label;
        const bool truth_idle = truth(c) < 0.0;
        if (truth_idle) {
            ++n0;
            if (pred > 0) ++n01;
        }
        if (pred != (truth_idle ? -1 : 1)) ++ne;
    }
    return stats_from_counts(windows.cols(), n0, n01, ne);
}

namespace {

void write_block(std::ostream& os, const char* name, const double* data, Eigen::Index n,
                 Eigen::Index per_line) {
    os << name << "\n";
    for (Eigen::Index i = 0; i < n; ++i) {
        os << format_double(data[i]);
        os << (((i + 1) % per_line == 0 || i + 1 == n) ? '\n' : ' ');
    }
}

void read_block(std::istream& is, const char* name, double* data, Eigen::Index n) {
    std::string tok;
    if (!(is >> tok) || tok != name)
        throw std::invalid_argument("mlp file: expected block " + std::string(name));
    for (Eigen::Index i = 0; i < n; ++i) {
        if (!(is >> tok)) throw std::invalid_argument("mlp file: truncated block");
        data[i] = parse_double(tok);
    }
}

}  // namespace

void save_mlp(std::ostream& os, const Mlp& net, std::uint64_t seed,
              const std::map<std::string, std::string>& meta) {
    net.validate();
    os << "fdcr-mlp v1\n";
    os << "n " << net.n_inputs() << "\n";
    os << "h1 " << kHidden1 << "\n";
    os << "h2 " << kHidden2 << "\n";
    os << "seed " << seed << "\n";
    for (const auto& [k, v] : meta) os << "meta " << k << " " << v << "\n";
    // matrices stored row-major, one row per line
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> t;
    t = net.w1;
    write_block(os, "w1", t.data(), t.size(), net.w1.cols());
    write_block(os, "b1", net.b1.data(), net.b1.size(), net.b1.size());
    t = net.w2;
    write_block(os, "w2", t.data(), t.size(), net.w2.cols());
    write_block(os, "b2", net.b2.data(), net.b2.size(), net.b2.size());
    t = net.w3;
    write_block(os, "w3", t.data(), t.size(), net.w3.cols());
    write_block(os, "b3", net.b3.data(), net.b3.size(), net.b3.size());
    os << "end\n";
}

MlpFile load_mlp(std::istream& is) {
    std::string line;
    if (!std::getline(is, line) || line != "fdcr-mlp v1")
        throw std::invalid_argument("mlp file: bad magic line");
    MlpFile out;
    int n = 0, h1 = 0, h2 = 0;
    std::string key;
    while (is >> key) {
        if (key == "n") {
            is >> n;
        } else if (key == "h1") {
            is >> h1;
        } else if (key == "h2") {
            is >> h2;
        } else if (key == "seed") {
            is >> out.seed;
        } else if (key == "meta") {
            std::string k;
            is >> k;
            std::getline(is, line);
            const auto pos = line.find_first_not_of(' ');
            out.meta[k] = pos == std::string::npos ? "" : line.substr(pos);
        } else if (key == "w1") {
            break;
        } else {
            throw std::invalid_argument("mlp file: unknown header key " + key);
        }
    }
    if (key != "w1") throw std::invalid_argument("mlp file: missing weight blocks");
    if (h1 != kHidden1 || h2 != kHidden2)
        throw std::invalid_argument("mlp file: unsupported hidden widths");
    if (n < 1) throw std::invalid_argument("mlp file: bad input width");

    out.net = Mlp::zeros(n);
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> t;
    std::string tok;
    t.resize(kHidden1, n);
    for (Eigen::Index i = 0; i < t.size(); ++i) {
        if (!(is >> tok)) throw std::invalid_argument("mlp file: truncated w1");
        t.data()[i] = parse_double(tok);
    }
    out.net.w1 = t;
    read_block(is, "b1", out.net.b1.data(), out.net.b1.size());
    t.resize(kHidden2, kHidden1);
    read_block(is, "w2", t.data(), t.size());
    out.net.w2 = t;
    read_block(is, "b2", out.net.b2.data(), out.net.b2.size());
    t.resize(1, kHidden2);
    read_block(is, "w3", t.data(), t.size());
    out.net.w3 = t;
    read_block(is, "b3", out.net.b3.data(), out.net.b3.size());
    if (!(is >> tok) || tok != "end") throw std::invalid_argument("mlp file: missing end marker");
    out.net.validate();
    return out;
}

}  // namespace fdcr
