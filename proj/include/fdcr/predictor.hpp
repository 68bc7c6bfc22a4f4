#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fdcr/rng.hpp"
#include "fdcr/sensing.hpp"

namespace fdcr {

inline constexpr int kHidden1 = 15;
inline constexpr int kHidden2 = 20;

// 2/(1+e^{-2x}) - 1, evaluated in its numerically stable tanh form.
double tansig(double x);

// Fully connected N-15-20-1 net with tansig at every layer, including the
// output. Inputs and targets use the -1/+1 alphabet directly.
struct Mlp {
    Eigen::MatrixXd w1;  // 15 x N
    Eigen::VectorXd b1;  // 15
    Eigen::MatrixXd w2;  // 20 x 15
    Eigen::VectorXd b2;  // 20
    Eigen::MatrixXd w3;  // 1 x 20
    Eigen::VectorXd b3;  // 1

    int n_inputs() const { return static_cast<int>(w1.cols()); }
    int n_params() const;
    void validate() const;

    static Mlp zeros(int n_inputs);
    // uniform weights and biases in [-0.5, 0.5]
    static Mlp random_init(int n_inputs, RngStream& rng);
};

struct Prediction {
    double raw;         // tansig output in (-1, 1)
    std::int8_t label;  // -1 if raw < 0, else +1
};

Prediction forward(const Mlp& net, const Eigen::Ref<const Eigen::VectorXd>& x);

// Parameter vector layout: w1 row-major, b1, w2 row-major, b2, w3, b3.
Eigen::VectorXd pack_params(const Mlp& net);
Mlp unpack_params(int n_inputs, const Eigen::Ref<const Eigen::VectorXd>& theta);

// One row per input column: d raw / d theta in pack_params order.
Eigen::MatrixXd output_jacobian(const Mlp& net, const Eigen::MatrixXd& inputs);

// Windows of N+M consecutive slot labels: the first N form the input, the
// target is -1 exactly when all of the last M are idle. `targets` come from
// the (possibly noisy) sensed labels, `truth` always from the true ones.
struct TrainingSet {
    int n_inputs = 0;
    int m_slots = 0;
    Eigen::MatrixXd inputs;       // N x count
    Eigen::VectorXd targets;      // count, -1/+1
    Eigen::VectorXd truth;        // count, -1/+1
    std::vector<std::size_t> starts;
    long count() const { return static_cast<long>(inputs.cols()); }
};

// Uniformly random contiguous windows from a slot-label sequence. When
// `sensing` is given, labels are re-drawn through the sensing channel
// (without SI: the collecting SU is not transmitting).
TrainingSet make_training_data(const std::vector<std::int8_t>& true_labels,
                               int n_inputs, int m_slots, long count,
                               RngStream& rng,
                               const SensingProbs* sensing = nullptr,
                               bool with_si = false);

struct TrainOptions {
    double mu_init = 1e-3;
    double mu_up = 10.0;
    double mu_down = 0.1;
    double mu_max = 1e10;      // exceeding this aborts with NoProgress
    int max_epochs = 200;
    double loss_goal = 1e-4;   // training MSE target
    double val_fraction = 0.1; // tail fraction held out for early stopping
    int patience = 10;         // accepted epochs without validation improvement
};

enum class TrainStop { ZeroBudget, LossGoal, MaxEpochs, ValidationPatience, NoProgress };
const char* to_string(TrainStop s);

struct EpochRecord {
    int epoch;
    double mu;         // damping after the accept/reject adjustment
    double train_mse;
    double val_mse;    // 0 when no validation split
};

struct TrainResult {
    Mlp net;
    std::vector<EpochRecord> trace;
    TrainStop stop = TrainStop::MaxEpochs;
    double initial_mse = 0.0;
    double final_mse = 0.0;
};

// Levenberg-Marquardt: steps solve (J^T J + mu I) d = J^T e with e = target -
// raw; mu shrinks on improvement and grows otherwise. A step is applied only
// when it lowers the training MSE, so the final MSE never exceeds the initial.
TrainResult train_lm(const Mlp& start, const TrainingSet& data,
                     const TrainOptions& opts = {});

// Window-level prediction quality counted against the true labels.
struct PredictionStats {
    long n_tt = 0;              // testing windows
    long n_0 = 0;               // windows with no PU activity in the next M slots
    long n_01 = 0;              // of those, predicted busy
    long n_e = 0;               // incorrect predictions
    double p_e = 0.0;           // n_e / n_tt
    std::optional<double> p_pf; // n_01 / n_0, undefined when n_0 = 0
    std::optional<double> p_pd; // 1 - (n_e - n_01)/(n_tt - n_0), undefined when n_tt = n_0
};

PredictionStats stats_from_counts(long n_tt, long n_0, long n_01, long n_e);
PredictionStats evaluate(const Mlp& net, const Eigen::MatrixXd& windows,
                         const Eigen::VectorXd& truth);

// Versioned text serialization; weight round trips are bit exact.
void save_mlp(std::ostream& os, const Mlp& net, std::uint64_t seed,
              const std::map<std::string, std::string>& meta = {});

struct MlpFile {
    Mlp net;
    std::uint64_t seed = 0;
    std::map<std::string, std::string> meta;
};

MlpFile load_mlp(std::istream& is);

}  // namespace fdcr
