#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "fdcr/analytic.hpp"
#include "fdcr/predictor.hpp"
#include "fdcr/selection.hpp"
#include "fdcr/sensing.hpp"
#include "fdcr/traffic.hpp"

namespace fdcr {

enum class Scheme { NnAms, TrOnly, TsOnly };
const char* to_string(Scheme s);

struct PredictorConfig {
    int n_inputs = 75;              // N
    long n_train = 1000;            // N_tr
    long n_test = 30000;            // N_tt
    bool perfect_sensing = false;   // feed true labels instead of sensed ones
    long history_slots = 200000;    // length of the train/test label sequences
    TrainOptions train;
};

struct ExperimentConfig {
    TrafficModel traffic;
    RadioParams radio;
    FrameConfig frame;
    PredictorConfig predictor;
    std::optional<std::pair<double, double>> inject;  // (p_pf, p_pd) bypass
    std::optional<SensingProbs> sensing_override;     // diagnostics only
    Scheme scheme = Scheme::NnAms;
    long n_frames = 200000;
    int replications = 10;
    std::uint64_t master_seed = 1;
    bool keep_frames = false;

    void validate() const;
    SensingProbs sensing() const;  // override if set, else derived from radio
};

// Offline training for one replication: timeline, window sampling, weight
// init, LM training, and a fresh-test-set evaluation.
struct TrainedPredictor {
    Mlp net;
    TrainResult result;
    PredictionStats offline;  // N_tt fresh windows, truth from the clean timeline
    std::uint64_t init_seed = 0;
};

TrainedPredictor train_predictor(const ExperimentConfig& cfg, int replication);

// Standalone evaluation of an existing net on the replication's test stream.
PredictionStats evaluate_predictor(const ExperimentConfig& cfg, const Mlp& net,
                                   int replication);

struct ReplicationResult {
    int index = 0;
    std::uint64_t timeline_seed = 0;
    bool trained = false;
    bool skipped = false;  // training made no progress; excluded from pooling
    TrainStop train_stop = TrainStop::MaxEpochs;
    PredictionStats offline;
    SelectionResult run;
};

struct ExperimentResult {
    Scheme scheme = Scheme::NnAms;
    int m_slots = 0;
    long n_frames = 0;
    std::uint64_t master_seed = 0;
    std::vector<ReplicationResult> reps;

    // pooled over replications that ran; hw_* are 95% half-widths
    double avg_throughput = 0.0;
    double avg_throughput_nc = 0.0;
    double collision_prob = 0.0;
    double hw_throughput = 0.0;
    double hw_throughput_nc = 0.0;
    double hw_collision = 0.0;
    double frac_tr = 0.0;
    double frac_fallback = 0.0;
    double frac_ts = 0.0;
    long transmitted_slots = 0;
    PredictionStats prediction;  // pooled online counts

    // closed forms under the operative prediction probabilities: injected
    // values, measured online rates (trained nets), or the degenerate pair
    CaseBreakdown analytic;
};

ExperimentResult run_experiment(const ExperimentConfig& cfg);
std::vector<ExperimentResult> sweep_m(const ExperimentConfig& cfg,
                                      std::span<const int> m_values);

// One CSV row per (M, scheme), empirical columns next to the closed forms.
void write_results_csv(std::ostream& os, std::span<const ExperimentResult> results,
                       const std::string& config_note);
void write_frames_csv(std::ostream& os, std::span<const ReplicationResult> reps,
                      const std::string& config_note);

}  // namespace fdcr
