#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <vector>

#include "fdcr/predictor.hpp"
#include "fdcr/rng.hpp"
#include "fdcr/sensing.hpp"
#include "fdcr/traffic.hpp"

namespace fdcr {

struct FrameConfig {
    int m_slots = 10;   // M: one sensing slot + M-1 data slots
    double t_s = 1e-3;
    double t_p() const { return m_slots * t_s; }
    double t_t() const { return (m_slots - 1) * t_s; }
    void validate() const;
};

enum class FrameMode : std::uint8_t { Tr, Ts, TrFallbackTs };
const char* to_string(FrameMode m);

struct FrameRecord {
    FrameMode mode = FrameMode::Ts;
    std::int8_t prediction = 1;
    std::int8_t initial_sense = 1;
    std::vector<std::int8_t> true_states;   // M slots
    std::vector<std::int8_t> senses;        // M slots; 0 where not sensed
    std::vector<std::uint8_t> transmitted;  // M slots; slot 0 never transmits
    bool collided = false;
    double throughput = 0.0;     // bits/s/Hz, normalized by t_p
    double throughput_nc = 0.0;  // zero credit when the frame overlaps PU activity
    int slots_transmitted() const;
};

// Sensing outcomes addressed by absolute slot index. A slot always yields the
// same draw for the same key, which keeps scheme comparisons exactly paired.
class SlotSenser {
public:
    SlotSenser(const SensingProbs& probs, std::uint64_t key)
        : probs_(probs), key_(key) {}
    std::int8_t sense(std::size_t slot, std::int8_t true_state, bool with_si) const {
        return draw_sensing(true_state, probs_, with_si, keyed_uniform(key_, slot));
    }
    const SensingProbs& probs() const { return probs_; }

private:
    SensingProbs probs_;
    std::uint64_t key_;
};

// TR only when the predictor says idle AND the initial sensing says idle.
FrameMode select_mode(std::int8_t prediction, std::int8_t initial_sense);

// TR intent: one initial sensing slot (no SI); on idle, full-duplex
// transmission in all M-1 data slots; on busy, the rest of the frame runs
// under TS mechanics instead.
FrameRecord run_tr_frame(const FrameConfig& cfg, std::span<const std::int8_t> slice,
                         std::size_t base_slot, const SlotSenser& senser,
                         const Rates& rates);

// TS intent: initial sensing slot (no SI), then every data slot transmits
// exactly when its own in-slot sensing outcome (with SI) is idle.
FrameRecord run_ts_frame(const FrameConfig& cfg, std::span<const std::int8_t> slice,
                         std::size_t base_slot, const SlotSenser& senser,
                         const Rates& rates);

// Prediction source for the mode-selection loop.
class Predictor {
public:
    virtual ~Predictor() = default;
    // whether the sliding input vector must be maintained and passed in
    virtual bool needs_input() const { return false; }
    virtual std::int8_t predict(const Eigen::VectorXd& input, std::size_t frame_index,
                                std::int8_t window_truth) = 0;
};

class MlpPredictor final : public Predictor {
public:
    explicit MlpPredictor(Mlp net) : net_(std::move(net)) { net_.validate(); }
    bool needs_input() const override { return true; }
    std::int8_t predict(const Eigen::VectorXd& input, std::size_t, std::int8_t) override {
        return forward(net_, input).label;
    }
    const Mlp& net() const { return net_; }

private:
    Mlp net_;
};

class ConstantPredictor final : public Predictor {
public:
    explicit ConstantPredictor(std::int8_t value) : value_(value) {}
    std::int8_t predict(const Eigen::VectorXd&, std::size_t, std::int8_t) override {
        return value_;
    }

private:
    std::int8_t value_;
};

// Bernoulli predictions conditioned on the window truth; stands in for a
// trained net when validating the closed forms.
class InjectedPredictor final : public Predictor {
public:
    InjectedPredictor(double p_pf, double p_pd, std::uint64_t key)
        : p_pf_(p_pf), p_pd_(p_pd), key_(key) {}
    std::int8_t predict(const Eigen::VectorXd&, std::size_t frame_index,
                        std::int8_t window_truth) override {
        const double p_busy = window_truth > 0 ? p_pd_ : p_pf_;
        return keyed_uniform(key_, frame_index) < p_busy ? std::int8_t{1} : std::int8_t{-1};
    }

private:
    double p_pf_, p_pd_;
    std::uint64_t key_;
};

struct SelectionResult {
    long n_frames = 0;
    double avg_throughput = 0.0;
    double avg_throughput_nc = 0.0;
    double collision_prob = 0.0;
    long n_tr = 0;
    long n_ts = 0;
    long n_fallback = 0;
    long collided_frames = 0;
    long transmitted_slots = 0;
    PredictionStats prediction;       // online, counted against window truth
    std::vector<FrameRecord> frames;  // populated only on request
};

// The adaptive mode-selection loop: initialize the input vector by sensing N
// slots, then per frame predict, select the mode, execute, and update the
// input vector (pseudo idle results after clean TR frames, real sensing
// results otherwise). Frames tile the timeline after the N warm-up slots.
SelectionResult run_nn_ams(Predictor& predictor, const FrameConfig& cfg,
                           const ChannelTimeline& timeline, const SensingProbs& probs,
                           const Rates& rates, std::uint64_t sense_key, long n_frames,
                           int n_inputs, bool keep_frames = false);

}  // namespace fdcr
