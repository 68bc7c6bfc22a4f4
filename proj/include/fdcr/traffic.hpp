#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <utility>
#include <vector>

#include "fdcr/rng.hpp"

namespace fdcr {

enum class DurationDistribution { Exponential, Custom };

// ON/OFF channel occupancy process of the primary user. lambda0 and lambda1
// are the mean OFF and ON durations in seconds.
struct TrafficModel {
    double lambda0 = 0.1;
    double lambda1 = 0.1;
    DurationDistribution distribution = DurationDistribution::Exponential;
    // Optional duration sampler (rng, mean) -> seconds; must return positive
    // finite values. Only used when distribution == Custom.
    std::function<double(RngStream&, double)> custom_sampler;

    void validate() const;
};

// (mu0, mu1): stationary probabilities of the OFF and ON states.
std::pair<double, double> stationary_probs(const TrafficModel& model);

// Discretized occupancy. Slot labels: -1 idle, +1 busy. A slot is busy when
// any part of an ON interval overlaps it; it is idle only when the channel is
// OFF for the whole slot span.
struct ChannelTimeline {
    double slot_duration = 0.0;
    double total_time = 0.0;
    double lambda0 = 0.0;
    double lambda1 = 0.0;
    std::uint64_t seed = 0;
    std::int8_t initial_state = -1;
    std::vector<double> transitions;  // strictly increasing state-change instants
    std::vector<std::int8_t> slots;

    std::size_t n_slots() const { return slots.size(); }
    std::int8_t state_at(double t) const;
};

// Alternating ON/OFF intervals drawn from the model; the initial state is
// sampled from the stationary distribution. Deterministic in (seed, stream).
ChannelTimeline sample_timeline(const TrafficModel& model, double total_time,
                                double slot, std::uint64_t seed,
                                std::uint64_t stream = 0);

// Recompute slot labels from a transition list under the labeling rule above.
std::vector<std::int8_t> label_slots(std::int8_t initial_state,
                                     const std::vector<double>& transitions,
                                     double total_time, double slot);

// Text export: header lines, then one transition instant per line.
void write_timeline(std::ostream& os, const ChannelTimeline& tl);
ChannelTimeline read_timeline(std::istream& is);

}  // namespace fdcr
