#include "fdcr/traffic.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "fdcr/textio.hpp"

namespace fdcr {

void TrafficModel::validate() const {
    if (!(lambda0 > 0.0) || !std::isfinite(lambda0) || !(lambda1 > 0.0) ||
        !std::isfinite(lambda1)) {
        throw std::invalid_argument("traffic: lambda0 and lambda1 must be positive and finite");
    }
    if (distribution == DurationDistribution::Custom && !custom_sampler) {
        throw std::invalid_argument("traffic: custom distribution requires a sampler");
    }
}

std::pair<double, double> stationary_probs(const TrafficModel& model) {
    model.validate();
    // the complement keeps mu0 + mu1 == 1 exact
    const double mu0 = model.lambda0 / (model.lambda0 + model.lambda1);
    return {mu0, 1.0 - mu0};
}

namespace {

double draw_duration(const TrafficModel& model, bool on_state, RngStream& rng) {
    const double mean = on_state ? model.lambda1 : model.lambda0;
    if (model.distribution == DurationDistribution::Exponential) {
        return rng.exponential(mean);
    }
    const double d = model.custom_sampler(rng, mean);
    if (!(d > 0.0) || !std::isfinite(d)) {
        throw std::invalid_argument("traffic: sampler returned a non-positive duration");
    }
    return d;
}

}  // namespace

std::int8_t ChannelTimeline::state_at(double t) const {
    const auto k = std::upper_bound(transitions.begin(), transitions.end(), t) -
                   transitions.begin();
    return (k % 2 == 0) ? initial_state : static_cast<std::int8_t>(-initial_state);
}

std::vector<std::int8_t> label_slots(std::int8_t initial_state,
                                     const std::vector<double>& transitions,
                                     double total_time, double slot) {
    const auto n = static_cast<std::size_t>(std::floor(total_time / slot + 1e-9));
    std::vector<std::int8_t> labels(n, -1);
    bool on = initial_state > 0;
    double start = 0.0;
    std::size_t k = 0;
    while (start < total_time) {
        const bool last = k >= transitions.size() || transitions[k] >= total_time;
        const double end = last ? total_time : transitions[k];
        if (on && end > start) {
            const auto first = static_cast<std::size_t>(std::floor(start / slot));
            const auto stop = static_cast<std::size_t>(std::ceil(end / slot));
            for (std::size_t s = first; s < stop && s < n; ++s) labels[s] = 1;
        }
        if (last) break;
        start = end;
        on = !on;
        ++k;
    }
    return labels;
}

ChannelTimeline sample_timeline(const TrafficModel& model, double total_time,
                                double slot, std::uint64_t seed,
                                std::uint64_t stream) {
    model.validate();
    if (!(slot > 0.0) || !(total_time >= slot)) {
        throw std::invalid_argument("traffic: need total_time >= slot > 0");
    }
    RngStream rng(seed, stream);
    const auto [mu0, mu1] = stationary_probs(model);
    (void)mu1;

    ChannelTimeline tl;
    tl.slot_duration = slot;
    tl.total_time = total_time;
    tl.lambda0 = model.lambda0;
    tl.lambda1 = model.lambda1;
    tl.seed = seed;
    tl.initial_state = rng.bernoulli(mu0) ? std::int8_t{-1} : std::int8_t{1};

    bool on = tl.initial_state > 0;
    double t = 0.0;
    while (true) {
        t += draw_duration(model, on, rng);
        if (t >= total_time) break;
        tl.transitions.push_back(t);
        on = !on;
    }
    tl.slots = label_slots(tl.initial_state, tl.transitions, total_time, slot);
    return tl;
}

void write_timeline(std::ostream& os, const ChannelTimeline& tl) {
    os << "fdcr-timeline v1\n";
    os << "lambda0 " << format_double(tl.lambda0) << "\n";
    os << "lambda1 " << format_double(tl.lambda1) << "\n";
    os << "slot " << format_double(tl.slot_duration) << "\n";
    os << "seed " << tl.seed << "\n";
    os << "total_time " << format_double(tl.total_time) << "\n";
    os << "initial_state " << int(tl.initial_state) << "\n";
    os << "transitions " << tl.transitions.size() << "\n";
    for (const double t : tl.transitions) os << format_double(t) << "\n";
}

ChannelTimeline read_timeline(std::istream& is) {
    std::string line;
    if (!std::getline(is, line) || line != "fdcr-timeline v1") {
        throw std::invalid_argument("timeline: bad magic line");
    }
    ChannelTimeline tl;
    std::size_t n_transitions = 0;
    auto expect = [&](const char* key) -> std::string {
        if (!std::getline(is, line)) throw std::invalid_argument("timeline: truncated header");
        std::istringstream ss(line);
        std::string k, v;
        ss >> k >> v;
        if (k != key) throw std::invalid_argument("timeline: expected key " + std::string(key));
        return v;
    };
    tl.lambda0 = parse_double(expect("lambda0"));
    tl.lambda1 = parse_double(expect("lambda1"));
    tl.slot_duration = parse_double(expect("slot"));
    tl.seed = static_cast<std::uint64_t>(parse_int(expect("seed")));
    tl.total_time = parse_double(expect("total_time"));
    tl.initial_state = static_cast<std::int8_t>(parse_int(expect("initial_state")));
    n_transitions = static_cast<std::size_t>(parse_int(expect("transitions")));
    tl.transitions.reserve(n_transitions);
    for (std::size_t i = 0; i < n_transitions; ++i) {
        if (!std::getline(is, line)) throw std::invalid_argument("timeline: truncated transitions");
        tl.transitions.push_back(parse_double(line));
    }
    tl.slots = label_slots(tl.initial_state, tl.transitions, tl.total_time, tl.slot_duration);
    return tl;
}

}  // namespace fdcr
