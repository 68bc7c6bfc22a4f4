#include "fdcr/selection.hpp"

#include <stdexcept>

namespace fdcr {

void FrameConfig::validate() const {
    if (m_slots < 2) throw std::invalid_argument("frame: m_slots must be >= 2");
    if (!(t_s > 0.0)) throw std::invalid_argument("frame: t_s must be positive");
}

const char* to_string(FrameMode m) {
    switch (m) {
        case FrameMode::Tr: return "tr";
        case FrameMode::Ts: return "ts";
        case FrameMode::TrFallbackTs: return "tr-fallback-ts";
    }
    return "?";
}

int FrameRecord::slots_transmitted() const {
    int n = 0;
    for (const auto t : transmitted) n += t;
    return n;
}

FrameMode select_mode(std::int8_t prediction, std::int8_t initial_sense) {
    return (prediction < 0 && initial_sense < 0) ? FrameMode::Tr : FrameMode::Ts;
}

namespace {

void reset_record(FrameRecord& rec, int m) {
    rec.true_states.assign(static_cast<std::size_t>(m), 0);
    rec.senses.assign(static_cast<std::size_t>(m), 0);
    rec.transmitted.assign(static_cast<std::size_t>(m), 0);
    rec.collided = false;
    rec.throughput = 0.0;
    rec.throughput_nc = 0.0;
}

void ts_data_slots(FrameRecord& rec, const FrameConfig& cfg,
                   std::span<const std::int8_t> slice, std::size_t base_slot,
                   const SlotSenser& senser, const Rates& rates) {
    for (int k = 1; k < cfg.m_slots; ++k) {
        const std::int8_t truth = slice[k];
        const std::int8_t s = senser.sense(base_slot + k, truth, /*with_si=*/true);
        rec.senses[k] = s;
        if (s < 0) {
            rec.transmitted[k] = 1;
            rec.throughput += (truth < 0 ? rates.d0_ts : rates.d1_ts) / cfg.m_slots;
        }
    }
}

void finish_record(FrameRecord& rec) {
    bool any_busy = false;
    for (std::size_t k = 0; k < rec.transmitted.size(); ++k) {
        any_busy |= rec.true_states[k] > 0;
        if (rec.transmitted[k] && rec.true_states[k] > 0) rec.collided = true;
    }
    // zero-tolerance credit: only frames the PU never touched count
    rec.throughput_nc = any_busy ? 0.0 : rec.throughput;
}

void run_tr_into(FrameRecord& rec, const FrameConfig& cfg,
                 std::span<const std::int8_t> slice, std::size_t base_slot,
                 const SlotSenser& senser, const Rates& rates) {
    reset_record(rec, cfg.m_slots);
    rec.prediction = -1;
    std::copy(slice.begin(), slice.end(), rec.true_states.begin());
    rec.initial_sense = senser.sense(base_slot, slice[0], /*with_si=*/false);
    rec.senses[0] = rec.initial_sense;
    if (rec.initial_sense < 0) {
        rec.mode = FrameMode::Tr;
        for (int k = 1; k < cfg.m_slots; ++k) {
            rec.transmitted[k] = 1;
            rec.throughput +=
                2.0 * (slice[k] < 0 ? rates.d0_tr : rates.d1_tr) / cfg.m_slots;
        }
    } else {
        rec.mode = FrameMode::TrFallbackTs;
        ts_data_slots(rec, cfg, slice, base_slot, senser, rates);
    }
    finish_record(rec);
}

void run_ts_into(FrameRecord& rec, const FrameConfig& cfg,
                 std::span<const std::int8_t> slice, std::size_t base_slot,
                 const SlotSenser& senser, const Rates& rates) {
    reset_record(rec, cfg.m_slots);
    rec.prediction = 1;
    rec.mode = FrameMode::Ts;
    std::copy(slice.begin(), slice.end(), rec.true_states.begin());
    rec.initial_sense = senser.sense(base_slot, slice[0], /*with_si=*/false);
    rec.senses[0] = rec.initial_sense;
    ts_data_slots(rec, cfg, slice, base_slot, senser, rates);
    finish_record(rec);
}

void check_frame_args(const FrameConfig& cfg, std::span<const std::int8_t> slice) {
    cfg.validate();
    if (slice.size() != static_cast<std::size_t>(cfg.m_slots))
        throw std::invalid_argument("frame: slice must cover exactly M slots");
}

}  // namespace

FrameRecord run_tr_frame(const FrameConfig& cfg, std::span<const std::int8_t> slice,
                         std::size_t base_slot, const SlotSenser& senser,
                         const Rates& rates) {
    check_frame_args(cfg, slice);
    FrameRecord rec;
    run_tr_into(rec, cfg, slice, base_slot, senser, rates);
    return rec;
}

FrameRecord run_ts_frame(const FrameConfig& cfg, std::span<const std::int8_t> slice,
                         std::size_t base_slot, const SlotSenser& senser,
                         const Rates& rates) {
    check_frame_args(cfg, slice);
    FrameRecord rec;
    run_ts_into(rec, cfg, slice, base_slot, senser, rates);
    return rec;
}

SelectionResult run_nn_ams(Predictor& predictor, const FrameConfig& cfg,
                           const ChannelTimeline& timeline, const SensingProbs& probs,
                           const Rates& rates, std::uint64_t sense_key, long n_frames,
                           int n_inputs, bool keep_frames) {
    cfg.validate();
    if (n_inputs < 1) throw std::invalid_argument("run_nn_ams: n_inputs must be >= 1");
    if (n_frames < 1) throw std::invalid_argument("run_nn_ams: n_frames must be >= 1");
    const std::size_t needed = static_cast<std::size_t>(n_inputs) +
                               static_cast<std::size_t>(n_frames) * cfg.m_slots;
    if (timeline.n_slots() < needed)
        throw std::invalid_argument("run_nn_ams: timeline shorter than N + n_frames*M slots");

    const SlotSenser senser(probs, sense_key);
    const int m = cfg.m_slots;
    const auto& slots = timeline.slots;
    const bool track_input = predictor.needs_input();

    Eigen::VectorXd input = Eigen::VectorXd::Zero(n_inputs);
    if (track_input) {
        // warm-up: the first N slots seed the input vector and carry no metrics
        for (int k = 0; k < n_inputs; ++k)
            input(k) = senser.sense(static_cast<std::size_t>(k), slots[k], false);
    }

    SelectionResult out;
    out.n_frames = n_frames;
    if (keep_frames) out.frames.reserve(static_cast<std::size_t>(n_frames));

    FrameRecord rec;
    long n0 = 0, n01 = 0, ne = 0;
    double thr = 0.0, thr_nc = 0.0;
    for (long f = 0; f < n_frames; ++f) {
        const std::size_t base = n_inputs + static_cast<std::size_t>(f) * m;
        const std::span<const std::int8_t> slice(slots.data() + base,
                                                 static_cast<std::size_t>(m));
        std::int8_t truth = -1;
        for (int k = 0; k < m; ++k) {
            if (slice[k] > 0) {
                truth = 1;
                break;
            }
        }

        const std::int8_t pred =
            predictor.predict(input, static_cast<std::size_t>(f), truth);
        if (pred < 0) {
            run_tr_into(rec, cfg, slice, base, senser, rates);
        } else {
            run_ts_into(rec, cfg, slice, base, senser, rates);
        }

        if (track_input) {
            // shift M slots out, append pseudo idle results after a clean TR
            // frame and the frame's actual sensing results otherwise
            const int keep = n_inputs - std::min(m, n_inputs);
            for (int k = 0; k < keep; ++k) input(k) = input(k + m);
            const int take = n_inputs - keep;
            for (int k = 0; k < take; ++k) {
                const int slot = m - take + k;
                input(keep + k) = rec.mode == FrameMode::Tr
                                      ? -1.0
                                      : static_cast<double>(rec.senses[slot]);
            }
        }

        thr += rec.throughput;
        thr_nc += rec.throughput_nc;
        out.transmitted_slots += rec.slots_transmitted();
        if (rec.collided) ++out.collided_frames;
        switch (rec.mode) {
            case FrameMode::Tr: ++out.n_tr; break;
            case FrameMode::Ts: ++out.n_ts; break;
            case FrameMode::TrFallbackTs: ++out.n_fallback; break;
        }
        if (truth < 0) {
            ++n0;
            if (pred > 0) ++n01;
        }
        if (pred != truth) ++ne;
        if (keep_frames) out.frames.push_back(rec);
    }

    out.avg_throughput = thr / static_cast<double>(n_frames);
    out.avg_throughput_nc = thr_nc / static_cast<double>(n_frames);
    out.collision_prob =
        static_cast<double>(out.collided_frames) / static_cast<double>(n_frames);
    out.prediction = stats_from_counts(n_frames, n0, n01, ne);
    return out;
}

}  // namespace fdcr
