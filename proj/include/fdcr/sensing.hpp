#pragma once

#include <cstdint>

#include "fdcr/rng.hpp"

namespace fdcr {

// Energy-detection sensing parameters. SNRs are stored linear; chi in [0,1]
// is the residual self-interference coefficient (0 = perfect suppression).
struct RadioParams {
    double chi = 0.1;
    double snr_ss = 10.0;                // SU signal at its own sensing antenna
    double snr_sp = 7.943282347242816;   // PU signal at the SU (9 dB)
    double omega_s = 6e6;                // sampling frequency, Hz
    double t_s = 1e-3;                   // slot / sensing duration, s
    double eps_over_sigma2 = 1.0;        // normalized energy threshold
    void validate() const;
};

struct SensingProbs {
    double p_f = 0.0;     // false alarm without SI (initial sensing)
    double p_d = 1.0;     // detection without SI
    double p_f_si = 0.0;  // false alarm under residual SI (in-transmission)
    double p_d_si = 1.0;  // detection under residual SI
};

double db_to_linear(double db);

// Standard normal tail probability.
double q_function(double x);

// Inverse of q_function by safeguarded bisection.
double q_inverse(double p);

// Closed-form false-alarm / detection probabilities, with residual SI and in
// the chi = 0 specialization.
SensingProbs sensing_probs(const RadioParams& p);

// Normalized threshold that makes the selected false-alarm expression equal
// target_pf, by analytic inversion of the Q argument.
double threshold_for_target_pf(const RadioParams& p, double target_pf, bool with_si);

// One slot-level sensing outcome (-1 idle, +1 busy) from an explicit uniform
// draw, or from a sequential stream.
std::int8_t draw_sensing(std::int8_t true_state, const SensingProbs& probs,
                         bool with_si, double u);
std::int8_t draw_sensing(std::int8_t true_state, const SensingProbs& probs,
                         bool with_si, RngStream& rng);

// Achievable data rates in bits/s/Hz; d0/d1 for PU idle/busy. TR rates carry
// the residual-SI penalty; the full-duplex factor 2 is applied at frame level.
struct Rates {
    double d0_tr = 0.0;
    double d1_tr = 0.0;
    double d0_ts = 0.0;
    double d1_ts = 0.0;
};

Rates rates(const RadioParams& p);

}  // namespace fdcr
