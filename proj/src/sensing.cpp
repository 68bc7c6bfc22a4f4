#include "fdcr/sensing.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace fdcr {

void RadioParams::validate() const {
    if (!(chi >= 0.0 && chi <= 1.0)) throw std::invalid_argument("radio: chi must be in [0,1]");
    if (!(snr_ss > 0.0) || !(snr_sp > 0.0))
        throw std::invalid_argument("radio: SNRs must be positive (linear scale)");
    if (!(omega_s > 0.0) || !(t_s > 0.0))
        throw std::invalid_argument("radio: omega_s and t_s must be positive");
    if (!(omega_s * t_s >= 1.0))
        throw std::invalid_argument("radio: omega_s * t_s must be >= 1 sample per window");
    if (!std::isfinite(eps_over_sigma2))
        throw std::invalid_argument("radio: eps_over_sigma2 must be finite");
}

double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

double q_function(double x) {
    return 0.5 * std::erfc(x * std::numbers::sqrt2 / 2.0);
}

double q_inverse(double p) {
    if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("q_inverse: p must be in (0,1)");
    // Q is strictly decreasing; keep Q(lo) > p >= Q(hi).
    double lo = -40.0, hi = 40.0;
    for (int i = 0; i < 200 && hi - lo > 1e-14; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (q_function(mid) > p) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

namespace {

double false_alarm(double eps, double chi, double snr_ss, double wt) {
    const double c2 = chi * chi * snr_ss;
    return q_function((eps - c2 - 1.0) * std::sqrt(wt / (2.0 * c2 + 1.0)));
}

double detection(double eps, double chi, double snr_ss, double snr_sp, double wt) {
    const double c2 = chi * chi * snr_ss;
    return q_function((eps - c2 - snr_sp - 1.0) *
                      std::sqrt(wt / (2.0 * c2 + 2.0 * c2 * snr_sp + 2.0 * snr_sp + 1.0)));
}

}  // namespace

SensingProbs sensing_probs(const RadioParams& p) {
    p.validate();
    const double wt = p.omega_s * p.t_s;
    SensingProbs out;
    out.p_f = false_alarm(p.eps_over_sigma2, 0.0, p.snr_ss, wt);
    out.p_d = detection(p.eps_over_sigma2, 0.0, p.snr_ss, p.snr_sp, wt);
    out.p_f_si = false_alarm(p.eps_over_sigma2, p.chi, p.snr_ss, wt);
    out.p_d_si = detection(p.eps_over_sigma2, p.chi, p.snr_ss, p.snr_sp, wt);
    return out;
}

double threshold_for_target_pf(const RadioParams& p, double target_pf, bool with_si) {
    p.validate();
    if (!(target_pf > 0.0 && target_pf < 1.0))
        throw std::invalid_argument("threshold_for_target_pf: target must be in (0,1)");
    const double c2 = with_si ? p.chi * p.chi * p.snr_ss : 0.0;
    return (c2 + 1.0) +
           q_inverse(target_pf) * std::sqrt((2.0 * c2 + 1.0) / (p.omega_s * p.t_s));
}

std::int8_t draw_sensing(std::int8_t true_state, const SensingProbs& probs,
                         bool with_si, double u) {
    const double p_busy = (true_state > 0) ? (with_si ? probs.p_d_si : probs.p_d)
                                           : (with_si ? probs.p_f_si : probs.p_f);
    return u < p_busy ? std::int8_t{1} : std::int8_t{-1};
}

std::int8_t draw_sensing(std::int8_t true_state, const SensingProbs& probs,
                         bool with_si, RngStream& rng) {
    return draw_sensing(true_state, probs, with_si, rng.next_double());
}

Rates rates(const RadioParams& p) {
    p.validate();
    Rates r;
    r.d0_tr = std::log2(1.0 + p.snr_ss / (1.0 + p.chi * p.snr_ss));
    r.d1_tr = std::log2(1.0 + p.snr_ss / (1.0 + p.snr_sp + p.chi * p.snr_ss));
    r.d0_ts = std::log2(1.0 + p.snr_ss);
    r.d1_ts = std::log2(1.0 + p.snr_ss / (1.0 + p.snr_sp));
    return r;
}

}  // namespace fdcr
