#include "fdcr/analytic.hpp"

#include <cmath>
#include <ostream>
#include <stdexcept>

#include "fdcr/textio.hpp"

namespace fdcr {

void Scenario::validate() const {
    if (!(lambda0 > 0.0) || !(lambda1 > 0.0))
        throw std::invalid_argument("scenario: lambda0 and lambda1 must be positive");
    frame.validate();
    const auto in01 = [](double p) { return p >= 0.0 && p <= 1.0; };
    if (!in01(p_pf) || !in01(p_pd) || !in01(sensing.p_f) || !in01(sensing.p_d) ||
        !in01(sensing.p_f_si) || !in01(sensing.p_d_si))
        throw std::invalid_argument("scenario: probabilities must lie in [0,1]");
    if (!(rate.d0_tr >= 0.0 && rate.d1_tr >= 0.0 && rate.d0_ts >= 0.0 && rate.d1_ts >= 0.0))
        throw std::invalid_argument("scenario: rates must be non-negative");
}

double truncated_exp_mean(double mean, double cutoff) {
    if (!(mean > 0.0) || !(cutoff > 0.0))
        throw std::invalid_argument("truncated_exp_mean: arguments must be positive");
    const double x = cutoff / mean;
    if (x < 1e-8) return cutoff * (0.5 - x / 12.0);  // series; direct form is 0/0
    const double denom = -std::expm1(-x);            // 1 - e^{-x}
    return (mean * denom - cutoff * std::exp(-x)) / denom;
}

namespace {

// sum_{j=1..n} C(n,j) p^j (1-p)^{n-j} j
double binomial_weighted_count(int n, double p) {
    if (n <= 0) return 0.0;
    double coef = 1.0;
    double sum = 0.0;
    for (int j = 1; j <= n; ++j) {
        coef *= static_cast<double>(n - j + 1) / j;
        sum += coef * std::pow(p, j) * std::pow(1.0 - p, n - j) * j;
    }
    return sum;
}

}  // namespace

CaseBreakdown case_breakdown(const Scenario& s) {
    s.validate();
    const double mu0 = s.lambda0 / (s.lambda0 + s.lambda1);
    const double mu1 = 1.0 - mu0;
    const double tt = s.frame.t_t();
    const double tp = s.frame.t_p();
    const double ts = s.frame.t_s;
    const int m = s.frame.m_slots;

    const double pbar_pf = 1.0 - s.p_pf;
    const double pbar_pd = 1.0 - s.p_pd;
    const double pbar_f = 1.0 - s.sensing.p_f;
    const double pbar_d = 1.0 - s.sensing.p_d;
    const double pbar_fsi = 1.0 - s.sensing.p_f_si;
    const double pbar_dsi = 1.0 - s.sensing.p_d_si;

    const double stay0 = std::exp(-tt / s.lambda0);  // OFF outlives the data duration
    const double stay1 = std::exp(-tt / s.lambda1);

    CaseBreakdown cb;
    cb.e_l0 = truncated_exp_mean(s.lambda0, tt);
    cb.e_l1 = truncated_exp_mean(s.lambda1, tt);

    // C5..C8 mirror C1..C4 under {mu0<->mu1, lambda0<->lambda1, Pf<->Pd, Ppf<->Ppd}
    cb.pr[0] = mu0 * pbar_pf * pbar_f * stay0;
    cb.pr[1] = mu0 * (1.0 - pbar_pf * pbar_f) * stay0;
    cb.pr[2] = mu0 * pbar_pd * pbar_f * (1.0 - stay0);
    cb.pr[3] = mu0 * (1.0 - pbar_pd * pbar_f) * (1.0 - stay0);
    cb.pr[4] = mu1 * pbar_pd * pbar_d * stay1;
    cb.pr[5] = mu1 * (1.0 - pbar_pd * pbar_d) * stay1;
    cb.pr[6] = mu1 * pbar_pd * pbar_d * (1.0 - stay1);
    cb.pr[7] = mu1 * (1.0 - pbar_pd * pbar_d) * (1.0 - stay1);

    // OFF slots before the PU returns (C4) and ON slots before it leaves (C8).
    // A partially occupied slot counts as busy, hence floor and ceiling.
    const int f0 = std::min(static_cast<int>(std::floor(cb.e_l0 / ts)), m - 1);
    const int g1 = std::min(static_cast<int>(std::ceil(cb.e_l1 / ts)), m - 1);

    cb.r[0] = 2.0 * (tt / tp) * s.rate.d0_tr;
    cb.r[1] = binomial_weighted_count(m - 1, pbar_fsi) / m * s.rate.d0_ts;
    cb.r[2] = 2.0 * ((s.rate.d0_tr - s.rate.d1_tr) / tp * cb.e_l0 +
                     (tt / tp) * s.rate.d1_tr);
    cb.r[3] = binomial_weighted_count(f0, pbar_fsi) / m * s.rate.d0_ts +
              binomial_weighted_count(m - 1 - f0, pbar_dsi) / m * s.rate.d1_ts;
    cb.r[4] = 2.0 * (tt / tp) * s.rate.d1_tr;
    cb.r[5] = binomial_weighted_count(m - 1, pbar_dsi) / m * s.rate.d1_ts;
    cb.r[6] = 2.0 * ((s.rate.d1_tr - s.rate.d0_tr) / tp * cb.e_l1 +
                     (tt / tp) * s.rate.d0_tr);
    cb.r[7] = binomial_weighted_count(g1, pbar_dsi) / m * s.rate.d1_ts +
              binomial_weighted_count(m - 1 - g1, pbar_fsi) / m * s.rate.d0_ts;

    // TR cases that overlap PU activity always collide; TS cases collide
    // unless every busy slot is detected.
    cb.pr_c[0] = 0.0;
    cb.pr_c[1] = 0.0;
    cb.pr_c[2] = cb.pr[2];
    cb.pr_c[3] = cb.pr[3] * std::pow(pbar_dsi, m - 1 - f0);
    cb.pr_c[4] = cb.pr[4];
    cb.pr_c[5] = cb.pr[5] * std::pow(pbar_dsi, m - 1);
    cb.pr_c[6] = cb.pr[6];
    cb.pr_c[7] = cb.pr[7] * std::pow(pbar_dsi, g1);

    // zero-tolerance credit: only the all-OFF cases earn throughput, every
    // case the PU touches is forfeited
    cb.r_nc[0] = cb.r[0];
    cb.r_nc[1] = cb.r[1];
    for (int i = 2; i < 8; ++i) cb.r_nc[i] = 0.0;

    for (int i = 0; i < 8; ++i) {
        cb.avg_throughput += cb.pr[i] * cb.r[i];
        cb.avg_throughput_nc += cb.pr[i] * cb.r_nc[i];
        cb.collision_prob += cb.pr_c[i];
    }
    return cb;
}

std::array<double, 8> case_probs(const Scenario& s) { return case_breakdown(s).pr; }
std::array<double, 8> case_throughputs(const Scenario& s) { return case_breakdown(s).r; }

double avg_throughput(const Scenario& s) { return case_breakdown(s).avg_throughput; }
double avg_throughput_nc(const Scenario& s) { return case_breakdown(s).avg_throughput_nc; }
double collision_prob(const Scenario& s) { return case_breakdown(s).collision_prob; }

double expected_r4_exact(const Scenario& s) {
    s.validate();
    const double tt = s.frame.t_t();
    const double ts = s.frame.t_s;
    const int m = s.frame.m_slots;
    const double denom = -std::expm1(-tt / s.lambda0);
    double sum = 0.0;
    for (int f = 0; f <= m - 2; ++f) {
        const double a = f * ts;
        const double b = std::min((f + 1) * ts, tt);
        if (!(b > a)) break;
        // Pr[floor(L0-hat / Ts) == f]
        const double w = (std::exp(-a / s.lambda0) - std::exp(-b / s.lambda0)) / denom;
        const double r =
            binomial_weighted_count(f, 1.0 - s.sensing.p_f_si) / m * s.rate.d0_ts +
            binomial_weighted_count(m - 1 - f, 1.0 - s.sensing.p_d_si) / m * s.rate.d1_ts;
        sum += w * r;
    }
    return sum;
}

Scenario with_prediction(Scenario s, double p_pf, double p_pd) {
    s.p_pf = p_pf;
    s.p_pd = p_pd;
    return s;
}

namespace {

// full configuration echo travels inside every results file
void write_note_lines(std::ostream& os, const std::string& note) {
    std::size_t start = 0;
    while (start < note.size()) {
        auto end = note.find('\n', start);
        if (end == std::string::npos) end = note.size();
        if (end > start) os << "# " << note.substr(start, end - start) << "\n";
        start = end + 1;
    }
}

}  // namespace

void write_analytic_csv(std::ostream& os, std::span<const AnalyticRow> rows,
                        const std::string& config_note) {
    os << "# schema fdcr-analytic-v1\n";
    write_note_lines(os, config_note);
    os << "m,scheme";
    for (int i = 1; i <= 8; ++i) os << ",pr_c" << i;
    for (int i = 1; i <= 8; ++i) os << ",r" << i;
    for (int i = 1; i <= 8; ++i) os << ",r_nc" << i;
    for (int i = 3; i <= 8; ++i) os << ",pr_coll_c" << i;
    os << ",prob_sum,avg_throughput,avg_throughput_nc,collision_prob\n";
    for (const auto& row : rows) {
        os << row.m << "," << row.scheme;
        double prob_sum = 0.0;
        for (int i = 0; i < 8; ++i) prob_sum += row.cb.pr[i];
        for (int i = 0; i < 8; ++i) os << "," << format_double(row.cb.pr[i]);
        for (int i = 0; i < 8; ++i) os << "," << format_double(row.cb.r[i]);
        for (int i = 0; i < 8; ++i) os << "," << format_double(row.cb.r_nc[i]);
        for (int i = 2; i < 8; ++i) os << "," << format_double(row.cb.pr_c[i]);
        os << "," << format_double(prob_sum);
        os << "," << format_double(row.cb.avg_throughput);
        os << "," << format_double(row.cb.avg_throughput_nc);
        os << "," << format_double(row.cb.collision_prob) << "\n";
    }
}

}  // namespace fdcr
