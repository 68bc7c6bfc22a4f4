#include "fdcr/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "fdcr/textio.hpp"

namespace fdcr {

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw ConfigError("config: bad boolean for " + key + ": '" + v + "'");
}

double parse_num(const std::string& key, const std::string& v) {
    try {
        return parse_double(v);
    } catch (const std::exception&) {
        throw ConfigError("config: bad number for " + key + ": '" + v + "'");
    }
}

long parse_count(const std::string& key, const std::string& v) {
    try {
        return static_cast<long>(parse_int(v));
    } catch (const std::exception&) {
        throw ConfigError("config: bad integer for " + key + ": '" + v + "'");
    }
}

Scheme parse_scheme(const std::string& v) {
    if (v == "nn-ams") return Scheme::NnAms;
    if (v == "tr") return Scheme::TrOnly;
    if (v == "ts") return Scheme::TsOnly;
    throw ConfigError("config: scheme must be one of nn-ams, tr, ts (got '" + v + "')");
}

}  // namespace

AppConfig parse_config_text(const std::string& text) {
    AppConfig cfg;
    auto& ex = cfg.experiment;
    std::optional<double> snr_ss_db, snr_sp_db, eps;
    std::optional<double> inject_ppf, inject_ppd;

    std::istringstream is(text);
    std::string raw;
    std::string section;
    int line_no = 0;
    while (std::getline(is, raw)) {
        ++line_no;
        std::string line = raw;
        if (const auto hash = line.find_first_of("#;"); hash != std::string::npos)
            line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError("config line " + std::to_string(line_no) + ": bad section header");
            section = trim(line.substr(1, line.size() - 2));
            if (section != "traffic" && section != "radio" && section != "frame" &&
                section != "predictor" && section != "experiment")
                throw ConfigError("config: unknown section [" + section + "]");
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        if (key.empty() || val.empty())
            throw ConfigError("config line " + std::to_string(line_no) + ": empty key or value");

        if (section == "traffic") {
            if (key == "lambda0") ex.traffic.lambda0 = parse_num(key, val);
            else if (key == "lambda1") ex.traffic.lambda1 = parse_num(key, val);
            else if (key == "distribution") {
                if (val != "exponential")
                    throw ConfigError("config: only the exponential distribution is configurable");
                ex.traffic.distribution = DurationDistribution::Exponential;
            } else throw ConfigError("config: unknown key " + section + "." + key);
        } else if (section == "radio") {
            if (key == "chi") ex.radio.chi = parse_num(key, val);
            else if (key == "snr_ss") ex.radio.snr_ss = parse_num(key, val);
            else if (key == "snr_ss_db") snr_ss_db = parse_num(key, val);
            else if (key == "snr_sp") ex.radio.snr_sp = parse_num(key, val);
            else if (key == "snr_sp_db") snr_sp_db = parse_num(key, val);
            else if (key == "omega_s") ex.radio.omega_s = parse_num(key, val);
            else if (key == "eps_over_sigma2") eps = parse_num(key, val);
            else if (key == "target_pf") cfg.target_pf = parse_num(key, val);
            else if (key == "threshold_with_si") cfg.threshold_with_si = parse_bool(key, val);
            else if (key == "pf") cfg.ovr_pf = parse_num(key, val);
            else if (key == "pd") cfg.ovr_pd = parse_num(key, val);
            else if (key == "pf_si") cfg.ovr_pf_si = parse_num(key, val);
            else if (key == "pd_si") cfg.ovr_pd_si = parse_num(key, val);
            else throw ConfigError("config: unknown key " + section + "." + key);
        } else if (section == "frame") {
            if (key == "m") ex.frame.m_slots = static_cast<int>(parse_count(key, val));
            else if (key == "t_s") ex.frame.t_s = parse_num(key, val);
            else throw ConfigError("config: unknown key " + section + "." + key);
        } else if (section == "predictor") {
            if (key == "n") ex.predictor.n_inputs = static_cast<int>(parse_count(key, val));
            else if (key == "n_train") ex.predictor.n_train = parse_count(key, val);
            else if (key == "n_test") ex.predictor.n_test = parse_count(key, val);
            else if (key == "perfect_sensing") ex.predictor.perfect_sensing = parse_bool(key, val);
            else if (key == "history_slots") ex.predictor.history_slots = parse_count(key, val);
            else if (key == "mu_init") ex.predictor.train.mu_init = parse_num(key, val);
            else if (key == "mu_up") ex.predictor.train.mu_up = parse_num(key, val);
            else if (key == "mu_down") ex.predictor.train.mu_down = parse_num(key, val);
            else if (key == "mu_max") ex.predictor.train.mu_max = parse_num(key, val);
            else if (key == "max_epochs") ex.predictor.train.max_epochs = static_cast<int>(parse_count(key, val));
            else if (key == "loss_goal") ex.predictor.train.loss_goal = parse_num(key, val);
            else if (key == "val_fraction") ex.predictor.train.val_fraction = parse_num(key, val);
            else if (key == "patience") ex.predictor.train.patience = static_cast<int>(parse_count(key, val));
            else throw ConfigError("config: unknown key " + section + "." + key);
        } else if (section == "experiment") {
            if (key == "scheme") ex.scheme = parse_scheme(val);
            else if (key == "n_frames") ex.n_frames = parse_count(key, val);
            else if (key == "replications") ex.replications = static_cast<int>(parse_count(key, val));
            else if (key == "seed") ex.master_seed = static_cast<std::uint64_t>(parse_count(key, val));
            else if (key == "inject_ppf") inject_ppf = parse_num(key, val);
            else if (key == "inject_ppd") inject_ppd = parse_num(key, val);
            else if (key == "dump_frames") ex.keep_frames = parse_bool(key, val);
            else throw ConfigError("config: unknown key " + section + "." + key);
        } else {
            throw ConfigError("config line " + std::to_string(line_no) + ": key outside any section");
        }
    }

    if (snr_ss_db) ex.radio.snr_ss = db_to_linear(*snr_ss_db);
    if (snr_sp_db) ex.radio.snr_sp = db_to_linear(*snr_sp_db);
    if (eps && cfg.target_pf)
        throw ConfigError("config: give either eps_over_sigma2 or target_pf, not both");
    if (eps) ex.radio.eps_over_sigma2 = *eps;
    if (inject_ppf.has_value() != inject_ppd.has_value())
        throw ConfigError("config: inject_ppf and inject_ppd must be given together");
    if (inject_ppf) ex.inject = std::make_pair(*inject_ppf, *inject_ppd);

    try {
        cfg.resolve();
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    return cfg;
}

void AppConfig::resolve() {
    auto& ex = experiment;
    ex.radio.t_s = ex.frame.t_s;  // one physical slot duration
    if (target_pf) {
        ex.radio.eps_over_sigma2 =
            threshold_for_target_pf(ex.radio, *target_pf, threshold_with_si);
    }
    if (ovr_pf || ovr_pd || ovr_pf_si || ovr_pd_si) {
        SensingProbs p = sensing_probs(ex.radio);
        if (ovr_pf) p.p_f = *ovr_pf;
        if (ovr_pd) p.p_d = *ovr_pd;
        if (ovr_pf_si) p.p_f_si = *ovr_pf_si;
        if (ovr_pd_si) p.p_d_si = *ovr_pd_si;
        const auto in01 = [](double v) { return v >= 0.0 && v <= 1.0; };
        if (!in01(p.p_f) || !in01(p.p_d) || !in01(p.p_f_si) || !in01(p.p_d_si))
            throw ConfigError("config: sensing overrides must be in [0,1]");
        ex.sensing_override = p;
    } else {
        ex.sensing_override.reset();
    }
    ex.validate();
}

AppConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

std::string serialize_config(const AppConfig& cfg) {
    const auto& ex = cfg.experiment;
    std::ostringstream os;
    os << "[traffic]\n";
    os << "lambda0 = " << format_double(ex.traffic.lambda0) << "\n";
    os << "lambda1 = " << format_double(ex.traffic.lambda1) << "\n";
    os << "distribution = exponential\n";
    os << "\n[radio]\n";
    os << "chi = " << format_double(ex.radio.chi) << "\n";
    os << "snr_ss = " << format_double(ex.radio.snr_ss) << "\n";
    os << "snr_sp = " << format_double(ex.radio.snr_sp) << "\n";
    os << "omega_s = " << format_double(ex.radio.omega_s) << "\n";
    if (cfg.target_pf) {
        os << "target_pf = " << format_double(*cfg.target_pf) << "\n";
        os << "threshold_with_si = " << (cfg.threshold_with_si ? "true" : "false") << "\n";
    } else {
        os << "eps_over_sigma2 = " << format_double(ex.radio.eps_over_sigma2) << "\n";
    }
    if (cfg.ovr_pf) os << "pf = " << format_double(*cfg.ovr_pf) << "\n";
    if (cfg.ovr_pd) os << "pd = " << format_double(*cfg.ovr_pd) << "\n";
    if (cfg.ovr_pf_si) os << "pf_si = " << format_double(*cfg.ovr_pf_si) << "\n";
    if (cfg.ovr_pd_si) os << "pd_si = " << format_double(*cfg.ovr_pd_si) << "\n";
    os << "\n[frame]\n";
    os << "m = " << ex.frame.m_slots << "\n";
    os << "t_s = " << format_double(ex.frame.t_s) << "\n";
    os << "\n[predictor]\n";
    os << "n = " << ex.predictor.n_inputs << "\n";
    os << "n_train = " << ex.predictor.n_train << "\n";
    os << "n_test = " << ex.predictor.n_test << "\n";
    os << "perfect_sensing = " << (ex.predictor.perfect_sensing ? "true" : "false") << "\n";
    os << "history_slots = " << ex.predictor.history_slots << "\n";
    os << "mu_init = " << format_double(ex.predictor.train.mu_init) << "\n";
    os << "mu_up = " << format_double(ex.predictor.train.mu_up) << "\n";
    os << "mu_down = " << format_double(ex.predictor.train.mu_down) << "\n";
    os << "mu_max = " << format_double(ex.predictor.train.mu_max) << "\n";
    os << "max_epochs = " << ex.predictor.train.max_epochs << "\n";
    os << "loss_goal = " << format_double(ex.predictor.train.loss_goal) << "\n";
    os << "val_fraction = " << format_double(ex.predictor.train.val_fraction) << "\n";
    os << "patience = " << ex.predictor.train.patience << "\n";
    os << "\n[experiment]\n";
    os << "scheme = " << to_string(ex.scheme) << "\n";
    os << "n_frames = " << ex.n_frames << "\n";
    os << "replications = " << ex.replications << "\n";
    os << "seed = " << ex.master_seed << "\n";
    if (ex.inject) {
        os << "inject_ppf = " << format_double(ex.inject->first) << "\n";
        os << "inject_ppd = " << format_double(ex.inject->second) << "\n";
    }
    os << "dump_frames = " << (ex.keep_frames ? "true" : "false") << "\n";
    return os.str();
}

std::string config_hash(const std::string& canonical) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (const unsigned char c : canonical) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string default_config_text() {
    return
        "[traffic]\n"
        "lambda0 = 0.1\n"
        "lambda1 = 0.1\n"
        "distribution = exponential\n"
        "\n"
        "[radio]\n"
        "chi = 0.1\n"
        "snr_ss_db = 10\n"
        "snr_sp_db = 9\n"
        "omega_s = 6e6\n"
        "target_pf = 0.1\n"
        "threshold_with_si = true\n"
        "\n"
        "[frame]\n"
        "m = 10\n"
        "t_s = 0.001\n"
        "\n"
        "[predictor]\n"
        "n = 75\n"
        "n_train = 1000\n"
        "n_test = 30000\n"
        "perfect_sensing = false\n"
        "\n"
        "[experiment]\n"
        "scheme = nn-ams\n"
        "n_frames = 200000\n"
        "replications = 10\n"
        "seed = 1\n";
}

}  // namespace fdcr
