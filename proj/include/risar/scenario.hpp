#ifndef RISAR_SCENARIO_HPP
#define RISAR_SCENARIO_HPP

#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace risar {

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }

constexpr double kSpeedOfLight = 299792458.0;

/// All scalar system constants. Powers and gains are stored in linear units
/// (watts / dimensionless); the config file accepts dBm / dB.
struct SystemConfig {
    int n_bs_antennas = 12;        // N
    int ris_elements_total = 225;  // M~
    int ris_groups = 15;           // M, M^2 = M~
    int n_users = 2;               // K
    int pilot_slots = 16;          // T, >= M+1
    int train_intervals = 20;      // V
    int predict_intervals = 20;    // P
    int ar_order = 16;             // Q
    double pilot_power = dbm_to_watts(0.0);       // P_p
    double data_power = dbm_to_watts(5.0);        // P_d
    double noise_variance = dbm_to_watts(-174.0); // sigma_n^2, per sample
    double carrier_freq = 3e9;                    // f_c
    double loading = 0.1;                         // epsilon
    double pathloss_ref = db_to_linear(-30.0);    // L_0, linear gain at 1 m
    double alpha_bs_ue = 3.0;
    double alpha_ris_ue = 3.0;
    double alpha_bs_ris = 2.0;
    double shadowing = db_to_linear(-10.0); // linear gain on BS-UE and RIS-UE links
    double sample_interval = 1e-3;          // T_s
    std::uint64_t rng_seed = 1;

    void validate() const {
        if (n_bs_antennas < 1 || ris_elements_total < 1 || ris_groups < 1 ||
            n_users < 1 || pilot_slots < 1 || train_intervals < 1 ||
            predict_intervals < 1 || ar_order < 1)
            throw std::invalid_argument("SystemConfig: all counts must be >= 1");
        if (ris_groups * ris_groups != ris_elements_total)
            throw std::invalid_argument("SystemConfig: require M^2 = M~");
        if (pilot_slots < ris_groups + 1)
            throw std::invalid_argument("SystemConfig: require T >= M+1 for identifiability");
        if (ar_order > train_intervals)
            throw std::invalid_argument("SystemConfig: require Q <= V");
        if (pilot_power <= 0 || data_power <= 0 || noise_variance <= 0)
            throw std::invalid_argument("SystemConfig: powers and variances must be > 0");
        if (loading <= 0)
            throw std::invalid_argument("SystemConfig: loading must be > 0");
        if (pathloss_ref <= 0 || shadowing <= 0 || carrier_freq <= 0 || sample_interval <= 0)
            throw std::invalid_argument("SystemConfig: gains, f_c and T_s must be > 0");
    }
};

/// 2D placement: BS at the origin, RIS at horizontal distance d_bs_ris, users
/// offset horizontally by d_h[k] and vertically by d_v[k].
struct Geometry {
    double d_bs_ris = 51.0;
    std::vector<double> d_h{20.0, 25.0};
    std::vector<double> d_v{2.0, 3.0};

    void validate() const {
        if (d_bs_ris <= 0) throw std::invalid_argument("Geometry: d_bs_ris must be > 0");
        if (d_h.size() != d_v.size())
            throw std::invalid_argument("Geometry: d_h and d_v must have equal length");
        for (std::size_t k = 0; k < d_h.size(); ++k) {
            if (d_h[k] <= 0 || d_h[k] >= d_bs_ris)
                throw std::invalid_argument("Geometry: require 0 < d_h < d_bs_ris");
            if (d_v[k] <= 0) throw std::invalid_argument("Geometry: d_v must be > 0");
        }
    }
};

/// L(d) = l0 * d^(-alpha).
inline double path_loss(double d, double alpha, double l0) {
    if (!(d > 0)) throw std::domain_error("path_loss: distance must be > 0");
    if (!(l0 > 0)) throw std::domain_error("path_loss: l0 must be > 0");
    return l0 * std::pow(d, -alpha);
}

struct UserDistances {
    double d_bu;
    double d_ru;
};

inline UserDistances user_distances(const Geometry& geom, int k) {
    if (k < 0 || static_cast<std::size_t>(k) >= geom.d_h.size())
        throw std::out_of_range("user_distances: user index out of range");
    const double dh = geom.d_h[k], dv = geom.d_v[k];
    return {std::hypot(dh, dv), std::hypot(geom.d_bs_ris - dh, dv)};
}

/// f_n = v * f_c / c * T_s.  Rejects f_n >= 0.5 (aliased Doppler).
inline double normalized_doppler(double velocity, const SystemConfig& cfg) {
    if (velocity < 0) throw std::domain_error("normalized_doppler: velocity must be >= 0");
    const double f_d = velocity * cfg.carrier_freq / kSpeedOfLight;
    const double f_n = f_d * cfg.sample_interval;
    if (f_n >= 0.5)
        throw std::domain_error("normalized_doppler: f_n >= 0.5 (aliasing)");
    return f_n;
}

/// Per-link average channel powers for user k.  The composite sub-surface
/// channel aggregates its M~/M elements coherently, so the RIS-UE group
/// variance carries an (M~/M)^2 amplitude-squared factor.
struct LinkVariances {
    double direct;   // per BS antenna, BS-UE
    double ris_user; // per sub-surface, RIS-UE (composite)
    double bs_ris;   // per element of H, BS-RIS
};

inline LinkVariances link_variances(const SystemConfig& cfg, const Geometry& geom, int k) {
    const auto d = user_distances(geom, k);
    const double group = static_cast<double>(cfg.ris_elements_total) / cfg.ris_groups;
    LinkVariances v;
    v.direct = path_loss(d.d_bu, cfg.alpha_bs_ue, cfg.pathloss_ref) * cfg.shadowing;
    v.ris_user = path_loss(d.d_ru, cfg.alpha_ris_ue, cfg.pathloss_ref) * cfg.shadowing *
                 group * group;
    v.bs_ris = path_loss(geom.d_bs_ris, cfg.alpha_bs_ris, cfg.pathloss_ref);
    return v;
}

// ---------------------------------------------------------------------------
// Config file: one `key = value` pair per line, `#` comments.  Powers are
// given in dBm, gains in dB, matching the usual link-budget conventions.
// ---------------------------------------------------------------------------

inline std::map<std::string, std::string> parse_key_values(std::istream& in) {
    std::map<std::string, std::string> kv;
    std::string line;
    while (std::getline(in, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        auto trim = [](std::string s) {
            const auto a = s.find_first_not_of(" \t\r");
            const auto b = s.find_last_not_of(" \t\r");
            return a == std::string::npos ? std::string{} : s.substr(a, b - a + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        if (!key.empty()) kv[key] = val;
    }
    return kv;
}

inline std::vector<double> parse_double_list(const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ','))
        if (tok.find_first_not_of(" \t") != std::string::npos) out.push_back(std::stod(tok));
    return out;
}

struct Scenario {
    SystemConfig cfg;
    Geometry geom;
};

inline Scenario load_scenario(std::istream& in) {
    Scenario sc;
    const auto kv = parse_key_values(in);
    auto get = [&](const char* key, auto&& apply) {
        const auto it = kv.find(key);
        if (it != kv.end()) apply(it->second);
    };
    auto num = [](const std::string& s) { return std::stod(s); };
    SystemConfig& c = sc.cfg;
    get("n_bs_antennas", [&](const std::string& s) { c.n_bs_antennas = std::stoi(s); });
    get("ris_elements_total", [&](const std::string& s) { c.ris_elements_total = std::stoi(s); });
    get("ris_groups", [&](const std::string& s) { c.ris_groups = std::stoi(s); });
    get("n_users", [&](const std::string& s) { c.n_users = std::stoi(s); });
    get("pilot_slots", [&](const std::string& s) { c.pilot_slots = std::stoi(s); });
    get("train_intervals", [&](const std::string& s) { c.train_intervals = std::stoi(s); });
    get("predict_intervals", [&](const std::string& s) { c.predict_intervals = std::stoi(s); });
    get("ar_order", [&](const std::string& s) { c.ar_order = std::stoi(s); });
    get("pilot_power_dbm", [&](const std::string& s) { c.pilot_power = dbm_to_watts(num(s)); });
    get("data_power_dbm", [&](const std::string& s) { c.data_power = dbm_to_watts(num(s)); });
    get("noise_dbm", [&](const std::string& s) { c.noise_variance = dbm_to_watts(num(s)); });
    get("carrier_freq_hz", [&](const std::string& s) { c.carrier_freq = num(s); });
    get("loading", [&](const std::string& s) { c.loading = num(s); });
    get("pathloss_ref_db", [&](const std::string& s) { c.pathloss_ref = db_to_linear(num(s)); });
    get("alpha_bs_ue", [&](const std::string& s) { c.alpha_bs_ue = num(s); });
    get("alpha_ris_ue", [&](const std::string& s) { c.alpha_ris_ue = num(s); });
    get("alpha_bs_ris", [&](const std::string& s) { c.alpha_bs_ris = num(s); });
    get("shadowing_db", [&](const std::string& s) { c.shadowing = db_to_linear(-std::abs(num(s))); });
    get("sample_interval_s", [&](const std::string& s) { c.sample_interval = num(s); });
    get("rng_seed", [&](const std::string& s) { c.rng_seed = std::stoull(s); });
    Geometry& g = sc.geom;
    get("d_bs_ris", [&](const std::string& s) { g.d_bs_ris = num(s); });
    get("d_h", [&](const std::string& s) { g.d_h = parse_double_list(s); });
    get("d_v", [&](const std::string& s) { g.d_v = parse_double_list(s); });
    if (static_cast<int>(g.d_h.size()) != c.n_users) {
        // keep geometry and K consistent when only one of them is overridden
        if (kv.count("d_h") || kv.count("d_v"))
            c.n_users = static_cast<int>(g.d_h.size());
        else
            throw std::invalid_argument("load_scenario: n_users does not match geometry");
    }
    c.validate();
    g.validate();
    return sc;
}

inline Scenario load_scenario_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_scenario_file: cannot open " + path);
    return load_scenario(in);
}

} // namespace risar

#endif // RISAR_SCENARIO_HPP
