#ifndef RISAR_EXPERIMENTS_HPP
#define RISAR_EXPERIMENTS_HPP

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "risar/beamforming.hpp"
#include "risar/classifier.hpp"
#include "risar/scenario.hpp"

namespace risar {

inline constexpr const char* kVersionString = "risar-1.0.0";

inline std::uint64_t fnv1a_hash(const std::string& data) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

/// Rectangular numeric result table.  The wall clock is kept out of the CSV so
/// that identical (config, seed) reruns are byte-identical.
struct ResultTable {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
    std::uint64_t config_hash = 0;
    std::uint64_t seed = 0;
    std::string version = kVersionString;
    double wall_clock_s = 0.0;

    void add_row(std::vector<double> row) {
        if (row.size() != columns.size())
            throw std::invalid_argument("ResultTable: ragged row");
        rows.push_back(std::move(row));
    }
};

inline void write_csv(const ResultTable& table, const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) throw std::runtime_error("write_csv: cannot open " + path);
    std::fprintf(f, "# config_hash=%016llx\n",
                 static_cast<unsigned long long>(table.config_hash));
    std::fprintf(f, "# seed=%llu\n", static_cast<unsigned long long>(table.seed));
    std::fprintf(f, "# version=%s\n", table.version.c_str());
    for (std::size_t i = 0; i < table.columns.size(); ++i)
        std::fprintf(f, "%s%s", i ? "," : "", table.columns[i].c_str());
    std::fprintf(f, "\n");
    for (const auto& row : table.rows) {
        for (std::size_t i = 0; i < row.size(); ++i)
            std::fprintf(f, "%s%.12g", i ? "," : "", row[i]);
        std::fprintf(f, "\n");
    }
    std::fclose(f);
}

inline double quantile(std::vector<double> v, double q) {
    if (v.empty()) throw std::invalid_argument("quantile: empty sample");
    std::sort(v.begin(), v.end());
    const double pos = q * (v.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    const double frac = pos - lo;
    return v[lo] * (1.0 - frac) + v[hi] * frac;
}

inline double median(const std::vector<double>& v) { return quantile(v, 0.5); }
inline double iqr(const std::vector<double>& v) {
    return quantile(v, 0.75) - quantile(v, 0.25);
}

/// Batch experiment request.
struct ExperimentSpec {
    std::string experiment; // nmse-vs-horizon | nmse-vs-doppler | se-vs-distance | overhead
    std::string config_path;
    std::string checkpoint_path;
    int trials = 200;
    std::string out_dir = ".";
    std::uint64_t seed = 1;

    void validate() const {
        if (trials < 1) throw std::invalid_argument("ExperimentSpec: trials must be >= 1");
        if (experiment != "nmse-vs-horizon" && experiment != "nmse-vs-doppler" &&
            experiment != "se-vs-distance" && experiment != "overhead")
            throw std::invalid_argument("ExperimentSpec: unknown experiment " + experiment);
    }
};

namespace detail {

struct UserRun {
    ChannelTrace trace;
    std::vector<VectorXcd> est; // stacked f_hat per training interval
};

/// Shared per-run fixtures: the schedule, pilots and LS operator are constant
/// across trials for a given config.
struct PilotFixture {
    ReflectionSchedule sched;
    VectorXcd pilots;
    LsSolver solver;

    explicit PilotFixture(const SystemConfig& cfg)
        : sched(dft_reflection(cfg.ris_groups, cfg.pilot_slots)),
          pilots(user_pilots(cfg.pilot_slots, 0)),
          solver(build_theta(sched, pilots, cfg.n_bs_antennas, cfg.pilot_power)) {}
};

inline std::vector<UserRun> simulate_users(const SystemConfig& cfg, const Geometry& geom,
                                           const PilotFixture& fixture, double f_n,
                                           int n_train, int n_total, Rng& rng) {
    const MatrixXcd h_static = generate_static_channel(cfg, geom, rng);
    std::vector<UserRun> users;
    users.reserve(geom.d_h.size());
    for (int k = 0; k < static_cast<int>(geom.d_h.size()); ++k) {
        UserRun u;
        u.trace = build_user_trace(h_static, cfg, geom, k, n_total, f_n, rng);
        u.est = estimate_csi_history(u.trace, fixture.sched, fixture.pilots, fixture.solver,
                                     cfg, n_train, rng);
        users.push_back(std::move(u));
    }
    return users;
}

/// NMSE over users at one prediction interval, comparing effective channels
/// under the all-ones reference phases.
inline double nmse_at(const std::vector<UserRun>& users,
                      const std::vector<std::vector<VectorXcd>>& predictions, int n_train,
                      int p, const SystemConfig& cfg) {
    const PhaseVector ones = PhaseVector::all_ones(cfg.ris_groups);
    std::vector<VectorXcd> pred, truth;
    for (std::size_t k = 0; k < users.size(); ++k) {
        pred.push_back(effective_from_stacked(predictions[k][p], cfg.n_bs_antennas,
                                              cfg.ris_groups));
        truth.push_back(users[k].trace.effective(n_train + p, ones));
    }
    return nmse(pred, truth);
}

} // namespace detail

/// Prediction NMSE versus horizon at f_d = 50 Hz: sample-ACF AR baselines of
/// order 8/16/24 against CNN-AR dispatch.  The training window is extended to
/// 25 intervals so the order-24 baseline stays identifiable (V >= Q+1).
inline ResultTable run_nmse_vs_horizon(const Scenario& sc, const Checkpoint& ckpt,
                                       int trials, std::uint64_t seed) {
    const auto t0 = std::chrono::steady_clock::now();
    const SystemConfig& cfg = sc.cfg;
    const double f_n = 50.0 * cfg.sample_interval;
    const int horizon = cfg.predict_intervals;
    const std::vector<int> baseline_orders{8, 16, 24};
    const int n_train = std::max(cfg.train_intervals, *std::max_element(
                                     baseline_orders.begin(), baseline_orders.end()) + 1);
    const detail::PilotFixture fixture(cfg);

    // methods[0..2] = AR baselines, methods[3] = CNN-AR
    std::vector<std::vector<std::vector<double>>> nmse_by_method(
        4, std::vector<std::vector<double>>(horizon));
    for (int t = 0; t < trials; ++t) {
        Rng rng = Rng::substream(seed, t);
        const auto users = detail::simulate_users(cfg, sc.geom, fixture, f_n, n_train,
                                                  n_train + horizon, rng);
        for (std::size_t m = 0; m < baseline_orders.size() + 1; ++m) {
            std::vector<std::vector<VectorXcd>> predictions;
            for (const auto& u : users) {
                if (m < baseline_orders.size()) {
                    const ArModel model =
                        fit_ar_from_csi(u.est, baseline_orders[m], cfg.loading);
                    predictions.push_back(predict_multi(u.est, model, horizon));
                } else {
                    predictions.push_back(
                        cnn_ar_predict(u.est, ckpt.net, ckpt.bank, cfg, horizon).snapshots);
                }
            }
            for (int p = 0; p < horizon; ++p)
                nmse_by_method[m][p].push_back(
                    detail::nmse_at(users, predictions, n_train, p, cfg));
        }
    }

    ResultTable table;
    table.seed = seed;
    table.columns = {"horizon",    "ar8_med",  "ar8_iqr",  "ar16_med", "ar16_iqr",
                     "ar24_med",   "ar24_iqr", "cnnar_med", "cnnar_iqr"};
    for (int p = 0; p < horizon; ++p)
        table.add_row({static_cast<double>(p + 1), median(nmse_by_method[0][p]),
                       iqr(nmse_by_method[0][p]), median(nmse_by_method[1][p]),
                       iqr(nmse_by_method[1][p]), median(nmse_by_method[2][p]),
                       iqr(nmse_by_method[2][p]), median(nmse_by_method[3][p]),
                       iqr(nmse_by_method[3][p])});
    table.wall_clock_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return table;
}

/// NMSE at horizons 10 and 20 over the f_d grid 10..100 Hz.
inline ResultTable run_nmse_vs_doppler(const Scenario& sc, const Checkpoint& ckpt,
                                       int trials, std::uint64_t seed) {
    const auto t0 = std::chrono::steady_clock::now();
    const SystemConfig& cfg = sc.cfg;
    const int n_train = cfg.train_intervals;
    const int horizon = std::max(cfg.predict_intervals, 20);
    const detail::PilotFixture fixture(cfg);

    ResultTable table;
    table.seed = seed;
    table.columns = {"f_d_hz",     "ar_h10_med", "ar_h10_iqr", "ar_h20_med", "ar_h20_iqr",
                     "cnn_h10_med", "cnn_h10_iqr", "cnn_h20_med", "cnn_h20_iqr"};
    for (int grid = 0; grid < 10; ++grid) {
        const double f_d = 10.0 * (grid + 1);
        const double f_n = f_d * cfg.sample_interval;
        std::vector<double> ar10, ar20, cnn10, cnn20;
        for (int t = 0; t < trials; ++t) {
            Rng rng = Rng::substream(seed, 1000ull * grid + t);
            const auto users = detail::simulate_users(cfg, sc.geom, fixture, f_n, n_train,
                                                      n_train + horizon, rng);
            std::vector<std::vector<VectorXcd>> ar_pred, cnn_pred;
            for (const auto& u : users) {
                const ArModel model = fit_ar_from_csi(u.est, cfg.ar_order, cfg.loading);
                ar_pred.push_back(predict_multi(u.est, model, horizon));
                cnn_pred.push_back(
                    cnn_ar_predict(u.est, ckpt.net, ckpt.bank, cfg, horizon).snapshots);
            }
            ar10.push_back(detail::nmse_at(users, ar_pred, n_train, 9, cfg));
            ar20.push_back(detail::nmse_at(users, ar_pred, n_train, 19, cfg));
            cnn10.push_back(detail::nmse_at(users, cnn_pred, n_train, 9, cfg));
            cnn20.push_back(detail::nmse_at(users, cnn_pred, n_train, 19, cfg));
        }
        table.add_row({f_d, median(ar10), iqr(ar10), median(ar20), iqr(ar20), median(cnn10),
                       iqr(cnn10), median(cnn20), iqr(cnn20)});
    }
    table.wall_clock_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return table;
}

namespace detail {

/// Downlink SE at one prediction interval, with theta and u derived from the
/// given CSI and evaluated on the true channel.
inline double se_from_csi(const UserRun& user, int l, const VectorXcd& csi_d,
                          const MatrixXcd& csi_g, const SystemConfig& cfg) {
    const BeamformingSolution sol = optimize_phases(csi_g, csi_d);
    const VectorXcd u =
        mrt_beamformer(effective_channel(csi_g, sol.theta, csi_d));
    return spectral_efficiency(user.trace.cascaded(l), sol.theta, user.trace.d[l], u,
                               cfg.data_power, cfg.noise_variance);
}

} // namespace detail

/// Average downlink SE over the prediction phase versus the common horizontal
/// user offset d_h, for perfect / CNN-AR / AR-baseline CSI.
inline ResultTable run_se_vs_distance(const Scenario& sc, const Checkpoint& ckpt,
                                      int trials, std::uint64_t seed) {
    const auto t0 = std::chrono::steady_clock::now();
    const SystemConfig& cfg = sc.cfg;
    const double f_n = 50.0 * cfg.sample_interval;
    const int n_train = cfg.train_intervals;
    const int horizon = cfg.predict_intervals;
    const detail::PilotFixture fixture(cfg);
    const std::vector<double> dh_grid{2, 7, 13, 19, 25, 31, 37, 43, 47, 50};

    ResultTable table;
    table.seed = seed;
    table.columns = {"d_h_m",      "perfect_med", "perfect_iqr", "cnnar_med",
                     "cnnar_iqr",  "ar_med",      "ar_iqr"};
    for (std::size_t gi = 0; gi < dh_grid.size(); ++gi) {
        Geometry geom = sc.geom;
        for (double& dh : geom.d_h) dh = std::min(dh_grid[gi], geom.d_bs_ris - 0.5);
        geom.validate();
        std::vector<double> se_perfect, se_cnn, se_ar;
        for (int t = 0; t < trials; ++t) {
            Rng rng = Rng::substream(seed, 1000ull * gi + t);
            const auto users = detail::simulate_users(cfg, geom, fixture, f_n, n_train,
                                                      n_train + horizon, rng);
            std::vector<double> acc_perfect, acc_cnn, acc_ar;
            for (const auto& u : users) {
                const ArModel ar_model = fit_ar_from_csi(u.est, cfg.ar_order, cfg.loading);
                const auto ar_pred = predict_multi(u.est, ar_model, horizon);
                const auto cnn_pred =
                    cnn_ar_predict(u.est, ckpt.net, ckpt.bank, cfg, horizon).snapshots;
                for (int p = 0; p < horizon; ++p) {
                    const int l = n_train + p;
                    acc_perfect.push_back(detail::se_from_csi(
                        u, l, u.trace.d[l], u.trace.cascaded(l), cfg));
                    const SplitEstimate cnn_split =
                        split_estimate(cnn_pred[p], cfg.n_bs_antennas, cfg.ris_groups);
                    acc_cnn.push_back(
                        detail::se_from_csi(u, l, cnn_split.d, cnn_split.G, cfg));
                    const SplitEstimate ar_split =
                        split_estimate(ar_pred[p], cfg.n_bs_antennas, cfg.ris_groups);
                    acc_ar.push_back(detail::se_from_csi(u, l, ar_split.d, ar_split.G, cfg));
                }
            }
            se_perfect.push_back(average_se(acc_perfect));
            se_cnn.push_back(average_se(acc_cnn));
            se_ar.push_back(average_se(acc_ar));
        }
        table.add_row({dh_grid[gi], median(se_perfect), iqr(se_perfect), median(se_cnn),
                       iqr(se_cnn), median(se_ar), iqr(se_ar)});
    }
    table.wall_clock_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return table;
}

/// Pilot-overhead accounting over a (V, P) grid; always includes the config's
/// own (V, P) pair.
inline ResultTable run_overhead(const Scenario& sc) {
    const auto t0 = std::chrono::steady_clock::now();
    ResultTable table;
    table.columns = {"train_intervals", "predict_intervals", "conventional", "proposed",
                     "ratio"};
    std::vector<std::pair<int, int>> grid;
    for (int v : {10, 20, 30, 40})
        for (int p : {0, 10, 20, 30, 40}) grid.emplace_back(v, p);
    grid.emplace_back(sc.cfg.train_intervals, sc.cfg.predict_intervals);
    for (auto [v, p] : grid) {
        SystemConfig cfg = sc.cfg;
        cfg.train_intervals = v;
        cfg.predict_intervals = p;
        const OverheadReport rep = pilot_overhead(cfg);
        table.add_row({static_cast<double>(v), static_cast<double>(p),
                       static_cast<double>(rep.conventional),
                       static_cast<double>(rep.proposed), rep.ratio});
    }
    table.wall_clock_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return table;
}

} // namespace risar

#endif // RISAR_EXPERIMENTS_HPP
