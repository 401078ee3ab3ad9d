#ifndef RISAR_CLASSIFIER_HPP
#define RISAR_CLASSIFIER_HPP

#include <Eigen/Dense>

#include <cstdint>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <vector>

#include "risar/ar.hpp"
#include "risar/channel.hpp"
#include "risar/nn.hpp"
#include "risar/pilots.hpp"
#include "risar/scenario.hpp"

namespace risar {

/// Real-valued 2N x V classifier input: top block Re, bottom block Im of the
/// effective channel snapshots, standardized to zero mean / unit variance.
inline MatrixXd preprocess(const std::vector<VectorXcd>& estimates) {
    if (estimates.empty()) throw std::invalid_argument("preprocess: empty window");
    const Eigen::Index n = estimates[0].size();
    const int v = static_cast<int>(estimates.size());
    MatrixXd window(2 * n, v);
    for (int l = 0; l < v; ++l) {
        if (estimates[l].size() != n)
            throw std::invalid_argument("preprocess: snapshot length mismatch");
        window.col(l).head(n) = estimates[l].real();
        window.col(l).tail(n) = estimates[l].imag();
    }
    const double mean = window.mean();
    window.array() -= mean;
    const double var = window.squaredNorm() / static_cast<double>(window.size());
    if (var > 0) window /= std::sqrt(var);
    return window;
}

/// Pre-computed AR models per normalized-Doppler class, strictly increasing f_n.
struct DopplerClassBank {
    struct Entry {
        double f_n;
        ArModel model;
    };
    std::vector<Entry> entries;

    int classes() const { return static_cast<int>(entries.size()); }

    void validate() const {
        for (std::size_t i = 0; i < entries.size(); ++i) {
            if (i > 0 && !(entries[i].f_n > entries[i - 1].f_n))
                throw std::invalid_argument("DopplerClassBank: f_n must be strictly increasing");
            if (!entries[i].model.is_stable())
                throw std::invalid_argument("DopplerClassBank: unstable AR model in bank");
        }
    }
};

inline DopplerClassBank build_bank(const std::vector<double>& class_fn, int order,
                                   double epsilon) {
    DopplerClassBank bank;
    for (double f_n : class_fn)
        bank.entries.push_back({f_n, levinson_durbin(loaded_acf(f_n, epsilon, order))});
    bank.validate();
    return bank;
}

inline int classify(const ConvNet& net, const MatrixXd& window) {
    return argmax_class(net.forward(window));
}

/// Geometry randomization for dataset generation.
struct GeometryRanges {
    double d_bs_ris = 51.0;
    double dh_min = 2.0, dh_max = 49.0;
    double dv_min = 1.0, dv_max = 5.0;
};

/// Full pilot + LS pipeline for one user over n_intervals; returns the per-
/// interval stacked estimates f_hat.
inline std::vector<VectorXcd> estimate_csi_history(const ChannelTrace& trace,
                                                   const ReflectionSchedule& sched,
                                                   const VectorXcd& pilots,
                                                   const LsSolver& solver,
                                                   const SystemConfig& cfg, int n_intervals,
                                                   Rng& rng) {
    std::vector<VectorXcd> est;
    est.reserve(n_intervals);
    for (int l = 0; l < n_intervals; ++l)
        est.push_back(solver.solve(simulate_uplink_pilots(trace, sched, pilots, cfg, l, rng)));
    return est;
}

/// Effective channel under the all-ones reference phases, from a stacked
/// estimate: h = d + sum_m G(:,m).
inline VectorXcd effective_from_stacked(const VectorXcd& f, int n_antennas, int m_groups) {
    const SplitEstimate se = split_estimate(f, n_antennas, m_groups);
    return se.d + se.G.rowwise().sum();
}

/// Labeled training windows: per sample a random geometry is drawn, a trace is
/// synthesized at the class f_n, and the pilot+LS pipeline runs for V intervals.
inline std::vector<LabeledWindow> gen_dataset(const SystemConfig& cfg,
                                              const std::vector<double>& class_fn,
                                              int samples_per_class, Rng& rng,
                                              const GeometryRanges& ranges = {}) {
    if (samples_per_class < 1)
        throw std::invalid_argument("gen_dataset: need >= 1 sample per class");
    if (!(ranges.dh_min < ranges.dh_max) || !(ranges.dv_min < ranges.dv_max) ||
        ranges.dh_min <= 0 || ranges.dv_min <= 0 || ranges.dh_max >= ranges.d_bs_ris)
        throw std::invalid_argument("gen_dataset: invalid geometry ranges");
    const ReflectionSchedule sched = dft_reflection(cfg.ris_groups, cfg.pilot_slots);
    const VectorXcd pilots = user_pilots(cfg.pilot_slots, 0);
    const LsSolver solver(build_theta(sched, pilots, cfg.n_bs_antennas, cfg.pilot_power));
    std::vector<LabeledWindow> out;
    out.reserve(class_fn.size() * samples_per_class);
    for (std::size_t cls = 0; cls < class_fn.size(); ++cls) {
        for (int s = 0; s < samples_per_class; ++s) {
            Geometry geom;
            geom.d_bs_ris = ranges.d_bs_ris;
            geom.d_h = {rng.uniform(ranges.dh_min, ranges.dh_max)};
            geom.d_v = {rng.uniform(ranges.dv_min, ranges.dv_max)};
            const MatrixXcd h_static = generate_static_channel(cfg, geom, rng);
            const ChannelTrace trace = build_user_trace(h_static, cfg, geom, 0,
                                                        cfg.train_intervals, class_fn[cls], rng);
            const auto est = estimate_csi_history(trace, sched, pilots, solver, cfg,
                                                  cfg.train_intervals, rng);
            std::vector<VectorXcd> eff;
            eff.reserve(est.size());
            for (const auto& f : est)
                eff.push_back(effective_from_stacked(f, cfg.n_bs_antennas, cfg.ris_groups));
            out.push_back({preprocess(eff), static_cast<int>(cls)});
        }
    }
    return out;
}

struct CnnArPrediction {
    int class_index = -1;
    std::vector<VectorXcd> snapshots; // predicted f_hat for the next P intervals
};

/// CNN-AR dispatch: classify the aging pattern of the estimated history, load
/// the matching pre-computed AR model, and forecast P stacked snapshots.
inline CnnArPrediction cnn_ar_predict(const std::vector<VectorXcd>& history,
                                      const ConvNet& net, const DopplerClassBank& bank,
                                      const SystemConfig& cfg, int horizon) {
    if (net.spec.classes != bank.classes())
        throw std::invalid_argument("cnn_ar_predict: classifier/bank class-count mismatch");
    const int v_net = net.spec.input_w;
    if (static_cast<int>(history.size()) < v_net)
        throw std::invalid_argument("cnn_ar_predict: history shorter than classifier window");
    std::vector<VectorXcd> eff;
    eff.reserve(v_net);
    for (std::size_t l = history.size() - v_net; l < history.size(); ++l)
        eff.push_back(effective_from_stacked(history[l], cfg.n_bs_antennas, cfg.ris_groups));
    CnnArPrediction pred;
    pred.class_index = classify(net, preprocess(eff));
    const ArModel& model = bank.entries[pred.class_index].model;
    pred.snapshots = predict_multi(history, model, horizon);
    return pred;
}

// ---------------------------------------------------------------------------
// Binary file formats (little-endian).
//
// Dataset ("RSDS", version 1):
//   magic[4], u32 version, u32 count, u32 rows, u32 cols,
//   then per record: u32 label, rows*cols f64 (row-major).
//
// Checkpoint ("RSCP", version 1):
//   magic[4], u32 version, u32 spec fields (input_h, input_w, conv1_filters,
//   conv2_filters, kernel_h, kernel_w, fc1_units, fc2_units, classes), weight tensors in
//   parameter order (column-major f64), then the class bank: u32 classes and
//   per class f64 f_n, u32 order, f64 loading, f64 innovation_variance,
//   order*f64 coefficients.
// ---------------------------------------------------------------------------

namespace detail {

inline void put_u32(std::FILE* f, std::uint32_t v) { std::fwrite(&v, sizeof v, 1, f); }
inline void put_f64(std::FILE* f, double v) { std::fwrite(&v, sizeof v, 1, f); }
inline std::uint32_t get_u32(std::FILE* f) {
    std::uint32_t v = 0;
    if (std::fread(&v, sizeof v, 1, f) != 1) throw std::runtime_error("truncated file");
    return v;
}
inline double get_f64(std::FILE* f) {
    double v = 0;
    if (std::fread(&v, sizeof v, 1, f) != 1) throw std::runtime_error("truncated file");
    return v;
}

} // namespace detail

inline void save_dataset(const std::vector<LabeledWindow>& data, const std::string& path) {
    if (data.empty()) throw std::invalid_argument("save_dataset: empty dataset");
    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) throw std::runtime_error("save_dataset: cannot open " + path);
    std::fwrite("RSDS", 1, 4, f);
    detail::put_u32(f, 1);
    detail::put_u32(f, static_cast<std::uint32_t>(data.size()));
    detail::put_u32(f, static_cast<std::uint32_t>(data[0].window.rows()));
    detail::put_u32(f, static_cast<std::uint32_t>(data[0].window.cols()));
    for (const auto& rec : data) {
        detail::put_u32(f, static_cast<std::uint32_t>(rec.label));
        for (Eigen::Index i = 0; i < rec.window.rows(); ++i)
            for (Eigen::Index j = 0; j < rec.window.cols(); ++j)
                detail::put_f64(f, rec.window(i, j));
    }
    std::fclose(f);
}

inline std::vector<LabeledWindow> load_dataset(const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "rb");
    if (!f) throw std::runtime_error("load_dataset: cannot open " + path);
    char magic[4];
    if (std::fread(magic, 1, 4, f) != 4 || std::string(magic, 4) != "RSDS") {
        std::fclose(f);
        throw std::runtime_error("load_dataset: bad magic in " + path);
    }
    try {
        if (detail::get_u32(f) != 1) throw std::runtime_error("load_dataset: unknown version");
        const std::uint32_t count = detail::get_u32(f);
        const std::uint32_t rows = detail::get_u32(f);
        const std::uint32_t cols = detail::get_u32(f);
        std::vector<LabeledWindow> data(count);
        for (auto& rec : data) {
            rec.label = static_cast<int>(detail::get_u32(f));
            rec.window.resize(rows, cols);
            for (std::uint32_t i = 0; i < rows; ++i)
                for (std::uint32_t j = 0; j < cols; ++j) rec.window(i, j) = detail::get_f64(f);
        }
        std::fclose(f);
        return data;
    } catch (...) {
        std::fclose(f);
        throw;
    }
}

inline void save_checkpoint(ConvNet& net, const DopplerClassBank& bank,
                            const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) throw std::runtime_error("save_checkpoint: cannot open " + path);
    std::fwrite("RSCP", 1, 4, f);
    detail::put_u32(f, 1);
    const ConvNetSpec& s = net.spec;
    for (int v : {s.input_h, s.input_w, s.conv1_filters, s.conv2_filters, s.kernel_h, s.kernel_w,
                  s.fc1_units, s.fc2_units, s.classes})
        detail::put_u32(f, static_cast<std::uint32_t>(v));
    for (ParamTensor* p : net.parameters())
        std::fwrite(p->value.data(), sizeof(double), p->value.size(), f);
    detail::put_u32(f, static_cast<std::uint32_t>(bank.classes()));
    for (const auto& e : bank.entries) {
        detail::put_f64(f, e.f_n);
        detail::put_u32(f, static_cast<std::uint32_t>(e.model.order));
        detail::put_f64(f, e.model.loading);
        detail::put_f64(f, e.model.innovation_variance);
        for (double a : e.model.coeffs) detail::put_f64(f, a);
    }
    std::fclose(f);
}

struct Checkpoint {
    ConvNet net;
    DopplerClassBank bank;
};

inline Checkpoint load_checkpoint(const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "rb");
    if (!f) throw std::runtime_error("load_checkpoint: cannot open " + path);
    char magic[4];
    if (std::fread(magic, 1, 4, f) != 4 || std::string(magic, 4) != "RSCP") {
        std::fclose(f);
        throw std::runtime_error("load_checkpoint: bad magic in " + path);
    }
    try {
        if (detail::get_u32(f) != 1)
            throw std::runtime_error("load_checkpoint: unknown version");
        ConvNetSpec s;
        s.input_h = static_cast<int>(detail::get_u32(f));
        s.input_w = static_cast<int>(detail::get_u32(f));
        s.conv1_filters = static_cast<int>(detail::get_u32(f));
        s.conv2_filters = static_cast<int>(detail::get_u32(f));
        s.kernel_h = static_cast<int>(detail::get_u32(f));
        s.kernel_w = static_cast<int>(detail::get_u32(f));
        s.fc1_units = static_cast<int>(detail::get_u32(f));
        s.fc2_units = static_cast<int>(detail::get_u32(f));
        s.classes = static_cast<int>(detail::get_u32(f));
        Checkpoint ck{ConvNet(s, 0), {}};
        for (ParamTensor* p : ck.net.parameters())
            if (std::fread(p->value.data(), sizeof(double), p->value.size(), f) !=
                static_cast<std::size_t>(p->value.size()))
                throw std::runtime_error("load_checkpoint: truncated weights");
        const std::uint32_t classes = detail::get_u32(f);
        for (std::uint32_t c = 0; c < classes; ++c) {
            DopplerClassBank::Entry e;
            e.f_n = detail::get_f64(f);
            e.model.order = static_cast<int>(detail::get_u32(f));
            e.model.loading = detail::get_f64(f);
            e.model.innovation_variance = detail::get_f64(f);
            e.model.f_n = e.f_n;
            e.model.coeffs.resize(e.model.order);
            for (double& a : e.model.coeffs) a = detail::get_f64(f);
            ck.bank.entries.push_back(std::move(e));
        }
        std::fclose(f);
        ck.bank.validate();
        return ck;
    } catch (...) {
        std::fclose(f);
        throw;
    }
}

} // namespace risar

#endif // RISAR_CLASSIFIER_HPP
