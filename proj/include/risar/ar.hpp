#ifndef RISAR_AR_HPP
#define RISAR_AR_HPP

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <complex>
#include <cstdio>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "risar/channel.hpp"
#include "risar/rng.hpp"

namespace risar {

/// Loaded ACF: R_hat[0] = 1 + epsilon, R_hat[q] = J0(2 pi f_n q).
struct AcfVector {
    std::vector<double> values; // R_hat[0..Q]
    double f_n = 0.0;
    double loading = 0.0;

    int order() const { return static_cast<int>(values.size()) - 1; }
};

inline AcfVector loaded_acf(double f_n, double epsilon, int order) {
    if (order < 1) throw std::invalid_argument("loaded_acf: order must be >= 1");
    AcfVector v;
    v.f_n = f_n;
    v.loading = epsilon;
    v.values.resize(order + 1);
    v.values[0] = 1.0 + epsilon;
    for (int q = 1; q <= order; ++q) v.values[q] = acf(f_n, q);
    return v;
}

/// AR(Q) model h[l] = -sum_q a_q h[l-q] + w[l] with real coefficients.
struct ArModel {
    int order = 0;
    std::vector<double> coeffs; // a_1..a_Q
    double innovation_variance = 0.0;
    double f_n = 0.0;
    double loading = 0.0;

    /// Spectral radius of the companion matrix of z^Q + a_1 z^{Q-1} + ... + a_Q.
    double spectral_radius() const {
        Eigen::MatrixXd comp = Eigen::MatrixXd::Zero(order, order);
        for (int q = 0; q < order; ++q) comp(0, q) = -coeffs[q];
        for (int q = 1; q < order; ++q) comp(q, q - 1) = 1.0;
        return comp.eigenvalues().cwiseAbs().maxCoeff();
    }

    bool is_stable() const { return spectral_radius() < 1.0; }
};

/// Levinson-Durbin solve of a = -R^{-1} w on the loaded Toeplitz system.
inline ArModel levinson_durbin(const AcfVector& acf_vec) {
    const int q_order = acf_vec.order();
    const std::vector<double>& r = acf_vec.values;
    if (r[0] <= 0) throw std::invalid_argument("levinson_durbin: R_hat[0] must be > 0");
    std::vector<double> phi(q_order, 0.0); // forward-prediction coefficients
    double err = r[0];
    for (int q = 1; q <= q_order; ++q) {
        double num = r[q];
        for (int j = 1; j < q; ++j) num -= phi[j - 1] * r[q - j];
        const double k = num / err;
        if (!(std::abs(k) < 1.0))
            throw std::runtime_error("levinson_durbin: reflection coefficient >= 1 at order " +
                                     std::to_string(q));
        std::vector<double> prev(phi.begin(), phi.begin() + (q - 1));
        phi[q - 1] = k;
        for (int j = 1; j < q; ++j) phi[j - 1] = prev[j - 1] - k * prev[q - 1 - j];
        err *= (1.0 - k * k);
    }
    ArModel model;
    model.order = q_order;
    model.coeffs.resize(q_order);
    for (int q = 0; q < q_order; ++q) model.coeffs[q] = -phi[q];
    model.f_n = acf_vec.f_n;
    model.loading = acf_vec.loading;
    double var = r[0];
    for (int q = 1; q <= q_order; ++q) var += model.coeffs[q - 1] * r[q];
    model.innovation_variance = var;
    return model;
}

/// Biased sample ACF (divide by V) averaged over all coefficient trajectories,
/// normalized to r[0] = 1.  Rows of `history` are per-interval snapshots.
inline std::vector<double> sample_acf(const std::vector<VectorXcd>& history, int max_lag) {
    const int v = static_cast<int>(history.size());
    if (v < 1) throw std::invalid_argument("sample_acf: empty history");
    const Eigen::Index dim = history[0].size();
    std::vector<double> r(max_lag + 1, 0.0);
    for (int lag = 0; lag <= max_lag; ++lag) {
        double acc = 0.0;
        for (int l = 0; l + lag < v; ++l)
            acc += (history[l + lag].dot(history[l])).real();
        r[lag] = acc / (static_cast<double>(v) * dim);
    }
    if (r[0] <= 0) throw std::invalid_argument("sample_acf: degenerate all-zero history");
    const double scale = 1.0 / r[0];
    for (double& x : r) x *= scale;
    return r;
}

/// Baseline AR fit from estimated CSI snapshots: sample ACF, loading, Levinson.
inline ArModel fit_ar_from_csi(const std::vector<VectorXcd>& history, int order,
                               double epsilon) {
    if (static_cast<int>(history.size()) < order + 1)
        throw std::invalid_argument("fit_ar_from_csi: require V >= Q+1");
    AcfVector acf_vec;
    acf_vec.values = sample_acf(history, order);
    acf_vec.values[0] += epsilon;
    acf_vec.loading = epsilon;
    acf_vec.f_n = -1.0; // unknown, fitted from data
    return levinson_durbin(acf_vec);
}

/// One-step forecast applied independently to every complex coefficient.
inline VectorXcd predict_one(std::span<const VectorXcd> history, const ArModel& model) {
    const int q_order = model.order;
    if (static_cast<int>(history.size()) < q_order)
        throw std::invalid_argument("predict_one: insufficient history");
    VectorXcd out = VectorXcd::Zero(history[0].size());
    const std::size_t last = history.size();
    for (int q = 1; q <= q_order; ++q)
        out -= model.coeffs[q - 1] * history[last - q];
    return out;
}

/// Multi-step forecast: predictions are substituted for unavailable
/// measurements as the horizon advances.
inline std::vector<VectorXcd> predict_multi(std::span<const VectorXcd> history,
                                            const ArModel& model, int horizon) {
    if (horizon < 1) throw std::invalid_argument("predict_multi: horizon must be >= 1");
    if (static_cast<int>(history.size()) < model.order)
        throw std::invalid_argument("predict_multi: insufficient history");
    std::vector<VectorXcd> extended(history.begin(), history.end());
    std::vector<VectorXcd> out;
    out.reserve(horizon);
    for (int p = 0; p < horizon; ++p) {
        extended.push_back(predict_one(extended, model));
        out.push_back(extended.back());
    }
    return out;
}

// --- structured-text (de)serialization for the classifier coefficient bank --

inline std::string ar_model_to_text(const ArModel& model) {
    char buf[64];
    std::string s;
    auto add = [&](const char* key, double value) {
        std::snprintf(buf, sizeof buf, "%s = %.17g\n", key, value);
        s += buf;
    };
    s += "order = " + std::to_string(model.order) + "\n";
    add("f_n", model.f_n);
    add("loading", model.loading);
    add("innovation_variance", model.innovation_variance);
    s += "coeffs =";
    for (double a : model.coeffs) {
        std::snprintf(buf, sizeof buf, " %.17g", a);
        s += buf;
    }
    s += "\n";
    return s;
}

inline ArModel ar_model_from_text(const std::string& text) {
    std::istringstream in(text);
    const auto kv = parse_key_values(in);
    ArModel model;
    try {
        model.order = std::stoi(kv.at("order"));
        model.f_n = std::stod(kv.at("f_n"));
        model.loading = std::stod(kv.at("loading"));
        model.innovation_variance = std::stod(kv.at("innovation_variance"));
        std::istringstream cs(kv.at("coeffs"));
        double a;
        while (cs >> a) model.coeffs.push_back(a);
    } catch (const std::out_of_range&) {
        throw std::runtime_error("ar_model_from_text: missing field");
    }
    if (static_cast<int>(model.coeffs.size()) != model.order)
        throw std::runtime_error("ar_model_from_text: coefficient count mismatch");
    return model;
}

} // namespace risar

#endif // RISAR_AR_HPP
