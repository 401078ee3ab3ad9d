#ifndef RISAR_BEAMFORMING_HPP
#define RISAR_BEAMFORMING_HPP

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "risar/channel.hpp"
#include "risar/scenario.hpp"

namespace risar {

/// MRT: u = h/||h||, so h^H u = ||h||.
inline VectorXcd mrt_beamformer(const VectorXcd& h) {
    const double norm = h.norm();
    if (norm == 0.0) throw std::domain_error("mrt_beamformer: degenerate zero channel");
    return h / norm;
}

struct BeamformingSolution {
    PhaseVector theta;
    VectorXcd beamformer;  // u*, unit norm
    double objective = 0.0; // ||G theta + d||^2
    int sweeps = 0;
    bool converged = false;
};

/// Cyclic coordinate ascent on ||G theta + d||^2 over unit-modulus phases.
/// Each per-coordinate update is exactly optimal, so the objective is
/// monotonically non-decreasing across sweeps.
inline BeamformingSolution optimize_phases(const MatrixXcd& g_cascaded, const VectorXcd& d,
                                           double tol = 1e-8, int max_iters = 100) {
    if (g_cascaded.rows() != d.size())
        throw std::invalid_argument("optimize_phases: dimension mismatch");
    if (!(tol > 0)) throw std::invalid_argument("optimize_phases: tol must be > 0");
    if (!g_cascaded.allFinite() || !d.allFinite())
        throw std::invalid_argument("optimize_phases: non-finite inputs");
    const int m_groups = static_cast<int>(g_cascaded.cols());
    BeamformingSolution sol;
    sol.theta = PhaseVector::all_ones(m_groups);
    VectorXcd c = d + g_cascaded.rowwise().sum(); // current effective channel
    double prev = c.squaredNorm();
    for (int sweep = 0; sweep < max_iters; ++sweep) {
        for (int m = 0; m < m_groups; ++m) {
            const VectorXcd f_m = g_cascaded.col(m);
            const VectorXcd c_rest = c - sol.theta.phases(m) * f_m;
            const cplx corr = c_rest.dot(f_m); // c_rest^H f_m
            if (std::abs(corr) > 0.0) {
                const cplx phase = std::polar(1.0, -std::arg(corr));
                sol.theta.phases(m) = phase;
                c = c_rest + phase * f_m;
            }
        }
        ++sol.sweeps;
        const double obj = c.squaredNorm();
        if (obj < prev * (1.0 - 1e-12))
            throw std::runtime_error("optimize_phases: objective decreased");
        if (obj - prev <= tol * std::max(prev, 1e-300)) {
            sol.converged = true;
            prev = obj;
            break;
        }
        prev = obj;
    }
    sol.objective = prev;
    sol.beamformer = mrt_beamformer(c);
    return sol;
}

/// SE = log2(1 + P_d/sigma_n^2 |(G theta + d)^H u|^2).
inline double spectral_efficiency(const MatrixXcd& g_cascaded, const PhaseVector& theta,
                                  const VectorXcd& d, const VectorXcd& u, double data_power,
                                  double noise_variance) {
    const VectorXcd h = effective_channel(g_cascaded, theta, d);
    const double gain = std::norm(h.dot(u)); // |h^H u|^2
    return std::log2(1.0 + data_power / noise_variance * gain);
}

/// Per-user ||h_hat - h||^2 / ||h||^2 averaged over users; zero-norm truth
/// snapshots are excluded and counted.
inline double nmse(const std::vector<VectorXcd>& predicted,
                   const std::vector<VectorXcd>& truth, int* excluded_count = nullptr) {
    if (predicted.size() != truth.size() || truth.empty())
        throw std::invalid_argument("nmse: shape mismatch");
    double acc = 0.0;
    int used = 0, excluded = 0;
    for (std::size_t k = 0; k < truth.size(); ++k) {
        if (predicted[k].size() != truth[k].size())
            throw std::invalid_argument("nmse: shape mismatch");
        const double denom = truth[k].squaredNorm();
        if (denom == 0.0) {
            ++excluded;
            continue;
        }
        acc += (predicted[k] - truth[k]).squaredNorm() / denom;
        ++used;
    }
    if (excluded_count) *excluded_count = excluded;
    if (used == 0) throw std::invalid_argument("nmse: all truth snapshots have zero norm");
    return acc / used;
}

struct OverheadReport {
    std::int64_t conventional = 0; // (M~ N K + N K)(V + P)
    std::int64_t proposed = 0;     // (M N K + N K) V
    double ratio = 0.0;
};

inline OverheadReport pilot_overhead(const SystemConfig& cfg) {
    OverheadReport rep;
    const std::int64_t nk =
        static_cast<std::int64_t>(cfg.n_bs_antennas) * cfg.n_users;
    rep.conventional = (cfg.ris_elements_total * nk + nk) *
                       (static_cast<std::int64_t>(cfg.train_intervals) + cfg.predict_intervals);
    rep.proposed = (cfg.ris_groups * nk + nk) * cfg.train_intervals;
    rep.ratio = static_cast<double>(rep.conventional) / static_cast<double>(rep.proposed);
    return rep;
}

inline double average_se(const std::vector<double>& se_values) {
    if (se_values.empty()) throw std::invalid_argument("average_se: empty series");
    double acc = 0.0;
    for (double v : se_values) acc += v;
    return acc / static_cast<double>(se_values.size());
}

} // namespace risar

#endif // RISAR_BEAMFORMING_HPP
