#ifndef RISAR_CHANNEL_HPP
#define RISAR_CHANNEL_HPP

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <complex>
#include <cstdio>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "risar/bessel.hpp"
#include "risar/rng.hpp"
#include "risar/scenario.hpp"

namespace risar {

using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::VectorXcd;
using Eigen::VectorXd;

/// Jakes autocorrelation R[lag] = J0(2 pi f_n |lag|).
inline double acf(double f_n, long lag) {
    if (f_n < 0) throw std::domain_error("acf: f_n must be >= 0");
    return bessel_j0(2.0 * std::numbers::pi * f_n * std::abs(lag));
}

/// Unit-modulus RIS phase vector, entries e^{j theta_m}.
struct PhaseVector {
    VectorXcd phases;

    static PhaseVector all_ones(int m) { return {VectorXcd::Ones(m)}; }

    static PhaseVector from_angles(const VectorXd& angles) {
        VectorXcd p(angles.size());
        for (Eigen::Index i = 0; i < angles.size(); ++i)
            p(i) = std::polar(1.0, angles(i));
        return {p};
    }

    void validate(double tol = 1e-9) const {
        for (Eigen::Index i = 0; i < phases.size(); ++i)
            if (std::abs(std::abs(phases(i)) - 1.0) > tol)
                throw std::invalid_argument("PhaseVector: entries must be unit modulus");
    }
};

/// Samples length-n trajectories of a zero-mean complex Gaussian process with
/// covariance variance * Toeplitz(R_hat), where R_hat[0] = 1 + epsilon and
/// R_hat[j] = J0(2 pi f_n j).  The factor is computed once and reused.
class ToeplitzGaussianSampler {
public:
    ToeplitzGaussianSampler(double f_n, int n, double epsilon) : n_(n) {
        if (n < 1) throw std::invalid_argument("ToeplitzGaussianSampler: n must be >= 1");
        MatrixXd cov(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                cov(i, j) = (i == j) ? 1.0 + epsilon : acf(f_n, i - j);
        Eigen::LLT<MatrixXd> llt(cov);
        if (llt.info() == Eigen::Success) {
            factor_ = llt.matrixL();
            return;
        }
        // Unloaded oversampled Jakes covariance is numerically singular; fall
        // back to a PSD eigen-factor and reject genuinely indefinite inputs.
        Eigen::SelfAdjointEigenSolver<MatrixXd> es(cov);
        const VectorXd ev = es.eigenvalues();
        if (ev.minCoeff() < -1e-10 * std::max(1.0, ev.maxCoeff()))
            throw std::runtime_error("ToeplitzGaussianSampler: covariance not PSD at f_n=" +
                                     std::to_string(f_n) + ", n=" + std::to_string(n));
        factor_ = es.eigenvectors() * ev.cwiseMax(0.0).cwiseSqrt().asDiagonal();
    }

    int length() const { return n_; }

    VectorXcd sample(double variance, Rng& rng) const {
        VectorXcd white(n_);
        for (int i = 0; i < n_; ++i) white(i) = rng.cnormal(1.0);
        return std::sqrt(variance) * (factor_ * white);
    }

private:
    int n_;
    MatrixXd factor_; // real factor F with F F^T = Toeplitz(R_hat)
};

/// One correlated scalar fading trajectory across n_intervals.
inline VectorXcd generate_aged_trace(double f_n, int n_intervals, double variance,
                                     double epsilon, Rng& rng) {
    return ToeplitzGaussianSampler(f_n, n_intervals, epsilon).sample(variance, rng);
}

/// Quasi-static BS-RIS channel, i.i.d. CN(0, var) entries at sub-surface level.
inline MatrixXcd generate_static_channel(const SystemConfig& cfg, const Geometry& geom,
                                         Rng& rng) {
    const double var = path_loss(geom.d_bs_ris, cfg.alpha_bs_ris, cfg.pathloss_ref);
    MatrixXcd h(cfg.ris_groups, cfg.n_bs_antennas);
    for (int i = 0; i < h.rows(); ++i)
        for (int j = 0; j < h.cols(); ++j)
            h(i, j) = rng.cnormal(var);
    return h;
}

/// G = H^H diag(g).
inline MatrixXcd cascade(const MatrixXcd& h_bs_ris, const VectorXcd& g) {
    if (h_bs_ris.rows() != g.size())
        throw std::invalid_argument("cascade: dimension mismatch");
    return h_bs_ris.adjoint() * g.asDiagonal();
}

/// h = G theta + d.
inline VectorXcd effective_channel(const MatrixXcd& g_cascaded, const PhaseVector& theta,
                                   const VectorXcd& d) {
    if (g_cascaded.cols() != theta.phases.size() || g_cascaded.rows() != d.size())
        throw std::invalid_argument("effective_channel: dimension mismatch");
    return g_cascaded * theta.phases + d;
}

/// Per-user time series: fixed H, aged d[l] and g[l], l = 0..n_intervals-1.
struct ChannelTrace {
    MatrixXcd H;                // M x N, constant across intervals
    std::vector<VectorXcd> d;   // N per interval
    std::vector<VectorXcd> g;   // M per interval
    double f_n = 0.0;
    LinkVariances vars{};

    int n_intervals() const { return static_cast<int>(d.size()); }

    MatrixXcd cascaded(int l) const { return cascade(H, g.at(l)); }

    VectorXcd effective(int l, const PhaseVector& theta) const {
        return effective_channel(cascaded(l), theta, d.at(l));
    }
};

/// Builds a trace for user k: every scalar coefficient of d and g is an
/// independent trajectory with the Jakes ACF at f_n and the link's variance.
inline ChannelTrace build_user_trace(const MatrixXcd& h_bs_ris, const SystemConfig& cfg,
                                     const Geometry& geom, int k, int n_intervals,
                                     double f_n, Rng& rng) {
    ChannelTrace tr;
    tr.H = h_bs_ris;
    tr.f_n = f_n;
    tr.vars = link_variances(cfg, geom, k);
    tr.d.assign(n_intervals, VectorXcd(cfg.n_bs_antennas));
    tr.g.assign(n_intervals, VectorXcd(cfg.ris_groups));
    const ToeplitzGaussianSampler sampler(f_n, n_intervals, cfg.loading);
    for (int i = 0; i < cfg.n_bs_antennas; ++i) {
        const VectorXcd traj = sampler.sample(tr.vars.direct, rng);
        for (int l = 0; l < n_intervals; ++l) tr.d[l](i) = traj(l);
    }
    for (int m = 0; m < cfg.ris_groups; ++m) {
        const VectorXcd traj = sampler.sample(tr.vars.ris_user, rng);
        for (int l = 0; l < n_intervals; ++l) tr.g[l](m) = traj(l);
    }
    return tr;
}

// --- binary trace dump: header (N, M, N_s, f_n), then H, d[l], g[l] ---------

inline void save_trace(const ChannelTrace& tr, const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) throw std::runtime_error("save_trace: cannot open " + path);
    const std::int32_t n = static_cast<std::int32_t>(tr.H.cols());
    const std::int32_t m = static_cast<std::int32_t>(tr.H.rows());
    const std::int32_t ns = tr.n_intervals();
    std::fwrite(&n, sizeof n, 1, f);
    std::fwrite(&m, sizeof m, 1, f);
    std::fwrite(&ns, sizeof ns, 1, f);
    std::fwrite(&tr.f_n, sizeof tr.f_n, 1, f);
    auto put = [&](const cplx* p, std::size_t count) { std::fwrite(p, sizeof(cplx), count, f); };
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) put(&tr.H(i, j), 1);
    for (int l = 0; l < ns; ++l) put(tr.d[l].data(), n);
    for (int l = 0; l < ns; ++l) put(tr.g[l].data(), m);
    std::fclose(f);
}

inline ChannelTrace load_trace(const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "rb");
    if (!f) throw std::runtime_error("load_trace: cannot open " + path);
    std::int32_t n = 0, m = 0, ns = 0;
    ChannelTrace tr;
    if (std::fread(&n, sizeof n, 1, f) != 1 || std::fread(&m, sizeof m, 1, f) != 1 ||
        std::fread(&ns, sizeof ns, 1, f) != 1 || std::fread(&tr.f_n, sizeof tr.f_n, 1, f) != 1) {
        std::fclose(f);
        throw std::runtime_error("load_trace: truncated header in " + path);
    }
    auto get = [&](cplx* p, std::size_t count) {
        if (std::fread(p, sizeof(cplx), count, f) != count) {
            std::fclose(f);
            throw std::runtime_error("load_trace: truncated data in " + path);
        }
    };
    tr.H.resize(m, n);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) get(&tr.H(i, j), 1);
    tr.d.assign(ns, VectorXcd(n));
    tr.g.assign(ns, VectorXcd(m));
    for (int l = 0; l < ns; ++l) get(tr.d[l].data(), n);
    for (int l = 0; l < ns; ++l) get(tr.g[l].data(), m);
    std::fclose(f);
    return tr;
}

} // namespace risar

#endif // RISAR_CHANNEL_HPP
