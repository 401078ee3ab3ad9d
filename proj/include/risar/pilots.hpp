#ifndef RISAR_PILOTS_HPP
#define RISAR_PILOTS_HPP

#include <Eigen/Dense>

#include <complex>
#include <numbers>
#include <stdexcept>

#include "risar/channel.hpp"
#include "risar/rng.hpp"
#include "risar/scenario.hpp"

namespace risar {

/// DFT reflection schedule: Phi is T x (M+1), first column all-ones, and the
/// remaining columns hold the per-slot sub-surface phases.
struct ReflectionSchedule {
    MatrixXcd phi;

    int slots() const { return static_cast<int>(phi.rows()); }
    int groups() const { return static_cast<int>(phi.cols()) - 1; }

    /// RIS phase vector applied during slot t.
    PhaseVector slot_phases(int t) const {
        return {phi.row(t).tail(groups()).transpose()};
    }
};

inline ReflectionSchedule dft_reflection(int m_groups, int t_slots) {
    if (t_slots < m_groups + 1)
        throw std::invalid_argument("dft_reflection: require T >= M+1 for identifiability");
    ReflectionSchedule sched;
    sched.phi.resize(t_slots, m_groups + 1);
    for (int t = 0; t < t_slots; ++t)
        for (int m = 0; m <= m_groups; ++m)
            sched.phi(t, m) =
                std::polar(1.0, -2.0 * std::numbers::pi * t * m / t_slots);
    return sched;
}

/// Unit-modulus pilot sequence of user k: row k of a T-point DFT, which makes
/// distinct users' sequences orthogonal over the T slots.
inline VectorXcd user_pilots(int t_slots, int user) {
    VectorXcd x(t_slots);
    for (int t = 0; t < t_slots; ++t)
        x(t) = std::polar(1.0, -2.0 * std::numbers::pi * t * user / t_slots);
    return x;
}

/// Theta = X (Phi kron I_N) with the pilot amplitude sqrt(P_p) folded into X,
/// so least squares recovers the stacked channel f directly.
inline MatrixXcd build_theta(const ReflectionSchedule& sched, const VectorXcd& pilots,
                             int n_antennas, double pilot_power) {
    const int t_slots = sched.slots();
    if (pilots.size() != t_slots)
        throw std::invalid_argument("build_theta: pilot length must equal T");
    const int cols = static_cast<int>(sched.phi.cols());
    MatrixXcd theta = MatrixXcd::Zero(t_slots * n_antennas, cols * n_antennas);
    const double amp = std::sqrt(pilot_power);
    for (int t = 0; t < t_slots; ++t)
        for (int m = 0; m < cols; ++m) {
            const cplx w = amp * pilots(t) * sched.phi(t, m);
            for (int n = 0; n < n_antennas; ++n)
                theta(t * n_antennas + n, m * n_antennas + n) = w;
        }
    return theta;
}

/// Received pilot stack of one user over T slots in interval l (Eq. per-user
/// reception: y[t] = sqrt(P_p) (G theta_t + d) x[t] + v).
inline VectorXcd simulate_uplink_pilots(const ChannelTrace& trace,
                                        const ReflectionSchedule& sched,
                                        const VectorXcd& pilots, const SystemConfig& cfg,
                                        int l, Rng& rng) {
    if (l < 0 || l >= trace.n_intervals())
        throw std::out_of_range("simulate_uplink_pilots: interval out of range");
    if (sched.groups() != trace.H.rows())
        throw std::invalid_argument("simulate_uplink_pilots: schedule/trace mismatch");
    if (pilots.size() != sched.slots())
        throw std::invalid_argument("simulate_uplink_pilots: pilot length must equal T");
    const int n = cfg.n_bs_antennas;
    const MatrixXcd g_casc = trace.cascaded(l);
    const double amp = std::sqrt(cfg.pilot_power);
    VectorXcd y(sched.slots() * n);
    for (int t = 0; t < sched.slots(); ++t) {
        VectorXcd h = effective_channel(g_casc, sched.slot_phases(t), trace.d[l]);
        for (int i = 0; i < n; ++i)
            y(t * n + i) = amp * pilots(t) * h(i) + rng.cnormal(cfg.noise_variance);
    }
    return y;
}

/// Generic LS solve f = (Theta^H Theta)^{-1} Theta^H y with a rank check.
inline VectorXcd ls_estimate(const VectorXcd& y, const MatrixXcd& theta) {
    if (y.size() != theta.rows())
        throw std::invalid_argument("ls_estimate: dimension mismatch");
    Eigen::ColPivHouseholderQR<MatrixXcd> qr(theta);
    if (qr.rank() < theta.cols()) {
        const double rcond = qr.maxPivot() == 0.0
                                 ? 0.0
                                 : std::abs(qr.matrixR()(theta.cols() - 1, theta.cols() - 1)) /
                                       qr.maxPivot();
        throw std::runtime_error("ls_estimate: rank-deficient Theta, rcond~" +
                                 std::to_string(rcond));
    }
    return qr.solve(y);
}

/// Precomputed LS operator for repeated per-interval estimation with a fixed
/// schedule.  With the DFT schedule and unit pilots Theta^H Theta = T P_p I,
/// so the solve reduces to a scaled adjoint product.
class LsSolver {
public:
    explicit LsSolver(MatrixXcd theta) : theta_(std::move(theta)) {
        const MatrixXcd gram = theta_.adjoint() * theta_;
        const double diag = gram.diagonal().real().mean();
        orthogonal_ = (gram - diag * MatrixXcd::Identity(gram.rows(), gram.cols()))
                          .cwiseAbs()
                          .maxCoeff() < 1e-9 * diag;
        if (orthogonal_) {
            scale_ = 1.0 / diag;
        } else {
            Eigen::LDLT<MatrixXcd> ldlt(gram);
            if (ldlt.info() != Eigen::Success)
                throw std::runtime_error("LsSolver: Theta^H Theta not positive definite");
            ldlt_ = ldlt;
        }
    }

    VectorXcd solve(const VectorXcd& y) const {
        if (y.size() != theta_.rows())
            throw std::invalid_argument("LsSolver: dimension mismatch");
        const VectorXcd rhs = theta_.adjoint() * y;
        return orthogonal_ ? VectorXcd(scale_ * rhs) : VectorXcd(ldlt_.solve(rhs));
    }

private:
    MatrixXcd theta_;
    bool orthogonal_ = false;
    double scale_ = 0.0;
    Eigen::LDLT<MatrixXcd> ldlt_;
};

struct SplitEstimate {
    VectorXcd d;  // N
    MatrixXcd G;  // N x M
};

inline SplitEstimate split_estimate(const VectorXcd& f, int n_antennas, int m_groups) {
    if (f.size() != static_cast<Eigen::Index>(n_antennas) * (m_groups + 1))
        throw std::invalid_argument("split_estimate: wrong length");
    SplitEstimate out;
    out.d = f.head(n_antennas);
    out.G.resize(n_antennas, m_groups);
    for (int m = 0; m < m_groups; ++m)
        out.G.col(m) = f.segment((m + 1) * n_antennas, n_antennas);
    return out;
}

inline VectorXcd stack_estimate(const VectorXcd& d, const MatrixXcd& g_cascaded) {
    VectorXcd f(d.size() * (1 + g_cascaded.cols()));
    f.head(d.size()) = d;
    for (Eigen::Index m = 0; m < g_cascaded.cols(); ++m)
        f.segment((m + 1) * d.size(), d.size()) = g_cascaded.col(m);
    return f;
}

} // namespace risar

#endif // RISAR_PILOTS_HPP
