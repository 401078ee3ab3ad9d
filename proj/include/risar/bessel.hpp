#ifndef RISAR_BESSEL_HPP
#define RISAR_BESSEL_HPP

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace risar {

/// J0 via the periodic trapezoid rule on (1/2pi) Int_0^{2pi} cos(x sin t) dt.
/// Aliasing error is 2*sum_k J_{kn}(x), negligible once n >~ 3|x|; accurate to
/// better than 1e-12 for |x| <= 500.
inline double bessel_j0(double x) {
    if (!std::isfinite(x)) throw std::domain_error("bessel_j0: non-finite input");
    x = std::abs(x);
    const int n = std::max(128, static_cast<int>(3.0 * x) + 16);
    double acc = 0.0;
    for (int j = 0; j < n; ++j)
        acc += std::cos(x * std::sin(2.0 * std::numbers::pi * j / n));
    return acc / n;
}

} // namespace risar

#endif // RISAR_BESSEL_HPP
