#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <utility>
#include <vector>

namespace hbt::quadrature {

template <class Real>
struct Rule {
    std::vector<Real> nodes;
    std::vector<Real> weights;

    std::size_t size() const noexcept { return nodes.size(); }
};

/// n-point Gauss-Legendre rule on [-1, 1]. Newton iteration on P_n from the
/// Tricomi initial guess; nodes come out sorted ascending.
template <class Real>
Rule<Real> gauss_legendre(std::size_t n) {
    if (n == 0) throw std::invalid_argument("gauss_legendre: n must be positive");
    // Returns (P_n(x), P_{n-1}(x)) by the three-term recurrence.
    auto legendre = [n](Real x) {
        Real p0 = 1, p1 = x;
        for (std::size_t k = 2; k <= n; ++k) {
            const Real p2 = ((Real(2 * k) - 1) * x * p1 - Real(k - 1) * p0) / Real(k);
            p0 = p1;
            p1 = p2;
        }
        return std::pair{p1, p0};
    };
    Rule<Real> rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    const Real pi = std::numbers::pi_v<Real>;
    for (std::size_t i = 0; i < (n + 1) / 2; ++i) {
        Real x = std::cos(pi * (Real(i) + Real(0.75)) / (Real(n) + Real(0.5)));
        for (int iter = 0; iter < 100; ++iter) {
            const auto [pn, pm] = legendre(x);
            const Real dp = Real(n) * (x * pn - pm) / (x * x - 1);
            const Real dx = pn / dp;
            x -= dx;
            if (std::abs(dx) <= 4 * std::numeric_limits<Real>::epsilon()) break;
        }
        const auto [pn, pm] = legendre(x);
        const Real dp = Real(n) * (x * pn - pm) / (x * x - 1);
        const Real w = 2 / ((1 - x * x) * dp * dp);
        rule.nodes[i] = -x;
        rule.nodes[n - 1 - i] = x;
        rule.weights[i] = w;
        rule.weights[n - 1 - i] = w;
    }
    if (n % 2 == 1) rule.nodes[n / 2] = 0;
    return rule;
}

/// Process-wide cache of double-precision rules; thread-safe.
inline const Rule<double>& cached_gauss_legendre(std::size_t n) {
    static std::mutex mutex;
    static std::map<std::size_t, std::unique_ptr<Rule<double>>> cache;
    std::lock_guard lock(mutex);
    auto& slot = cache[n];
    if (!slot) slot = std::make_unique<Rule<double>>(gauss_legendre<double>(n));
    return *slot;
}

/// Affine map of a [-1, 1] rule onto [a, b].
template <class Real>
Rule<Real> mapped(const Rule<Real>& base, Real a, Real b) {
    Rule<Real> out;
    out.nodes.resize(base.size());
    out.weights.resize(base.size());
    const Real half = (b - a) / 2, mid = (a + b) / 2;
    for (std::size_t i = 0; i < base.size(); ++i) {
        out.nodes[i] = mid + half * base.nodes[i];
        out.weights[i] = half * base.weights[i];
    }
    return out;
}

inline std::size_t next_pow2(std::size_t n) {
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

}  // namespace hbt::quadrature
