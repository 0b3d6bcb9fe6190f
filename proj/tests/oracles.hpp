#pragma once

// Reference computations used only by the tests. None of them share code
// with the library beyond its public types.

#include <hbt/physics.hpp>

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss.hpp>

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <numeric>
#include <numbers>
#include <vector>

namespace oracle {

inline constexpr double hbar_c = 197.3269804;
inline constexpr double hc = 1239.841984;
inline constexpr double hbar = 0.6582119569;
inline constexpr double k_boltzmann = 8.617333e-5;

/// Permanent by explicit sum over all n! permutations.
inline std::complex<double> naive_permanent(const Eigen::MatrixXcd& a) {
    const int n = int(a.rows());
    std::vector<int> p(n);
    std::iota(p.begin(), p.end(), 0);
    std::complex<double> total = 0.0;
    do {
        std::complex<double> term = 1.0;
        for (int i = 0; i < n; ++i) term *= a(i, p[i]);
        total += term;
    } while (std::next_permutation(p.begin(), p.end()));
    return total;
}

inline long double factorial(int n) { return n <= 1 ? 1.0L : n * factorial(n - 1); }

/// Composite 30-point Gauss on [a, b] with `panels` panels, long double.
template <class F>
long double composite(F&& f, long double a, long double b, int panels) {
    using Rule = boost::math::quadrature::gauss<long double, 30>;
    const long double h = (b - a) / panels;
    long double total = 0.0L;
    for (int p = 0; p < panels; ++p) {
        const long double lo = a + h * p, hi = lo + h;
        total += Rule::integrate(f, lo, hi);
    }
    return total;
}

/// Fourier integral of the normalized Gaussian space-time density,
/// int rho(r, t) exp(i (dk.r - w t)) d^3r dt, with the density separable into
/// three spatial axes and time and each axis integrated over +-9 widths.
inline long double gaussian_fourier_integral(double radius, double tau, const hbt::Vec3& dk, double de) {
    auto axis = [](long double width, long double k) {
        const long double norm = 1.0L / (std::sqrt(std::numbers::pi_v<long double>) * width);
        auto re = [&](long double x) { return norm * std::exp(-(x * x) / (width * width)) * std::cos(k * x); };
        return composite(re, -9.0L * width, 9.0L * width, 256);
    };
    const long double w = (long double)de / (long double)hbar;
    return axis(radius, dk.x()) * axis(radius, dk.y()) * axis(radius, dk.z()) * axis(tau, w);
}

/// Integral of a radially symmetric space-time density over R^3 x R.
template <class Density>
double radial_spacetime_integral(Density&& rho, double r_max, double t_max) {
    auto inner = [&](long double r) {
        auto in_t = [&](long double t) { return (long double)rho(hbt::Vec3(double(r), 0, 0), double(t)); };
        return 4.0L * std::numbers::pi_v<long double> * r * r * composite(in_t, -t_max, t_max, 16);
    };
    return double(composite(inner, 0.0L, r_max, 32));
}

/// Dense midpoint grid in spherical coordinates for the Fourier transform of a
/// static density, normalized by the same grid's integral.
template <class Density>
std::complex<double> riemann_transform(Density&& rho, const hbt::Vec3& dk, double r_lo, double r_hi, int nr, int nth,
                                       int nph) {
    std::complex<double> sum = 0.0;
    double norm = 0.0;
    const double dr = (r_hi - r_lo) / nr, dth = std::numbers::pi / nth, dph = 2.0 * std::numbers::pi / nph;
    for (int i = 0; i < nr; ++i) {
        const double r = r_lo + (i + 0.5) * dr;
        for (int j = 0; j < nth; ++j) {
            const double th = (j + 0.5) * dth;
            for (int p = 0; p < nph; ++p) {
                const double ph = (p + 0.5) * dph;
                const hbt::Vec3 x(r * std::sin(th) * std::cos(ph), r * std::sin(th) * std::sin(ph), r * std::cos(th));
                const double w = rho(x) * r * r * std::sin(th);
                sum += w * std::polar(1.0, dk.dot(x));
                norm += w;
            }
        }
    }
    return sum / norm;
}

/// Planck photon-number spectrum E^2/(exp(E/kT)-1) integrated over [a, b] eV,
/// normalized to the full spectrum (whose integral is 2 zeta(3) (kT)^3).
inline double planck_fraction(double temperature, double a, double b) {
    const long double kt = (long double)k_boltzmann * temperature;
    auto n = [&](long double e) { return e * e / std::expm1(e / kt); };
    const long double zeta3 = 1.2020569031595942853997L;
    return double(composite(n, a, b, 64) / (2.0L * zeta3 * kt * kt * kt));
}

/// <n^2>/<n>^2 for Poisson counts whose mean is exponentially distributed with
/// mean mu, by direct summation of the mixed distribution.
inline double exponential_poisson_second_moment_ratio(double mu) {
    // P(n) = mu^n / (1 + mu)^(n+1), a geometric law.
    long double m1 = 0.0L, m2 = 0.0L;
    const long double r = mu / (1.0L + mu);
    long double p = 1.0L / (1.0L + mu);
    for (int n = 0; n < 20000; ++n) {
        m1 += n * p;
        m2 += (long double)n * n * p;
        p *= r;
    }
    return double(m2 / (m1 * m1));
}

/// Closed-form pair correlation of the Gaussian source, sum term dropped.
inline double gaussian_pair(double radius, double tau, double q, double de, double theta) {
    const long double c = std::cos((long double)theta);
    const long double x = (long double)de * tau / hbar;
    return double(1.0L + 0.25L * (1.0L + c * c) *
                             std::exp(-0.5L * (long double)q * q * radius * radius - 0.5L * x * x));
}

/// Pair correlation averaged over two top-hat wavelength bands [c - w/2, c + w/2]
/// with colinear detectors, by a plain midpoint rule in both wavelengths.
inline double band_average_colinear(double radius, double tau, double center, double fwhm, int n1, int n2) {
    long double total = 0.0L;
    for (int i = 0; i < n1; ++i)
        for (int j = 0; j < n2; ++j) {
            const long double l1 = center - fwhm / 2 + fwhm * (i + 0.5L) / n1;
            const long double l2 = center - fwhm / 2 + fwhm * (j + 0.5L) / n2;
            const long double e1 = hc / l1, e2 = hc / l2;
            const long double q = std::abs(e1 - e2) / hbar_c;
            total += gaussian_pair(radius, tau, double(q), double(std::abs(e1 - e2)), 0.0);
        }
    return double(total / ((long double)n1 * n2));
}

}  // namespace oracle
