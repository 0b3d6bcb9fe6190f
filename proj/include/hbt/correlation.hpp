#pragma once

#include <hbt/error.hpp>
#include <hbt/permanent.hpp>
#include <hbt/physics.hpp>
#include <hbt/quadrature.hpp>
#include <hbt/sources.hpp>

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <string>
#include <vector>

namespace hbt {

struct PairCorrelationResult {
    double value;                // 1 + polarization_factor (sum_term + diff_term)
    double polarization_factor;  // (1/4)[1 + (k1^.k2^)^2]
    double sum_term;             // |rho~(k1 + k2)|^2
    double diff_term;            // |rho~(k2 - k1)|^2

    double excess() const { return polarization_factor * (sum_term + diff_term); }
};

/// Symmetrized plane-wave pair correlation for an unpolarized chaotic source.
/// The arguments of rho~ are four-vector sums and differences: spatial part
/// k1 +/- k2, temporal part E1 +/- E2.
template <SourceModel S>
PairCorrelationResult pair_correlation(const S& src, const PhotonState& k1, const PhotonState& k2,
                                       bool include_sum_term = true) {
    const double cosine = k1.direction().dot(k2.direction());
    const double pol = 0.25 * (1.0 + cosine * cosine);
    const Vec3 w1 = k1.wavevector(), w2 = k2.wavevector();
    const double diff = std::norm(Complex(src.transform(w2 - w1, k2.energy() - k1.energy())));
    const double sum = include_sum_term ? std::norm(Complex(src.transform(w1 + w2, k1.energy() + k2.energy()))) : 0.0;
    return {1.0 + pol * (sum + diff), pol, sum, diff};
}

/// Closed-form pair correlation of the Gaussian fireball with the sum term dropped.
inline double gaussian_pair_correlation(double radius_nm, double tau_fs, double q, double delta_e, double theta) {
    if (!(radius_nm > 0.0) || !(tau_fs > 0.0))
        throw DomainError("correlation", "R and tau must be positive");
    if (q < 0.0 || delta_e < 0.0) throw DomainError("correlation", "q and delta_e must be non-negative");
    const double c = std::cos(theta);
    const double x = delta_e * tau_fs / constants::hbar;
    return 1.0 + 0.25 * (1.0 + c * c) * std::exp(-0.5 * q * q * radius_nm * radius_nm - 0.5 * x * x);
}

/// Copy of `second` moved onto the sphere of radius first.distance so that
/// its aperture center sits a chord `separation` away from first's.
inline DetectorChannel placed_at_separation(const DetectorChannel& first, const DetectorChannel& second,
                                            double separation_mm) {
    DetectorChannel out = second;
    out.distance = first.distance;
    out.direction = tilt(first.direction, separation_to_angle(separation_mm, first.distance));
    return out;
}

struct BandAverageOptions {
    bool include_sum_term = true;
    double tolerance = 1e-4;  // relative change under node doubling
    int max_level = 4;
};

namespace detail {

// Points and weights (summing to 1) covering a circular aperture uniformly.
inline std::vector<std::pair<Vec3, double>> aperture_points(const DetectorChannel& ch, int level) {
    std::vector<std::pair<Vec3, double>> pts;
    if (ch.aperture_radius == 0.0) {
        pts.emplace_back(ch.direction, 1.0);
        return pts;
    }
    const std::size_t n_rho = std::size_t{2} << level;
    const std::size_t n_phi = std::size_t{4} << level;
    const auto rho = quadrature::mapped(quadrature::cached_gauss_legendre(n_rho), 0.0, ch.aperture_radius);
    const auto [u, v] = transverse_basis(ch.direction);
    const double area = std::numbers::pi * ch.aperture_radius * ch.aperture_radius;
    for (std::size_t i = 0; i < n_rho; ++i) {
        for (std::size_t j = 0; j < n_phi; ++j) {
            const double phi = 2.0 * std::numbers::pi * (double(j) + 0.5) / double(n_phi);
            const Vec3 p = ch.distance * ch.direction + rho.nodes[i] * (std::cos(phi) * u + std::sin(phi) * v);
            const double w = rho.weights[i] * rho.nodes[i] * (2.0 * std::numbers::pi / double(n_phi)) / area;
            pts.emplace_back(p.normalized(), w);
        }
    }
    return pts;
}

template <class F>
double adaptive(F&& f, std::vector<double> breaks) {
    std::sort(breaks.begin(), breaks.end());
    breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
        const double a = breaks[i], b = breaks[i + 1];
        if (!(b > a)) continue;
        total += boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, 18, 1e-9);
    }
    return total;
}

// Mean of the correlation over two top-hat passbands, directions fixed.
// With both bands finite the integral runs over (u, v) = (lambda1, lambda2 -
// lambda1): the equal-energy ridge sits at v = 0 and the inner u integrand is
// smooth.
template <SourceModel S>
double band_mean(const S& src, const DetectorChannel& c1, const Vec3& d1, const DetectorChannel& c2,
                 const Vec3& d2, std::size_t n_u, bool sum_term) {
    auto corr = [&](double l1, double l2) {
        return pair_correlation(src, PhotonState(constants::hc / l1, d1), PhotonState(constants::hc / l2, d2),
                                sum_term)
            .value;
    };
    const double a1 = c1.band_min_nm(), b1 = c1.band_max_nm();
    const double a2 = c2.band_min_nm(), b2 = c2.band_max_nm();
    const double w1 = c1.filter_fwhm, w2 = c2.filter_fwhm;

    // Ridge width in wavelength difference from the temporal coherence.
    const double lam = 0.5 * (c1.filter_center + c2.filter_center);
    const double ridge = lam * lam * constants::hbar / (constants::hc * src.lifetime());
    auto ridge_breaks = [&](double centre, double lo, double hi) {
        std::vector<double> br{lo, hi};
        for (double s : {1.0, 4.0, 16.0, 64.0, 256.0})
            for (double sign : {-1.0, 1.0}) {
                const double x = centre + sign * s * ridge;
                if (x > lo && x < hi) br.push_back(x);
            }
        if (centre > lo && centre < hi) br.push_back(centre);
        return br;
    };

    if (w1 == 0.0 && w2 == 0.0) return corr(c1.filter_center, c2.filter_center);
    if (w1 == 0.0)
        return adaptive([&](double l2) { return corr(c1.filter_center, l2); }, ridge_breaks(c1.filter_center, a2, b2)) / w2;
    if (w2 == 0.0)
        return adaptive([&](double l1) { return corr(l1, c2.filter_center); }, ridge_breaks(c2.filter_center, a1, b1)) / w1;

    const auto& base = quadrature::cached_gauss_legendre(n_u);
    auto inner = [&](double v) {
        const double lo = std::max(a1, a2 - v), hi = std::min(b1, b2 - v);
        if (!(hi > lo)) return 0.0;
        const double half = 0.5 * (hi - lo), mid = 0.5 * (hi + lo);
        double s = 0.0;
        for (std::size_t i = 0; i < base.size(); ++i) {
            const double u = mid + half * base.nodes[i];
            s += base.weights[i] * corr(u, u + v);
        }
        return s * half;
    };
    auto breaks = ridge_breaks(0.0, a2 - b1, b2 - a1);
    for (double kink : {a2 - a1, b2 - b1})
        if (kink > a2 - b1 && kink < b2 - a1) breaks.push_back(kink);
    return adaptive(inner, breaks) / (w1 * w2);
}

}  // namespace detail

/// Pair correlation averaged over both filter passbands (top-hat in wavelength)
/// and both circular apertures, with the second channel placed `separation` mm
/// from the first.
template <SourceModel S>
double band_averaged_correlation(const S& src, const DetectorChannel& ch1, const DetectorChannel& ch2,
                                 double separation_mm, const BandAverageOptions& opt = {}) {
    ch1.validate();
    ch2.validate();
    const DetectorChannel second = placed_at_separation(ch1, ch2, separation_mm);
    auto level_value = [&](int level) {
        const auto p1 = detail::aperture_points(ch1, level);
        const auto p2 = detail::aperture_points(second, level);
        const std::size_t n_u = std::size_t{4} << level;
        double total = 0.0;
        for (const auto& [d1, w1] : p1)
            for (const auto& [d2, w2] : p2)
                total += w1 * w2 * detail::band_mean(src, ch1, d1, second, d2, n_u, opt.include_sum_term);
        return total;
    };
    double previous = level_value(0);
    for (int level = 1; level <= opt.max_level; ++level) {
        const double current = level_value(level);
        if (std::abs(current - previous) <= opt.tolerance * std::abs(current)) return current;
        previous = current;
    }
    throw PrecisionError("correlation", "band-averaged correlation did not converge to " +
                                            std::to_string(opt.tolerance) + " within level " +
                                            std::to_string(opt.max_level));
}

/// Hermitian, unit-diagonal, PSD matrix sigma_ij = rho~(k_i - k_j).
class CovarianceMatrix {
public:
    static constexpr double psd_tolerance = 1e-10;

    template <SourceModel S>
    CovarianceMatrix(const S& src, std::span<const PhotonState> ks) : entries_(ks.size(), ks.size()) {
        const auto n = ks.size();
        if (n < 2 || n > 8) throw DomainError("correlation", "covariance matrix needs 2 <= n <= 8 channels");
        for (std::size_t i = 0; i < n; ++i) {
            entries_(i, i) = 1.0;
            for (std::size_t j = i + 1; j < n; ++j) {
                const Complex s = src.transform(ks[i].wavevector() - ks[j].wavevector(), ks[i].energy() - ks[j].energy());
                entries_(i, j) = s;
                entries_(j, i) = std::conj(s);
            }
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(entries_, Eigen::EigenvaluesOnly);
        const double smallest = eig.eigenvalues().minCoeff();
        if (smallest < -psd_tolerance)
            throw NumericalError("correlation", "covariance matrix is not positive semidefinite: eigenvalue " +
                                                    std::to_string(smallest));
    }

    std::size_t size() const { return std::size_t(entries_.rows()); }
    const Eigen::MatrixXcd& entries() const noexcept { return entries_; }

private:
    Eigen::MatrixXcd entries_;
};

enum class NpointMode { scalar, unpolarized };

/// n-photon correlation <I_1 ... I_n> / prod <I_i> of a chaotic field.
/// Unpolarized mode splits the field into two independent, equally bright
/// polarization components sharing sigma (small-angle regime only).
template <SourceModel S>
double npoint_correlation(const S& src, std::span<const PhotonState> ks, NpointMode mode) {
    const auto n = ks.size();
    if (n < 2 || n > 6) throw DomainError("correlation", "npoint correlation needs 2 <= n <= 6 photons");
    if (mode == NpointMode::unpolarized) {
        constexpr double max_angle = 0.2;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j)
                if (angle_between(ks[i].direction(), ks[j].direction()) > max_angle)
                    throw DomainError("correlation", "unpolarized npoint correlation needs pairwise angles <= 0.2 rad");
    }
    const CovarianceMatrix sigma(src, ks);
    const auto& m = sigma.entries();
    if (mode == NpointMode::scalar) return permanent(m).real();

    auto principal = [&](unsigned mask) {
        std::vector<Eigen::Index> idx;
        for (std::size_t i = 0; i < n; ++i)
            if (mask & (1u << i)) idx.push_back(Eigen::Index(i));
        Eigen::MatrixXcd sub(idx.size(), idx.size());
        for (std::size_t a = 0; a < idx.size(); ++a)
            for (std::size_t b = 0; b < idx.size(); ++b) sub(a, b) = m(idx[a], idx[b]);
        return sub;
    };
    auto perm_or_one = [](const Eigen::MatrixXcd& sub) { return sub.rows() == 0 ? Complex(1.0) : permanent(sub); };
    const unsigned full = (1u << n) - 1u;
    Complex total = 0.0;
    for (unsigned mask = 0; mask <= full; ++mask)
        total += perm_or_one(principal(mask)) * perm_or_one(principal(full & ~mask));
    return total.real() / double(1u << n);
}

}  // namespace hbt
