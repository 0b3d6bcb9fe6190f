#pragma once

// Space-time emission densities rho(r, t) and their normalized Fourier
// transforms rho~(dk, dE) = \int exp(i dk.r) rho(r) d^3r x (temporal factor).
// Every model here factorizes into a spatial profile times the Gaussian
// temporal profile exp(-t^2/tau^2), whose transform is exp(-(dE tau/hbar)^2/4).

#include <hbt/error.hpp>
#include <hbt/physics.hpp>
#include <hbt/quadrature.hpp>

#include <boost/math/special_functions/spherical_harmonic.hpp>

#include <algorithm>
#include <cmath>
#include <complex>
#include <concepts>
#include <numbers>
#include <string>
#include <variant>
#include <vector>

namespace hbt {

using Complex = std::complex<double>;

template <class S>
concept SourceModel = requires(const S& s, const Vec3& dk, double de, const Vec3& r, double t) {
    { s.transform(dk, de) } -> std::convertible_to<Complex>;
    { s.density(r, t) } -> std::convertible_to<double>;
    { s.lifetime() } -> std::convertible_to<double>;
};

/// Gaussian temporal factor shared by all sources; exponent (dE tau / hbar)^2 / 4.
inline double temporal_transform(double de, double tau_fs) {
    const double x = de * tau_fs / constants::hbar;
    return std::exp(-0.25 * x * x);
}

/// Stationary Gaussian fireball, rho ~ exp(-(r/R)^2 - (t/tau)^2).
class GaussianFireball {
public:
    GaussianFireball(double radius_nm, double lifetime_fs)
        : radius_(radius_nm), tau_(lifetime_fs) {
        if (!(radius_nm > 0.0)) throw DomainError("sources", "gaussian radius R must be positive");
        if (!(lifetime_fs > 0.0)) throw DomainError("sources", "gaussian lifetime tau must be positive");
    }

    double radius() const noexcept { return radius_; }
    double lifetime() const noexcept { return tau_; }

    /// Normalized to unit integral over space-time; peak 1/(pi^2 R^3 tau).
    double density(const Vec3& r, double t) const {
        const double norm = 1.0 / (std::numbers::pi * std::numbers::pi * radius_ * radius_ * radius_ * tau_);
        return norm * std::exp(-r.squaredNorm() / (radius_ * radius_) - (t * t) / (tau_ * tau_));
    }

    Complex transform(const Vec3& dk, double de) const {
        return {std::exp(-spatial_exponent(dk.norm()) / 2.0 - temporal_exponent(de) / 2.0), 0.0};
    }

    /// -ln|rho~|^2 split into its spatial part q^2 R^2 / 2 ...
    double spatial_exponent(double q) const { return 0.5 * q * q * radius_ * radius_; }
    /// ... and its temporal part (dE tau / hbar)^2 / 2.
    double temporal_exponent(double de) const {
        const double x = de * tau_ / constants::hbar;
        return 0.5 * x * x;
    }

    bool operator==(const GaussianFireball&) const = default;

private:
    double radius_;
    double tau_;
};

struct HarmonicTerm {
    int l = 0;
    int m = 0;
    double amplitude = 0.0;

    bool operator==(const HarmonicTerm&) const = default;
};

/// Real (tesseral) spherical harmonic: m > 0 -> sqrt2 Re Y_l^m, m < 0 -> sqrt2 Im Y_l^|m|.
inline double real_spherical_harmonic(int l, int m, double polar, double azimuth) {
    namespace bm = boost::math;
    if (m == 0) return bm::spherical_harmonic_r<double>(unsigned(l), 0, polar, azimuth);
    if (m > 0) return std::numbers::sqrt2 * bm::spherical_harmonic_r<double>(unsigned(l), m, polar, azimuth);
    return std::numbers::sqrt2 * bm::spherical_harmonic_i<double>(unsigned(l), -m, polar, azimuth);
}

/// Gaussian annulus exp(-(r - R0)^2 / w^2) with angular modulation
/// 1 + sum a_lm Y_lm(direction), times the Gaussian temporal profile.
class DeformedShell {
public:
    /// |dk| R0 above this needs more nodes than the precision contract allows.
    static constexpr double max_resolution = 200.0;
    static constexpr double tolerance = 1e-6;
    static constexpr std::size_t max_total_nodes = std::size_t{1} << 24;

    DeformedShell(double shell_radius_nm, double shell_thickness_nm, double lifetime_fs,
                  std::vector<HarmonicTerm> harmonics = {})
        : r0_(shell_radius_nm), width_(shell_thickness_nm), tau_(lifetime_fs),
          harmonics_(std::move(harmonics)) {
        if (!(r0_ > 0.0)) throw DomainError("sources", "shell_radius must be positive");
        if (!(width_ > 0.0)) throw DomainError("sources", "shell_thickness must be positive");
        if (!(tau_ > 0.0)) throw DomainError("sources", "shell lifetime tau must be positive");
        for (const auto& h : harmonics_) {
            if (h.l < 0 || std::abs(h.m) > h.l)
                throw DomainError("sources", "harmonic term needs l >= 0 and |m| <= l, got l=" +
                                                 std::to_string(h.l) + " m=" + std::to_string(h.m));
            lmax_ = std::max(lmax_, h.l);
        }
        check_non_negative();
        spatial_norm_ = radial_moment() * angular_integral();
    }

    double shell_radius() const noexcept { return r0_; }
    double shell_thickness() const noexcept { return width_; }
    double lifetime() const noexcept { return tau_; }
    const std::vector<HarmonicTerm>& harmonics() const noexcept { return harmonics_; }

    double modulation(const Vec3& unit) const {
        if (harmonics_.empty()) return 1.0;
        const double polar = std::acos(std::clamp(unit.z(), -1.0, 1.0));
        const double azimuth = std::atan2(unit.y(), unit.x());
        double value = 1.0;
        for (const auto& h : harmonics_)
            value += h.amplitude * real_spherical_harmonic(h.l, h.m, polar, azimuth);
        return value;
    }

    double radial_profile(double r) const {
        const double x = (r - r0_) / width_;
        return std::exp(-x * x);
    }

    double density(const Vec3& r, double t) const {
        const double rn = r.norm();
        const double ang = rn > 0.0 ? modulation(r / rn) : 1.0;
        const double temporal = std::exp(-(t * t) / (tau_ * tau_)) / (std::sqrt(std::numbers::pi) * tau_);
        return radial_profile(rn) * ang / spatial_norm_ * temporal;
    }

    Complex transform(const Vec3& dk, double de) const {
        const double temporal = temporal_transform(de, tau_);
        const double k = dk.norm();
        if (k == 0.0) return {temporal, 0.0};
        if (k * r0_ > max_resolution) {
            throw PrecisionError("sources",
                                 "|dk| R0 = " + std::to_string(k * r0_) + " exceeds the resolution bound " +
                                     std::to_string(max_resolution) + "; would need about " +
                                     std::to_string(initial_orders(k).mu) + " polar nodes");
        }
        // Canonical half-space: rho~(-dk) = conj(rho~(dk)) holds exactly.
        if (flipped(dk)) return std::conj(transform(-dk, de));

        Orders orders = initial_orders(k);
        Complex previous = spatial_transform(dk, orders);
        while (true) {
            orders = {orders.r * 2, orders.mu * 2, orders.phi * 2};
            if (orders.total() > max_total_nodes) {
                throw PrecisionError("sources", "shell transform did not converge to 1e-6 within " +
                                                    std::to_string(max_total_nodes) + " nodes; requires more than " +
                                                    std::to_string(orders.total()));
            }
            const Complex current = spatial_transform(dk, orders);
            const double change = std::abs(current - previous);
            if (change <= tolerance * std::abs(current) || change <= 1e-12) return current * temporal;
            previous = current;
        }
    }

    bool operator==(const DeformedShell& o) const {
        return r0_ == o.r0_ && width_ == o.width_ && tau_ == o.tau_ && harmonics_ == o.harmonics_;
    }

private:
    struct Orders {
        std::size_t r, mu, phi;
        std::size_t total() const { return r * mu * phi; }
    };

    double r_lo() const { return std::max(0.0, r0_ - 8.0 * width_); }
    double r_hi() const { return r0_ + 8.0 * width_; }

    Orders initial_orders(double k) const {
        using quadrature::next_pow2;
        const auto mu = next_pow2(std::max<std::size_t>(16, std::size_t(std::ceil(k * r_hi() / 2.0)) + 16));
        const auto r = next_pow2(std::max<std::size_t>(32, std::size_t(std::ceil(k * (r_hi() - r_lo()) / 2.0)) + 32));
        const auto phi = next_pow2(std::max<std::size_t>(8, std::size_t(2 * lmax_ + 4)));
        return {r, mu, phi};
    }

    static bool flipped(const Vec3& dk) {
        if (dk.z() != 0.0) return dk.z() < 0.0;
        if (dk.y() != 0.0) return dk.y() < 0.0;
        return dk.x() < 0.0;
    }

    // Unnormalized relative to rho~(0) on the same grid, so the ratio is
    // consistent at every order.
    Complex spatial_transform(const Vec3& dk, const Orders& orders) const {
        const double k = dk.norm();
        const Vec3 axis = dk / k;
        const auto [u, v] = transverse_basis(axis);
        const auto radial = quadrature::mapped(quadrature::cached_gauss_legendre(orders.r), r_lo(), r_hi());
        const auto& polar = quadrature::cached_gauss_legendre(orders.mu);
        const auto azimuthal =
            quadrature::mapped(quadrature::cached_gauss_legendre(orders.phi), 0.0, 2.0 * std::numbers::pi);

        std::vector<double> radial_weight(radial.size());
        double radial_zero = 0.0;
        for (std::size_t i = 0; i < radial.size(); ++i) {
            const double r = radial.nodes[i];
            radial_weight[i] = radial.weights[i] * r * r * radial_profile(r);
            radial_zero += radial_weight[i];
        }

        Complex sum = 0.0;
        double sum_zero = 0.0;
        for (std::size_t j = 0; j < polar.size(); ++j) {
            const double mu = polar.nodes[j];
            const double s = std::sqrt(std::max(0.0, 1.0 - mu * mu));
            double ang = 0.0;
            for (std::size_t p = 0; p < azimuthal.size(); ++p) {
                const double phi = azimuthal.nodes[p];
                const Vec3 dir = mu * axis + s * (std::cos(phi) * u + std::sin(phi) * v);
                ang += azimuthal.weights[p] * modulation(dir);
            }
            Complex rad = 0.0;
            for (std::size_t i = 0; i < radial.size(); ++i)
                rad += radial_weight[i] * std::polar(1.0, k * radial.nodes[i] * mu);
            sum += polar.weights[j] * ang * rad;
            sum_zero += polar.weights[j] * ang;
        }
        return sum / (sum_zero * radial_zero);
    }

    double radial_moment() const {
        const auto rule = quadrature::mapped(quadrature::cached_gauss_legendre(256), r_lo(), r_hi());
        double sum = 0.0;
        for (std::size_t i = 0; i < rule.size(); ++i) {
            const double r = rule.nodes[i];
            sum += rule.weights[i] * r * r * radial_profile(r);
        }
        return sum;
    }

    double angular_integral() const {
        // Harmonics with l >= 1 integrate to zero; Y_00 = 1/sqrt(4 pi).
        double value = 4.0 * std::numbers::pi;
        for (const auto& h : harmonics_)
            if (h.l == 0) value += h.amplitude * std::sqrt(4.0 * std::numbers::pi);
        return value;
    }

    void check_non_negative() const {
        if (harmonics_.empty()) return;
        constexpr int n_polar = 91, n_azimuth = 180;
        for (int i = 0; i < n_polar; ++i) {
            const double polar = std::numbers::pi * i / (n_polar - 1);
            for (int j = 0; j < n_azimuth; ++j) {
                const double azimuth = 2.0 * std::numbers::pi * j / n_azimuth;
                const Vec3 dir(std::sin(polar) * std::cos(azimuth), std::sin(polar) * std::sin(azimuth),
                               std::cos(polar));
                if (modulation(dir) < 0.0)
                    throw DomainError("sources", "harmonic amplitudes make the shell density negative");
            }
        }
    }

    double r0_;
    double width_;
    double tau_;
    std::vector<HarmonicTerm> harmonics_;
    int lmax_ = 0;
    double spatial_norm_ = 1.0;
};

/// Runtime-selected source, as read from a run configuration.
class AnySource {
public:
    using Variant = std::variant<GaussianFireball, DeformedShell>;

    AnySource(GaussianFireball g) : impl_(std::move(g)) {}
    AnySource(DeformedShell s) : impl_(std::move(s)) {}

    Complex transform(const Vec3& dk, double de) const {
        return std::visit([&](const auto& s) { return Complex(s.transform(dk, de)); }, impl_);
    }
    double density(const Vec3& r, double t) const {
        return std::visit([&](const auto& s) { return s.density(r, t); }, impl_);
    }
    double lifetime() const {
        return std::visit([](const auto& s) { return s.lifetime(); }, impl_);
    }
    const Variant& variant() const noexcept { return impl_; }

    bool operator==(const AnySource&) const = default;

private:
    Variant impl_;
};

static_assert(SourceModel<GaussianFireball>);
static_assert(SourceModel<DeformedShell>);
static_assert(SourceModel<AnySource>);

}  // namespace hbt
