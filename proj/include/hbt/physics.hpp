#pragma once

// Units: energy eV, length nm (source scale) and mm (laboratory scale),
// time fs, wavevector nm^-1.

#include <hbt/error.hpp>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <cmath>
#include <string>
#include <utility>

namespace hbt {

using Vec3 = Eigen::Vector3d;

namespace constants {
inline constexpr double hbar_c = 197.3269804;      // eV nm
inline constexpr double hc = 1239.841984;          // eV nm
inline constexpr double hbar = 0.6582119569;       // eV fs
inline constexpr double k_boltzmann = 8.617333e-5; // eV / K
}  // namespace constants

/// On-shell photon: energy and unit direction. The wavevector is derived.
class PhotonState {
public:
    PhotonState(double energy_ev, const Vec3& direction)
        : energy_(energy_ev), direction_(direction) {
        if (!(energy_ev > 0.0) || !std::isfinite(energy_ev))
            throw DomainError("physics", "photon energy must be positive, got " +
                                             std::to_string(energy_ev));
        if (std::abs(direction.norm() - 1.0) > 1e-12)
            throw DomainError("physics", "photon direction must be a unit vector");
    }

    /// Normalizes the direction first; for directions built by hand.
    static PhotonState along(double energy_ev, const Vec3& direction) {
        if (!(direction.norm() > 0.0))
            throw DomainError("physics", "photon direction must be non-zero");
        return PhotonState(energy_ev, direction.normalized());
    }

    double energy() const noexcept { return energy_; }
    const Vec3& direction() const noexcept { return direction_; }
    Vec3 wavevector() const { return (energy_ / constants::hbar_c) * direction_; }

private:
    double energy_;
    Vec3 direction_;
};

struct RelativeMomentum {
    double q;        // nm^-1
    double delta_e;  // eV
    double theta;    // rad
};

inline double energy_from_wavelength(double lambda_nm) {
    if (!(lambda_nm > 0.0))
        throw DomainError("physics", "wavelength must be positive, got " +
                                         std::to_string(lambda_nm));
    return constants::hc / lambda_nm;
}

inline double wavelength_from_energy(double energy_ev) {
    if (!(energy_ev > 0.0))
        throw DomainError("physics", "energy must be positive, got " +
                                         std::to_string(energy_ev));
    return constants::hc / energy_ev;
}

/// Angle between two unit vectors, accurate for both tiny and near-pi angles.
inline double angle_between(const Vec3& a, const Vec3& b) {
    return std::atan2(a.cross(b).norm(), a.dot(b));
}

inline RelativeMomentum relative_momentum(const PhotonState& k1, const PhotonState& k2) {
    const double theta = angle_between(k1.direction(), k2.direction());
    const double a = k1.energy() / constants::hbar_c;
    const double b = k2.energy() / constants::hbar_c;
    // (a-b)^2 + 4ab sin^2(theta/2) avoids cancellation at small angles.
    const double s = std::sin(0.5 * theta);
    const double q2 = (a - b) * (a - b) + 4.0 * a * b * s * s;
    return {std::sqrt(q2), std::abs(k1.energy() - k2.energy()), theta};
}

/// Opening angle of two apertures whose centers lie a chord `separation` apart
/// on a sphere of radius `distance`.
inline double separation_to_angle(double separation_mm, double distance_mm) {
    if (!(distance_mm > 0.0))
        throw DomainError("physics", "distance must be positive");
    if (separation_mm < 0.0)
        throw DomainError("physics", "separation must be non-negative");
    if (separation_mm > 2.0 * distance_mm)
        throw DomainError("physics", "separation " + std::to_string(separation_mm) +
                                         " mm exceeds twice the distance");
    return 2.0 * std::asin(separation_mm / (2.0 * distance_mm));
}

inline double angle_to_separation(double theta, double distance_mm) {
    return 2.0 * distance_mm * std::sin(0.5 * theta);
}

/// Deterministic right-handed orthonormal pair (u, v) perpendicular to unit n.
inline std::pair<Vec3, Vec3> transverse_basis(const Vec3& n) {
    const Vec3 helper = std::abs(n.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
    Vec3 u = (helper - helper.dot(n) * n).normalized();
    Vec3 v = n.cross(u);
    return {u, v};
}

/// Rotates unit vector n by angle theta toward its first transverse axis.
inline Vec3 tilt(const Vec3& n, double theta) {
    const auto [u, v] = transverse_basis(n);
    (void)v;
    return (std::cos(theta) * n + std::sin(theta) * u).normalized();
}

/// One phototube of the two-arm interferometer.
struct DetectorChannel {
    double distance = 200.0;            // mm
    Vec3 direction = Vec3::UnitZ();
    double aperture_radius = 0.5;       // mm
    double filter_center = 200.0;       // nm
    double filter_fwhm = 10.0;          // nm, top-hat passband width
    double quantum_efficiency = 0.075;
    double dark_rate = 0.0;             // counts / s

    bool operator==(const DetectorChannel&) const = default;

    double band_min_nm() const { return filter_center - 0.5 * filter_fwhm; }
    double band_max_nm() const { return filter_center + 0.5 * filter_fwhm; }
    double center_energy() const { return energy_from_wavelength(filter_center); }

    /// Throws DomainError naming the violated constraint.
    void validate() const {
        auto fail = [](const std::string& what) { throw DomainError("physics", what); };
        if (!(distance > 0.0)) fail("detector distance must be positive");
        if (std::abs(direction.norm() - 1.0) > 1e-12) fail("detector direction must be a unit vector");
        if (aperture_radius < 0.0) fail("aperture_radius must be non-negative");
        if (!(aperture_radius < distance / 10.0))
            fail("aperture_radius must be below distance/10 (small-aperture regime)");
        if (!(filter_center > 0.0)) fail("filter_center must be positive");
        if (filter_fwhm < 0.0) fail("filter_fwhm must be non-negative");
        if (!(filter_fwhm < 2.0 * filter_center)) fail("filter passband must stay above 0 nm");
        if (!(quantum_efficiency >= 0.0 && quantum_efficiency <= 1.0))
            fail("quantum_efficiency must lie in [0, 1]");
        if (dark_rate < 0.0) fail("dark_rate must be non-negative");
    }
};

/// Fraction of an isotropic flash entering a circular aperture.
inline double aperture_fraction(const DetectorChannel& ch) {
    // pi a^2 / (4 pi L^2) with the pi cancelled.
    return (ch.aperture_radius * ch.aperture_radius) / (4.0 * ch.distance * ch.distance);
}

}  // namespace hbt
