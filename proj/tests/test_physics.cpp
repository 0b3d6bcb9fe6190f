#include <hbt/error.hpp>
#include <hbt/physics.hpp>
#include <hbt/quadrature.hpp>

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace hbt;

TEST(Physics, ConstantsAreConsistent) {
    EXPECT_NEAR(constants::hc / (2.0 * std::numbers::pi * constants::hbar_c), 1.0, 1e-10);
    EXPECT_NEAR(constants::hbar_c / constants::hbar, 299.792458, 1e-6);  // c in nm/fs
}

TEST(Physics, EnergyFromWavelength) {
    EXPECT_NEAR(energy_from_wavelength(200.0), oracle::hc / 200.0, 1e-14);
    EXPECT_NEAR(energy_from_wavelength(200.0), 6.19921, 5e-6);
    EXPECT_DOUBLE_EQ(energy_from_wavelength(1239.841984), 1.0);
    EXPECT_NEAR(energy_from_wavelength(620.0), 1.99974, 1e-5);  // reference value truncated to six digits
    EXPECT_NEAR(wavelength_from_energy(energy_from_wavelength(433.0)), 433.0, 1e-12);
    EXPECT_THROW(energy_from_wavelength(0.0), DomainError);
    EXPECT_THROW(energy_from_wavelength(-5.0), DomainError);
    EXPECT_THROW(wavelength_from_energy(0.0), DomainError);
}

TEST(Physics, PhotonStateValidation) {
    EXPECT_THROW(PhotonState(0.0, Vec3::UnitZ()), DomainError);
    EXPECT_THROW(PhotonState(-1.0, Vec3::UnitZ()), DomainError);
    EXPECT_THROW(PhotonState(1.0, Vec3(0, 0, 2)), DomainError);
    EXPECT_THROW(PhotonState::along(1.0, Vec3::Zero()), DomainError);
    const auto p = PhotonState::along(2.0, Vec3(0, 3, 4));
    EXPECT_NEAR(p.direction().norm(), 1.0, 1e-15);
    EXPECT_NEAR(p.wavevector().norm(), 2.0 / oracle::hbar_c, 1e-15);
    try {
        PhotonState(0.0, Vec3::UnitZ());
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), "physics.domain");
    }
}

TEST(Physics, RelativeMomentumExamples) {
    const double e = energy_from_wavelength(200.0);
    const PhotonState a(e, Vec3::UnitZ());
    const auto same = relative_momentum(a, a);
    EXPECT_EQ(same.q, 0.0);
    EXPECT_EQ(same.delta_e, 0.0);
    EXPECT_EQ(same.theta, 0.0);

    const PhotonState b(e, tilt(Vec3::UnitZ(), 0.09));
    const auto rm = relative_momentum(a, b);
    const double k = oracle::hc / 200.0 / oracle::hbar_c;
    EXPECT_NEAR(rm.q, 2.0 * k * std::sin(0.045), 1e-15);
    EXPECT_NEAR(rm.q, 2.8268e-3, 5e-7);  // reference value kept to four digits
    EXPECT_EQ(rm.delta_e, 0.0);
    EXPECT_NEAR(rm.theta, 0.09, 1e-14);

    const PhotonState back(e, -Vec3::UnitZ());
    const auto bb = relative_momentum(a, back);
    EXPECT_NEAR(bb.q, 2.0 * k, 1e-15);
    EXPECT_NEAR(bb.q, 6.2832e-2, 5e-7);
    EXPECT_NEAR(bb.theta, std::numbers::pi, 1e-15);
}

TEST(Physics, RelativeMomentumMatchesVectorDifference) {
    std::mt19937_64 gen(7);
    std::uniform_real_distribution<double> u(-1, 1), en(1.0, 8.0);
    for (int i = 0; i < 200; ++i) {
        const auto a = PhotonState::along(en(gen), Vec3(u(gen), u(gen), u(gen)));
        const auto b = PhotonState::along(en(gen), Vec3(u(gen), u(gen), u(gen)));
        const auto rm = relative_momentum(a, b);
        EXPECT_NEAR(rm.q, (a.wavevector() - b.wavevector()).norm(), 1e-14);
        EXPECT_NEAR(rm.delta_e, std::abs(a.energy() - b.energy()), 1e-14);
    }
}

TEST(Physics, RelativeMomentumIsSymmetric) {
    std::mt19937_64 gen(11);
    std::uniform_real_distribution<double> u(-1, 1), en(1.0, 8.0);
    for (int i = 0; i < 200; ++i) {
        const auto a = PhotonState::along(en(gen), Vec3(u(gen), u(gen), u(gen)));
        const auto b = PhotonState::along(en(gen), Vec3(u(gen), u(gen), u(gen)));
        const auto x = relative_momentum(a, b), y = relative_momentum(b, a);
        EXPECT_EQ(x.q, y.q);
        EXPECT_EQ(x.delta_e, y.delta_e);
        EXPECT_EQ(x.theta, y.theta);
    }
}

TEST(Physics, MomentumTransferMonotoneInAngle) {
    const double e = energy_from_wavelength(200.0);
    const PhotonState a(e, Vec3::UnitZ());
    double last = -1.0;
    for (int i = 0; i <= 1000; ++i) {
        const double th = std::numbers::pi * i / 1000.0;
        const double q = relative_momentum(a, PhotonState(e, tilt(Vec3::UnitZ(), th))).q;
        EXPECT_GE(q, last);
        last = q;
    }
}

TEST(Physics, SeparationToAngle) {
    EXPECT_EQ(separation_to_angle(0.0, 200.0), 0.0);
    EXPECT_NEAR(separation_to_angle(20.0, 200.0), 2.0 * std::asin(0.05), 1e-15);
    EXPECT_NEAR(separation_to_angle(20.0, 200.0), 0.100042, 5e-7);
    EXPECT_NEAR(separation_to_angle(18.0, 200.0), 0.090030, 5e-7);
    EXPECT_THROW(separation_to_angle(-1.0, 200.0), DomainError);
    EXPECT_THROW(separation_to_angle(1.0, 0.0), DomainError);
    EXPECT_THROW(separation_to_angle(401.0, 200.0), DomainError);
}

TEST(Physics, SeparationAngleRoundTrip) {
    for (int i = 0; i <= 500; ++i) {
        const double th = 0.5 * std::numbers::pi * i / 500.0;
        const double sep = 2.0 * 200.0 * std::sin(th / 2.0);
        EXPECT_NEAR(separation_to_angle(sep, 200.0), th, 1e-12);
        EXPECT_NEAR(angle_to_separation(th, 200.0), sep, 1e-12);
    }
}

TEST(Physics, ApertureFraction) {
    DetectorChannel ch;
    EXPECT_EQ(aperture_fraction(ch), 1.5625e-6);
    ch.aperture_radius = 0.0;
    EXPECT_EQ(aperture_fraction(ch), 0.0);
    ch.aperture_radius = 1.0;
    EXPECT_DOUBLE_EQ(aperture_fraction(ch), 6.25e-6);
}

TEST(Physics, ApertureFractionScaling) {
    DetectorChannel ch;
    const double base = aperture_fraction(ch);
    for (double s : {0.5, 2.0, 3.0, 7.5}) {
        DetectorChannel r = ch;
        r.aperture_radius *= s;
        EXPECT_NEAR(aperture_fraction(r), base * s * s, 1e-15 * s * s);
        DetectorChannel d = ch;
        d.distance *= s;
        EXPECT_NEAR(aperture_fraction(d), base / (s * s), 1e-15);
    }
}

TEST(Physics, DetectorChannelValidation) {
    DetectorChannel ok;
    EXPECT_NO_THROW(ok.validate());
    EXPECT_NEAR(ok.band_min_nm(), 195.0, 1e-12);
    EXPECT_NEAR(ok.band_max_nm(), 205.0, 1e-12);
    EXPECT_NEAR(ok.center_energy(), oracle::hc / 200.0, 1e-14);

    auto bad = [](auto mutate) {
        DetectorChannel c;
        mutate(c);
        EXPECT_THROW(c.validate(), DomainError);
    };
    bad([](DetectorChannel& c) { c.aperture_radius = 20.0; });  // not small compared with the distance
    bad([](DetectorChannel& c) { c.aperture_radius = -1.0; });
    bad([](DetectorChannel& c) { c.distance = 0.0; });
    bad([](DetectorChannel& c) { c.quantum_efficiency = 1.5; });
    bad([](DetectorChannel& c) { c.quantum_efficiency = -0.1; });
    bad([](DetectorChannel& c) { c.filter_fwhm = -1.0; });
    bad([](DetectorChannel& c) { c.filter_fwhm = 400.0; });
    bad([](DetectorChannel& c) { c.filter_center = 0.0; });
    bad([](DetectorChannel& c) { c.direction = Vec3(0, 0, 2); });
    bad([](DetectorChannel& c) { c.dark_rate = -1.0; });
}

TEST(Physics, TiltAndBasis) {
    for (const Vec3& n : {Vec3(Vec3::UnitZ()), Vec3(Vec3::UnitX()), Vec3(Vec3(1, 2, 3).normalized()), Vec3(-Vec3::UnitZ())}) {
        const auto [u, v] = transverse_basis(n);
        EXPECT_NEAR(u.norm(), 1.0, 1e-14);
        EXPECT_NEAR(v.norm(), 1.0, 1e-14);
        EXPECT_NEAR(u.dot(n), 0.0, 1e-14);
        EXPECT_NEAR(v.dot(n), 0.0, 1e-14);
        EXPECT_NEAR(u.dot(v), 0.0, 1e-14);
        for (double th : {0.0, 0.01, 0.5, 1.5}) EXPECT_NEAR(angle_between(n, tilt(n, th)), th, 1e-13);
    }
}

TEST(Quadrature, GaussLegendreIntegratesPolynomialsExactly) {
    for (std::size_t n : {1u, 2u, 5u, 16u, 64u}) {
        const auto rule = quadrature::gauss_legendre<double>(n);
        double wsum = 0.0;
        for (double w : rule.weights) wsum += w;
        EXPECT_NEAR(wsum, 2.0, 1e-13);
        for (std::size_t p = 0; p < 2 * n; ++p) {
            double s = 0.0;
            for (std::size_t i = 0; i < n; ++i) s += rule.weights[i] * std::pow(rule.nodes[i], double(p));
            const double exact = p % 2 ? 0.0 : 2.0 / double(p + 1);
            EXPECT_NEAR(s, exact, 1e-13) << "n=" << n << " p=" << p;
        }
    }
    EXPECT_EQ(quadrature::next_pow2(1), 1u);
    EXPECT_EQ(quadrature::next_pow2(17), 32u);
    EXPECT_EQ(quadrature::next_pow2(64), 64u);
}

TEST(Quadrature, MappedRuleIntegratesOverInterval) {
    const auto r = quadrature::mapped(quadrature::cached_gauss_legendre(20), 1.0, 3.0);
    double s = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) s += r.weights[i] * std::exp(r.nodes[i]);
    EXPECT_NEAR(s, std::exp(3.0) - std::exp(1.0), 1e-12);
}
