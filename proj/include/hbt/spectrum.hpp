#pragma once

#include <hbt/error.hpp>
#include <hbt/physics.hpp>

#include <boost/math/quadrature/gauss.hpp>

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

namespace hbt {

/// Photon-energy interval in eV.
struct FilterBand {
    double min_energy;
    double max_energy;

    /// Energies passed by a channel's top-hat wavelength filter.
    static FilterBand of(const DetectorChannel& ch) {
        return {constants::hc / ch.band_max_nm(), constants::hc / ch.band_min_nm()};
    }
};

/// Black-body photon-number spectrum n(E) ~ E^2 / (exp(E/kT) - 1), tabulated
/// as a 4096-point cumulative distribution on [0, 40 kT] for inverse-CDF
/// sampling. Between table points the CDF is linear.
class PlanckSpectrum {
public:
    static constexpr std::size_t table_size = 4096;
    static constexpr double support_in_kt = 40.0;

    explicit PlanckSpectrum(double temperature_k) : temperature_(temperature_k) {
        if (!(temperature_k > 0.0))
            throw DomainError("montecarlo", "spectrum temperature must be positive");
        kt_ = constants::k_boltzmann * temperature_k;
        step_ = support_in_kt * kt_ / double(table_size - 1);
        cdf_.assign(table_size, 0.0);
        // Each cell integrated by 16-interval Simpson; n(E) is smooth on [0, 40 kT].
        auto density = [this](double e) {
            if (e == 0.0) return 0.0;
            const double x = e / kt_;
            return e * e / std::expm1(x);
        };
        constexpr int sub = 16;
        for (std::size_t i = 1; i < table_size; ++i) {
            const double a = step_ * double(i - 1);
            const double h = step_ / sub;
            double s = density(a) + density(a + step_);
            for (int j = 1; j < sub; ++j) s += (j % 2 ? 4.0 : 2.0) * density(a + h * j);
            cdf_[i] = cdf_[i - 1] + s * h / 3.0;
        }
        const double total = cdf_.back();
        for (auto& c : cdf_) c /= total;
    }

    double temperature() const noexcept { return temperature_; }
    double kt() const noexcept { return kt_; }
    double max_energy() const noexcept { return step_ * double(table_size - 1); }

    double cdf(double energy) const {
        if (energy <= 0.0) return 0.0;
        const double pos = energy / step_;
        if (pos >= double(table_size - 1)) return 1.0;
        const auto i = std::size_t(pos);
        const double f = pos - double(i);
        return cdf_[i] + f * (cdf_[i + 1] - cdf_[i]);
    }

    /// Fraction of emitted photons whose energy falls inside the band, by
    /// 30-point Gauss-Legendre panels no wider than kT against the exact
    /// normalization 2 zeta(3) (kT)^3.
    double band_fraction(const FilterBand& band) const {
        const double lo = std::max(0.0, band.min_energy), hi = std::min(band.max_energy, max_energy());
        if (!(hi > lo)) return 0.0;
        using Rule = boost::math::quadrature::gauss<double, 30>;
        const auto density = [this](double e) { return e > 0.0 ? e * e / std::expm1(e / kt_) : 0.0; };
        const int panels = std::max(1, int(std::ceil((hi - lo) / kt_)));
        const double h = (hi - lo) / panels;
        double total = 0.0;
        for (int p = 0; p < panels; ++p) total += Rule::integrate(density, lo + h * p, lo + h * (p + 1));
        constexpr double zeta3 = 1.2020569031595942854;
        return total / (2.0 * zeta3 * kt_ * kt_ * kt_);
    }

    double inverse_cdf(double p) const {
        const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), p);
        if (it == cdf_.begin()) return 0.0;
        if (it == cdf_.end()) return max_energy();
        const auto i = std::size_t(it - cdf_.begin()) - 1;
        const double span = cdf_[i + 1] - cdf_[i];
        const double f = span > 0.0 ? (p - cdf_[i]) / span : 0.0;
        return step_ * (double(i) + f);
    }

private:
    double temperature_;
    double kt_;
    double step_;
    std::vector<double> cdf_;
};

/// Planck-distributed photon energy, optionally restricted to a band.
template <class Stream>
double sample_photon_energy(const PlanckSpectrum& spectrum, const std::optional<FilterBand>& band, Stream& rng) {
    double lo = 0.0, hi = 1.0;
    if (band) {
        lo = spectrum.cdf(band->min_energy);
        hi = spectrum.cdf(band->max_energy);
        if (!(band->max_energy > band->min_energy) || !(hi > lo))
            throw DomainError("montecarlo", "filter band [" + std::to_string(band->min_energy) + ", " +
                                                std::to_string(band->max_energy) +
                                                "] eV does not intersect the spectrum table support");
    }
    const double e = spectrum.inverse_cdf(lo + (hi - lo) * rng.uniform());
    if (band) return std::clamp(e, band->min_energy, band->max_energy);
    return e;
}

}  // namespace hbt
