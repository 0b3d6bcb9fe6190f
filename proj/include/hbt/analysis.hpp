#pragma once

#include <hbt/correlation.hpp>
#include <hbt/error.hpp>
#include <hbt/montecarlo.hpp>
#include <hbt/physics.hpp>
#include <hbt/sources.hpp>
#include <hbt/spectrum.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace hbt {

struct CorrelationEstimate {
    double c_hat = 0.0;
    double sigma = 0.0;   // jackknife standard error
    double pairs = 0.0;   // sum over flashes of n_a n_b
    std::size_t flashes = 0;
};

namespace detail {

// C = M sum(x y) / (sum x sum y) with leave-one-out jackknife errors.
template <class Get>
CorrelationEstimate product_estimator(std::size_t m, Get&& get) {
    if (m < 2) throw EstimateError("correlation estimate needs at least 2 flashes");
    double sa = 0.0, sb = 0.0, sab = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const auto [x, y] = get(i);
        sa += x;
        sb += y;
        sab += x * y;
    }
    if (!(sa > 0.0) || !(sb > 0.0))
        throw EstimateError("zero total signal in one channel; the correlation is undefined");
    const double md = double(m);
    CorrelationEstimate out;
    out.c_hat = md * sab / (sa * sb);
    out.pairs = sab;
    out.flashes = m;

    // Leave-one-out replicas; two passes for a stable variance.
    auto replica = [&](std::size_t i) {
        const auto [x, y] = get(i);
        const double da = sa - x, db = sb - y;
        if (!(da > 0.0) || !(db > 0.0))
            throw EstimateError("a single flash carries all the signal; jackknife undefined");
        return (md - 1.0) * (sab - x * y) / (da * db);
    };
    double mean = 0.0;
    for (std::size_t i = 0; i < m; ++i) mean += replica(i);
    mean /= md;
    double ss = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const double d = replica(i) - mean;
        ss += d * d;
    }
    out.sigma = std::sqrt((md - 1.0) / md * ss);
    return out;
}

inline void check_channels(const RunRecord& run, std::size_t a, std::size_t b) {
    if (a >= run.channel_count() || b >= run.channel_count())
        throw DomainError("analysis", "channel index out of range");
}

}  // namespace detail

/// Photon-counting estimator of C from per-flash counts.
inline CorrelationEstimate estimate_correlation(const RunRecord& run, std::size_t a, std::size_t b) {
    detail::check_channels(run, a, b);
    return detail::product_estimator(run.size(), [&](std::size_t i) {
        return std::pair{double(run.count(i, a)), double(run.count(i, b))};
    });
}

/// Intensity-spectrometer estimator: same form on the per-flash ADC values.
inline CorrelationEstimate adc_correlate(const RunRecord& run, std::size_t a, std::size_t b) {
    detail::check_channels(run, a, b);
    return detail::product_estimator(run.size(), [&](std::size_t i) {
        return std::pair{run.analog(i, a), run.analog(i, b)};
    });
}

enum class ScanAxis { separation_mm, delta_e_ev };

struct ScanBin {
    double axis = 0.0;
    double c_hat = 0.0;
    double sigma = 0.0;
    double pairs = 0.0;
    double analytic = 0.0;        // pair correlation at band-centre kinematics
    double band_averaged = 0.0;   // averaged over passbands and apertures (NaN if skipped)
    double mc_expected = 0.0;     // exact expectation of the simulated field (mode-grid mean)
};

struct CorrelationScan {
    ScanAxis axis = ScanAxis::separation_mm;
    std::vector<ScanBin> bins;
    double lambda0_nm = 200.0;          // first channel's band centre
    double distance_mm = 200.0;
    double fixed_separation_mm = 0.0;   // energy scans only

    void validate() const {
        for (std::size_t i = 0; i < bins.size(); ++i) {
            if (bins[i].pairs > 0.0 && !(bins[i].sigma > 0.0))
                throw DomainError("analysis", "populated scan bin with non-positive error");
            if (i > 0 && bins[i].axis < bins[i - 1].axis) throw DomainError("analysis", "scan bins not sorted");
        }
    }
};

struct ScanOptions {
    unsigned threads = 1;
    bool band_average = true;   // the smeared analytic curve can be costly at long lifetimes
    bool include_sum_term = true;
};

/// Expectation of either estimator under the simulated field: pair-correlation excess
/// (sum term off) averaged over the J x J grid of mode energies.
template <SourceModel S>
double mode_grid_correlation(const S& src, const DetectorChannel& a, const DetectorChannel& b, int modes) {
    double total = 0.0;
    const auto la = mode_wavelengths(a, modes), lb = mode_wavelengths(b, modes);
    for (double x : la)
        for (double y : lb)
            total += pair_correlation(src, PhotonState(constants::hc / x, a.direction),
                                      PhotonState(constants::hc / y, b.direction), false)
                         .excess();
    return 1.0 + total / double(la.size() * lb.size());
}

namespace detail {

template <SourceModel S>
ScanBin scan_point(const S& src, const DetectorChannel& a, const DetectorChannel& b, const FlashConfig& cfg,
                   std::uint32_t substream, const ScanOptions& opt, double axis, double separation) {
    const RunRecord run = simulate_run(src, {a, b}, cfg, RunOptions{opt.threads, substream});
    ScanBin bin;
    bin.axis = axis;
    try {
        const auto est = estimate_correlation(run, 0, 1);
        bin.c_hat = est.c_hat;
        bin.sigma = est.sigma;
        bin.pairs = est.pairs;
    } catch (const EstimateError&) {
        // No signal in a channel: the bin stays unpopulated and fits skip it.
        bin.c_hat = bin.sigma = std::numeric_limits<double>::quiet_NaN();
        bin.pairs = 0.0;
    }
    bin.analytic = pair_correlation(src, PhotonState(a.center_energy(), a.direction),
                                    PhotonState(b.center_energy(), b.direction), opt.include_sum_term)
                       .value;
    bin.band_averaged = opt.band_average
                            ? band_averaged_correlation(src, a, b, separation, {opt.include_sum_term})
                            : std::numeric_limits<double>::quiet_NaN();
    bin.mc_expected = mode_grid_correlation(src, a, b, cfg.modes_per_band);
    return bin;
}

}  // namespace detail

/// Correlation versus transverse detector separation; one independent run
/// (substream = point index + 1) per separation.
template <SourceModel S>
CorrelationScan angular_scan(const S& src, const DetectorChannel& base, const FlashConfig& cfg,
                             const std::vector<double>& separations, const ScanOptions& opt = {}) {
    base.validate();
    for (std::size_t i = 0; i < separations.size(); ++i) {
        if (separations[i] < 0.0) throw DomainError("analysis", "separations must be non-negative");
        if (i > 0 && separations[i] < separations[i - 1]) throw DomainError("analysis", "separations must be sorted");
    }
    CorrelationScan scan;
    scan.axis = ScanAxis::separation_mm;
    scan.lambda0_nm = base.filter_center;
    scan.distance_mm = base.distance;
    for (std::size_t p = 0; p < separations.size(); ++p) {
        const DetectorChannel second = placed_at_separation(base, base, separations[p]);
        scan.bins.push_back(detail::scan_point(src, base, second, cfg, std::uint32_t(p + 1), opt, separations[p],
                                               separations[p]));
    }
    scan.validate();
    return scan;
}

/// Largest spatial exponent -ln|rho~|^2 tolerated by an energy scan.
inline constexpr double energy_scan_spatial_limit = 0.05;

/// Correlation versus photon-energy difference: the second channel's filter
/// centre is stepped by each offset (nm) while geometry stays fixed.
template <SourceModel S>
CorrelationScan energy_scan(const S& src, const DetectorChannel& first, const DetectorChannel& second,
                            const FlashConfig& cfg, const std::vector<double>& wavelength_offsets_nm,
                            const ScanOptions& opt = {}) {
    first.validate();
    second.validate();
    const double e0 = first.center_energy();
    const PhotonState k1(e0, first.direction), k2(e0, second.direction);
    const double spatial = -std::log(std::norm(Complex(src.transform(k2.wavevector() - k1.wavevector(), 0.0))));
    if (!(spatial < energy_scan_spatial_limit))
        throw Error("analysis.config", "energy scan needs the detectors inside the spatial correlation region: "
                                       "spatial exponent " + std::to_string(spatial) + " >= " +
                                           std::to_string(energy_scan_spatial_limit));
    const double separation = angle_to_separation(angle_between(first.direction, second.direction), first.distance);

    CorrelationScan scan;
    scan.axis = ScanAxis::delta_e_ev;
    scan.lambda0_nm = first.filter_center;
    scan.distance_mm = first.distance;
    scan.fixed_separation_mm = separation;
    for (std::size_t p = 0; p < wavelength_offsets_nm.size(); ++p) {
        DetectorChannel shifted = second;
        shifted.filter_center = second.filter_center + wavelength_offsets_nm[p];
        shifted.validate();
        const double de = std::abs(e0 - shifted.center_energy());
        // band_averaged_correlation places the second aperture itself; reuse the first channel's frame.
        scan.bins.push_back(detail::scan_point(src, first, shifted, cfg, std::uint32_t(p + 1), opt, de, separation));
    }
    std::stable_sort(scan.bins.begin(), scan.bins.end(), [](const ScanBin& x, const ScanBin& y) { return x.axis < y.axis; });
    scan.validate();
    return scan;
}

/// Linear interpolation of the first point where (C - 1)/(C_0 - 1) falls to
/// 1/e, C_0 being the first bin. Returns nullopt if it never does.
inline std::optional<double> one_over_e_point(const std::vector<double>& axis, const std::vector<double>& c) {
    if (axis.size() < 2 || axis.size() != c.size()) return std::nullopt;
    const double peak = c.front() - 1.0;
    if (!(peak > 0.0)) return std::nullopt;
    const double target = std::exp(-1.0);
    for (std::size_t i = 1; i < axis.size(); ++i) {
        const double y0 = (c[i - 1] - 1.0) / peak, y1 = (c[i] - 1.0) / peak;
        if (y1 <= target && y0 > target) return axis[i - 1] + (axis[i] - axis[i - 1]) * (y0 - target) / (y0 - y1);
    }
    return std::nullopt;
}

inline std::optional<double> one_over_e_point(const CorrelationScan& scan, bool use_analytic = false) {
    std::vector<double> x, y;
    for (const auto& b : scan.bins) {
        x.push_back(b.axis);
        y.push_back(use_analytic ? b.analytic : b.c_hat);
    }
    return one_over_e_point(x, y);
}

/// Detector separation at which the Gaussian-source exponent q^2 R^2 / 2 reaches 1.
inline double gaussian_one_over_e_separation(double radius_nm, double lambda_nm, double distance_mm) {
    const double k = energy_from_wavelength(lambda_nm) / constants::hbar_c;
    const double s = std::sqrt(2.0) / (2.0 * k * radius_nm);
    if (s > 1.0) throw DomainError("analysis", "source too small for a 1/e point at this wavelength");
    return angle_to_separation(2.0 * std::asin(s), distance_mm);
}

/// Energy difference at which (dE tau / hbar)^2 / 2 reaches 1.
inline double gaussian_one_over_e_energy(double tau_fs) { return std::sqrt(2.0) * constants::hbar / tau_fs; }

struct RateEstimate {
    std::vector<double> singles_per_flash;
    double coincidences_per_flash = 0.0;
    double coincidences_per_second = 0.0;
};

/// Expected singles per channel and coincidences of the first two channels.
/// `singles_override` replaces the first-principles singles when given.
inline RateEstimate rate_estimate(const std::vector<DetectorChannel>& channels, const FlashConfig& cfg,
                                  double assumed_correlation,
                                  const std::optional<std::vector<double>>& singles_override = std::nullopt) {
    if (channels.size() < 2) throw DomainError("analysis", "rates need two detector channels");
    if (assumed_correlation < 0.0) throw DomainError("analysis", "assumed correlation must be non-negative");
    cfg.validate();
    RateEstimate out;
    if (singles_override) {
        if (singles_override->size() != channels.size())
            throw DomainError("analysis", "singles override needs one value per channel");
        for (double s : *singles_override)
            if (s < 0.0) throw DomainError("analysis", "singles override must be non-negative");
        out.singles_per_flash = *singles_override;
    } else {
        const PlanckSpectrum spectrum(cfg.spectrum_temperature);
        for (const auto& ch : channels) {
            ch.validate();
            out.singles_per_flash.push_back(expected_singles(spectrum, ch, cfg.photons_per_flash));
        }
    }
    out.coincidences_per_flash = out.singles_per_flash[0] * out.singles_per_flash[1] * assumed_correlation;
    out.coincidences_per_second = out.coincidences_per_flash * cfg.rep_rate;
    return out;
}

}  // namespace hbt
