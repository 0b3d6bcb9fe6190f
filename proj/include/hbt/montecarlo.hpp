#pragma once

// Chaotic-light flash generator. Each channel sees J energy modes spread over
// its passband and two transverse polarizations. All (channel, mode,
// polarization) amplitudes are drawn jointly as one circular complex Gaussian
// vector with covariance
//   Sigma = sqrt(mu_a mu_b) rho~(k_a - k_b) (e_a . e_b),
// where e are the transverse polarization vectors. Intensities are the
// summed |amplitude|^2 per channel and counts are Poisson given intensity.

#include <hbt/error.hpp>
#include <hbt/physics.hpp>
#include <hbt/random.hpp>
#include <hbt/sources.hpp>
#include <hbt/spectrum.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <thread>
#include <vector>

namespace hbt {

struct FlashConfig {
    double photons_per_flash = 5e5;
    double spectrum_temperature = 25000.0;  // K
    double rep_rate = 27000.0;              // Hz
    int modes_per_band = 16;
    std::uint64_t seed = 1;
    std::uint64_t flash_count = 100000;
    double trigger_efficiency = 1.0;        // probability a flash is read out
    bool uncorrelated_field = false;        // null hypothesis: diagonal covariance

    bool operator==(const FlashConfig&) const = default;

    void validate() const {
        if (!(photons_per_flash > 0.0)) throw DomainError("montecarlo", "photons_per_flash must be positive");
        if (!(spectrum_temperature > 0.0)) throw DomainError("montecarlo", "spectrum_temperature must be positive");
        if (!(rep_rate > 0.0)) throw DomainError("montecarlo", "rep_rate must be positive");
        if (modes_per_band < 1) throw DomainError("montecarlo", "modes_per_band must be at least 1");
        if (!(trigger_efficiency > 0.0 && trigger_efficiency <= 1.0))
            throw DomainError("montecarlo", "trigger_efficiency must lie in (0, 1]");
    }
};

struct FlashRecord {
    std::uint64_t flash_index = 0;
    std::vector<std::uint32_t> counts;
    std::vector<double> analog;

    bool operator==(const FlashRecord&) const = default;
};

/// Mean photons per flash reaching channel `ch` after band, aperture and QE.
inline double expected_singles(const PlanckSpectrum& spectrum, const DetectorChannel& ch, double photons_per_flash) {
    return photons_per_flash * spectrum.band_fraction(FilterBand::of(ch)) * aperture_fraction(ch) *
           ch.quantum_efficiency;
}

/// Wavelengths (nm) of the J equally weighted modes covering a passband.
inline std::vector<double> mode_wavelengths(const DetectorChannel& ch, int modes) {
    std::vector<double> out(static_cast<std::size_t>(modes));
    for (int j = 0; j < modes; ++j)
        out[std::size_t(j)] = ch.band_min_nm() + (j + 0.5) * ch.filter_fwhm / modes;
    return out;
}

/// Precomputed field factorization for one detector layout; reused for every flash.
class FlashSimulator {
public:
    template <SourceModel S>
    FlashSimulator(const S& src, std::vector<DetectorChannel> channels, const FlashConfig& cfg)
        : channels_(std::move(channels)), cfg_(cfg) {
        if (channels_.empty()) throw DomainError("montecarlo", "at least one detector channel is required");
        for (const auto& ch : channels_) ch.validate();
        cfg_.validate();
        const PlanckSpectrum spectrum(cfg_.spectrum_temperature);
        const int modes = cfg_.modes_per_band;
        const std::size_t nch = channels_.size();

        struct Amp { std::size_t channel; PhotonState k; Vec3 pol; double mu; };
        std::vector<Amp> amps;
        for (std::size_t i = 0; i < nch; ++i) {
            const auto& ch = channels_[i];
            const double total = expected_singles(spectrum, ch, cfg_.photons_per_flash);
            mean_total_.push_back(total);
            noise_.push_back(ch.dark_rate / cfg_.rep_rate);
            const double mu = total / (2.0 * modes);
            const auto [u, v] = transverse_basis(ch.direction);
            for (double lambda : mode_wavelengths(ch, modes)) {
                const PhotonState k(constants::hc / lambda, ch.direction);
                amps.push_back({i, k, u, mu});
                amps.push_back({i, k, v, mu});
            }
        }

        const auto dim = Eigen::Index(amps.size());
        Eigen::MatrixXcd sigma = Eigen::MatrixXcd::Zero(dim, dim);
        for (Eigen::Index a = 0; a < dim; ++a) {
            sigma(a, a) = amps[std::size_t(a)].mu;
            if (cfg_.uncorrelated_field) continue;
            for (Eigen::Index b = a + 1; b < dim; ++b) {
                const auto& A = amps[std::size_t(a)];
                const auto& B = amps[std::size_t(b)];
                const double pol = A.pol.dot(B.pol);
                if (pol == 0.0 || A.mu == 0.0 || B.mu == 0.0) continue;
                const Complex rho = src.transform(A.k.wavevector() - B.k.wavevector(), A.k.energy() - B.k.energy());
                sigma(a, b) = std::sqrt(A.mu * B.mu) * pol * rho;
                sigma(b, a) = std::conj(sigma(a, b));
            }
        }
        channel_of_.reserve(amps.size());
        for (const auto& a : amps) channel_of_.push_back(a.channel);
        factorize(sigma);
    }

    const std::vector<DetectorChannel>& channels() const noexcept { return channels_; }
    const FlashConfig& config() const noexcept { return cfg_; }
    /// Expected analog intensity per channel.
    const std::vector<double>& mean_intensity() const noexcept { return mean_total_; }
    std::size_t field_dimension() const noexcept { return channel_of_.size(); }

    /// Deterministic in (seed, flash_index, substream).
    FlashRecord simulate(std::uint64_t flash_index, std::uint32_t substream = 0) const {
        FlashRecord rec;
        rec.flash_index = flash_index;
        rec.analog.assign(channels_.size(), 0.0);
        rec.counts.assign(channels_.size(), 0);
        simulate_into(flash_index, substream, rec.counts.data(), rec.analog.data());
        return rec;
    }

    /// Writes one flash into caller storage of channels().size() entries each.
    void simulate_into(std::uint64_t flash_index, std::uint32_t substream, std::uint32_t* counts,
                       double* analog) const {
        FlashStream rng(cfg_.seed, flash_index, 2u * substream);
        Eigen::VectorXcd z(factor_.cols());
        for (Eigen::Index i = 0; i < z.size(); ++i) {
            // Box-Muller: |z|^2 ~ Exp(1), uniform phase.
            const double r = std::sqrt(-std::log(rng.uniform()));
            const double phase = 2.0 * std::numbers::pi * rng.uniform();
            z(i) = std::polar(r, phase);
        }
        const Eigen::VectorXcd amp = factor_ * z;
        const std::size_t nch = channels_.size();
        std::fill(analog, analog + nch, 0.0);
        for (Eigen::Index a = 0; a < amp.size(); ++a) analog[channel_of_[std::size_t(a)]] += std::norm(amp(a));
        for (std::size_t i = 0; i < nch; ++i) {
            const double mean = analog[i] + noise_[i];
            counts[i] = mean > 0.0 ? std::poisson_distribution<std::uint32_t>(mean)(rng) : 0u;
        }
    }

    /// Trigger decision from its own substream, independent of the field draw.
    bool triggered(std::uint64_t flash_index, std::uint32_t substream = 0) const {
        if (cfg_.trigger_efficiency >= 1.0) return true;
        FlashStream rng(cfg_.seed, flash_index, 2u * substream + 1u);
        return rng.uniform() < cfg_.trigger_efficiency;
    }

private:
    void factorize(const Eigen::MatrixXcd& sigma) {
        if (cfg_.uncorrelated_field) {
            factor_ = sigma.diagonal().real().cwiseSqrt().asDiagonal().toDenseMatrix().cast<Complex>();
            return;
        }
        // Hermitian sigma = A + iB embeds as the real symmetric S = [[A, -B], [B, A]].
        // With S = G G^T and G split into row blocks G1, G2, the complex factor
        // F = (G1 + i G2) / sqrt 2 satisfies F F^* = sigma. The real solver stays
        // reliable on exactly rank-deficient covariances (coincident channels).
        const Eigen::Index n = sigma.rows();
        Eigen::MatrixXd embed(2 * n, 2 * n);
        embed << sigma.real(), -sigma.imag(), sigma.imag(), sigma.real();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(embed);
        if (eig.info() != Eigen::Success) throw NumericalError("montecarlo", "field covariance eigensolver failed");
        const Eigen::VectorXd& lambda = eig.eigenvalues();
        const double scale = std::max(1e-300, sigma.diagonal().real().maxCoeff());
        const double smallest = lambda.minCoeff();
        if (smallest < -1e-10 * scale)
            throw NumericalError("montecarlo", "field covariance not positive semidefinite: eigenvalue " +
                                                   std::to_string(smallest) + " (scale " + std::to_string(scale) + ")");
        // Drop numerically null directions; they carry no field.
        std::vector<Eigen::Index> keep;
        for (Eigen::Index i = 0; i < lambda.size(); ++i)
            if (lambda(i) > 1e-14 * scale) keep.push_back(i);
        factor_.resize(n, Eigen::Index(keep.size()));
        for (std::size_t c = 0; c < keep.size(); ++c) {
            const Eigen::VectorXd g = eig.eigenvectors().col(keep[c]) * std::sqrt(0.5 * lambda(keep[c]));
            factor_.col(Eigen::Index(c)) = g.head(n).cast<Complex>() + Complex(0.0, 1.0) * g.tail(n).cast<Complex>();
        }
    }

    std::vector<DetectorChannel> channels_;
    FlashConfig cfg_;
    std::vector<double> mean_total_;
    std::vector<double> noise_;
    std::vector<std::size_t> channel_of_;
    Eigen::MatrixXcd factor_;
};

template <SourceModel S>
FlashRecord simulate_flash(const S& src, const std::vector<DetectorChannel>& channels, const FlashConfig& cfg,
                           std::uint64_t flash_index) {
    return FlashSimulator(src, channels, cfg).simulate(flash_index);
}

/// Column store of a run: triggered flashes in flash_index order.
class RunRecord {
public:
    RunRecord() = default;
    RunRecord(FlashConfig cfg, std::vector<DetectorChannel> channels)
        : config_(cfg), channels_(std::move(channels)), count_totals_(channels_.size(), 0),
          analog_totals_(channels_.size(), 0.0) {}

    const FlashConfig& config() const noexcept { return config_; }
    const std::vector<DetectorChannel>& channels() const noexcept { return channels_; }
    std::size_t channel_count() const noexcept { return channels_.size(); }
    std::size_t size() const noexcept { return flash_index_.size(); }
    bool empty() const noexcept { return flash_index_.empty(); }

    void push_back(const FlashRecord& rec) {
        if (rec.counts.size() != channel_count() || rec.analog.size() != channel_count())
            throw DomainError("montecarlo", "flash record width does not match channel count");
        append(rec.flash_index, rec.counts.data(), rec.analog.data());
    }

    void append(std::uint64_t index, const std::uint32_t* counts, const double* analog) {
        flash_index_.push_back(index);
        counts_.insert(counts_.end(), counts, counts + channel_count());
        analog_.insert(analog_.end(), analog, analog + channel_count());
        for (std::size_t c = 0; c < channel_count(); ++c) {
            count_totals_[c] += counts[c];
            analog_totals_[c] += analog[c];
        }
    }

    void reserve(std::size_t flashes) {
        flash_index_.reserve(flashes);
        counts_.reserve(flashes * channel_count());
        analog_.reserve(flashes * channel_count());
    }

    std::uint32_t count(std::size_t flash, std::size_t channel) const { return counts_[flash * channel_count() + channel]; }
    double analog(std::size_t flash, std::size_t channel) const { return analog_[flash * channel_count() + channel]; }
    std::uint64_t flash_index(std::size_t flash) const { return flash_index_[flash]; }

    FlashRecord flash(std::size_t i) const {
        FlashRecord rec;
        rec.flash_index = flash_index_[i];
        const auto n = channel_count();
        rec.counts.assign(counts_.begin() + std::ptrdiff_t(i * n), counts_.begin() + std::ptrdiff_t((i + 1) * n));
        rec.analog.assign(analog_.begin() + std::ptrdiff_t(i * n), analog_.begin() + std::ptrdiff_t((i + 1) * n));
        return rec;
    }

    const std::vector<std::uint64_t>& count_totals() const noexcept { return count_totals_; }
    const std::vector<double>& analog_totals() const noexcept { return analog_totals_; }

    /// Recomputes the per-channel totals from the stored flashes and checks them.
    void finalize() const {
        std::vector<std::uint64_t> counts(channel_count(), 0);
        std::vector<double> analog(channel_count(), 0.0);
        for (std::size_t i = 0; i < size(); ++i)
            for (std::size_t c = 0; c < channel_count(); ++c) {
                counts[c] += count(i, c);
                analog[c] += this->analog(i, c);
            }
        if (counts != count_totals_ || analog != analog_totals_)
            throw NumericalError("montecarlo", "run totals disagree with the stored flashes");
    }

    bool operator==(const RunRecord&) const = default;

private:
    FlashConfig config_;
    std::vector<DetectorChannel> channels_;
    std::vector<std::uint64_t> flash_index_;
    std::vector<std::uint32_t> counts_;
    std::vector<double> analog_;
    std::vector<std::uint64_t> count_totals_;
    std::vector<double> analog_totals_;
};

struct RunOptions {
    unsigned threads = 1;
    std::uint32_t substream = 0;  // distinguishes runs sharing a seed, e.g. scan points
};

/// Generates flash_count flashes. Any thread count yields the same record.
inline RunRecord simulate_run(const FlashSimulator& sim, const RunOptions& opt = {}) {
    const auto total = std::size_t(sim.config().flash_count);
    const auto nch = sim.channels().size();
    std::vector<std::uint32_t> counts(total * nch);
    std::vector<double> analog(total * nch);
    std::vector<char> kept(total, 0);
    auto work = [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            if (!sim.triggered(i, opt.substream)) continue;
            sim.simulate_into(i, opt.substream, counts.data() + i * nch, analog.data() + i * nch);
            kept[i] = 1;
        }
    };
    const unsigned threads = unsigned(std::clamp<std::size_t>(opt.threads, 1, std::max<std::size_t>(total, 1)));
    if (threads == 1) {
        work(0, total);
    } else {
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < threads; ++t) pool.emplace_back(work, total * t / threads, total * (t + 1) / threads);
        for (auto& th : pool) th.join();
    }
    RunRecord run(sim.config(), sim.channels());
    run.reserve(total);
    for (std::size_t i = 0; i < total; ++i)
        if (kept[i]) run.append(i, counts.data() + i * nch, analog.data() + i * nch);
    run.finalize();
    return run;
}

template <SourceModel S>
RunRecord simulate_run(const S& src, const std::vector<DetectorChannel>& channels, const FlashConfig& cfg,
                       const RunOptions& opt = {}) {
    return simulate_run(FlashSimulator(src, channels, cfg), opt);
}

}  // namespace hbt
