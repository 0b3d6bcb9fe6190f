#pragma once

// Weighted least-squares fit of the Gaussian-source pair correlation
//   C = 1 + (1/4)(1 + cos^2 theta) exp(-q^2 R^2 / 2 - (dE tau / hbar)^2 / 2)
// to angular and energy-difference scans. Parameters are fitted in log space
// so R and tau stay positive; Levenberg-damped Gauss-Newton with a central
// difference Jacobian.

#include <hbt/analysis.hpp>
#include <hbt/correlation.hpp>
#include <hbt/error.hpp>
#include <hbt/physics.hpp>

#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace hbt {

struct SourceFit {
    double R_hat = 0.0;    // nm
    double tau_hat = 0.0;  // fs
    std::array<std::array<double, 2>, 2> covariance{};  // (R, tau); tau row is zero when tau is fixed
    double chi_square = 0.0;
    int dof = 0;
    bool tau_fitted = false;
    int iterations = 0;
};

struct FitOptions {
    double tau_fixed_fs = 1000.0;  // used when no energy scan is given, and as the fallback start
    int max_iterations = 200;
    double step_tolerance = 1e-8;
};

namespace detail {

struct FitPoint {
    double theta;
    double e1;
    double e2;
    double c;
    double sigma;
};

inline double model_value(const FitPoint& p, double radius, double tau) {
    const double a = p.e1 / constants::hbar_c, b = p.e2 / constants::hbar_c;
    const double s = std::sin(0.5 * p.theta);
    const double q = std::sqrt((a - b) * (a - b) + 4.0 * a * b * s * s);
    return gaussian_pair_correlation(radius, tau, q, std::abs(p.e1 - p.e2), p.theta);
}

inline std::vector<FitPoint> fit_points(const CorrelationScan& scan, double lambda0_nm, double distance_mm) {
    std::vector<FitPoint> pts;
    const double e0 = energy_from_wavelength(lambda0_nm);
    for (const auto& b : scan.bins) {
        if (!(b.pairs > 0.0) || !(b.sigma > 0.0) || !std::isfinite(b.sigma)) continue;  // unpopulated bins are excluded
        if (scan.axis == ScanAxis::separation_mm) {
            pts.push_back({separation_to_angle(b.axis, distance_mm), e0, e0, b.c_hat, b.sigma});
        } else {
            // Second band stepped to longer wavelength: E2 = E1 - dE.
            if (!(e0 - b.axis > 0.0)) throw DomainError("analysis", "energy difference exceeds the photon energy");
            pts.push_back({separation_to_angle(scan.fixed_separation_mm, distance_mm), e0, e0 - b.axis, b.c_hat, b.sigma});
        }
    }
    return pts;
}

struct Trial {
    std::vector<double> params;  // log R [, log tau]
    double chi2 = std::numeric_limits<double>::infinity();
    bool converged = false;
    int iterations = 0;
    std::vector<double> damping_trace;
    std::vector<std::vector<double>> normal;  // J^T J at the optimum
};

}  // namespace detail

class SourceFitter {
public:
    SourceFitter(const CorrelationScan& angle, const CorrelationScan* energy, double lambda0_nm, double distance_mm,
                 FitOptions opt)
        : opt_(opt), fit_tau_(energy != nullptr) {
        if (angle.axis != ScanAxis::separation_mm) throw DomainError("analysis", "first scan must be an angular scan");
        points_ = detail::fit_points(angle, lambda0_nm, distance_mm);
        if (energy) {
            if (energy->axis != ScanAxis::delta_e_ev) throw DomainError("analysis", "second scan must be an energy scan");
            auto more = detail::fit_points(*energy, lambda0_nm, distance_mm);
            points_.insert(points_.end(), more.begin(), more.end());
        }
        if (points_.size() < 4)
            throw FitError("fit", "need at least 4 populated bins with finite errors, got " + std::to_string(points_.size()));
        radius_guess_ = width_radius(angle, lambda0_nm, distance_mm);
        tau_guess_ = energy ? width_tau(*energy, radius_guess_) : opt.tau_fixed_fs;
    }

    double radius_guess() const { return radius_guess_; }
    double tau_guess() const { return tau_guess_; }

    SourceFit fit() const {
        detail::Trial best;
        detail::Trial best_any;
        for (double factor : {0.1, 0.5, 2.0}) {
            std::vector<double> start{std::log(factor * radius_guess_)};
            if (fit_tau_) start.push_back(std::log(tau_guess_));
            detail::Trial trial;
            try {
                trial = minimize(start);
            } catch (const FitError&) {
                continue;  // this start reached a flat region; the others decide
            }
            if (trial.chi2 < best_any.chi2) best_any = trial;
            if (trial.converged && trial.chi2 < best.chi2) best = trial;
        }
        if (!best.converged) {
            if (best_any.params.empty()) throw FitError("rank", "normal matrix is singular at every start");
            std::ostringstream msg;
            msg << "fit did not converge in " << opt_.max_iterations << " iterations; best R = "
                << std::exp(best_any.params[0]) << " nm, chi2 = " << best_any.chi2 << ", damping trace:";
            for (double l : best_any.damping_trace) msg << ' ' << l;
            throw FitError("fit", msg.str());
        }
        return summarize(best);
    }

private:
    double tau_of(const std::vector<double>& p) const { return fit_tau_ ? std::exp(p[1]) : opt_.tau_fixed_fs; }

    std::vector<double> residuals(const std::vector<double>& p) const {
        std::vector<double> r(points_.size());
        const double radius = std::exp(p[0]), tau = tau_of(p);
        for (std::size_t i = 0; i < points_.size(); ++i)
            r[i] = (points_[i].c - detail::model_value(points_[i], radius, tau)) / points_[i].sigma;
        return r;
    }

    static double chi2_of(const std::vector<double>& r) {
        double s = 0.0;
        for (double x : r) s += x * x;
        return s;
    }

    // Jacobian of the model (not the residual), scaled by 1/sigma.
    std::vector<std::vector<double>> jacobian(const std::vector<double>& p) const {
        const std::size_t np = p.size();
        std::vector<std::vector<double>> jac(points_.size(), std::vector<double>(np));
        constexpr double h = 1e-6;
        for (std::size_t k = 0; k < np; ++k) {
            auto up = p, down = p;
            up[k] += h;
            down[k] -= h;
            const double ru = std::exp(up[0]), rd = std::exp(down[0]);
            const double tu = tau_of(up), td = tau_of(down);
            for (std::size_t i = 0; i < points_.size(); ++i)
                jac[i][k] = (detail::model_value(points_[i], ru, tu) - detail::model_value(points_[i], rd, td)) /
                            (2.0 * h * points_[i].sigma);
        }
        return jac;
    }

    detail::Trial minimize(std::vector<double> p) const {
        detail::Trial t;
        const std::size_t np = p.size();
        double lambda = 1e-3;
        auto r = residuals(p);
        double chi2 = chi2_of(r);
        for (int iter = 0; iter < opt_.max_iterations; ++iter) {
            t.iterations = iter + 1;
            const auto jac = jacobian(p);
            std::vector<std::vector<double>> a(np, std::vector<double>(np, 0.0));
            std::vector<double> g(np, 0.0);
            for (std::size_t i = 0; i < points_.size(); ++i)
                for (std::size_t k = 0; k < np; ++k) {
                    g[k] += jac[i][k] * r[i];
                    for (std::size_t l = 0; l < np; ++l) a[k][l] += jac[i][k] * jac[i][l];
                }
            bool accepted = false;
            std::vector<double> step;
            while (lambda < 1e20) {
                auto damped = a;
                for (std::size_t k = 0; k < np; ++k) damped[k][k] *= (1.0 + lambda);
                step = solve(damped, g);
                // Trust region: at most a factor e^2 per step in R or tau.
                if (const double m = max_abs(step); m > 2.0)
                    for (auto& x : step) x *= 2.0 / m;
                std::vector<double> trial_p = p;
                for (std::size_t k = 0; k < np; ++k) trial_p[k] += step[k];
                const auto trial_r = residuals(trial_p);
                const double trial_chi2 = chi2_of(trial_r);
                t.damping_trace.push_back(lambda);
                if (trial_chi2 <= chi2) {
                    p = trial_p;
                    r = trial_r;
                    chi2 = trial_chi2;
                    lambda = std::max(lambda / 10.0, 1e-12);
                    accepted = true;
                    break;
                }
                lambda *= 10.0;
                if (max_abs(step) < opt_.step_tolerance) break;
            }
            // Log-space steps are relative steps in R and tau.
            if (max_abs(step) < opt_.step_tolerance || (!accepted && lambda >= 1e20)) {
                t.converged = max_abs(step) < opt_.step_tolerance;
                break;
            }
        }
        t.params = p;
        t.chi2 = chi2;
        const auto jac = jacobian(p);
        t.normal.assign(np, std::vector<double>(np, 0.0));
        for (const auto& row : jac)
            for (std::size_t k = 0; k < np; ++k)
                for (std::size_t l = 0; l < np; ++l) t.normal[k][l] += row[k] * row[l];
        return t;
    }

    static double max_abs(const std::vector<double>& v) {
        double m = 0.0;
        for (double x : v) m = std::max(m, std::abs(x));
        return m;
    }

    static std::vector<std::vector<double>> inverse(const std::vector<std::vector<double>>& a) {
        if (a.size() == 1) {
            if (!(std::abs(a[0][0]) > 0.0)) throw FitError("rank", "normal matrix is singular");
            return {{1.0 / a[0][0]}};
        }
        const double det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
        const double scale = std::abs(a[0][0] * a[1][1]);
        if (!(std::abs(det) > 1e-12 * scale) || !(scale > 0.0))
            throw FitError("rank", "normal matrix is degenerate (det " + std::to_string(det) + ")");
        return {{a[1][1] / det, -a[0][1] / det}, {-a[1][0] / det, a[0][0] / det}};
    }

    static std::vector<double> solve(const std::vector<std::vector<double>>& a, const std::vector<double>& g) {
        const auto inv = inverse(a);
        std::vector<double> x(g.size(), 0.0);
        for (std::size_t k = 0; k < g.size(); ++k)
            for (std::size_t l = 0; l < g.size(); ++l) x[k] += inv[k][l] * g[l];
        return x;
    }

    SourceFit summarize(const detail::Trial& t) const {
        SourceFit out;
        out.R_hat = std::exp(t.params[0]);
        out.tau_hat = tau_of(t.params);
        out.chi_square = t.chi2;
        out.tau_fitted = fit_tau_;
        out.iterations = t.iterations;
        out.dof = int(points_.size()) - int(t.params.size());
        const auto cov = inverse(t.normal);
        // d(R) = R d(log R)
        const double jr = out.R_hat, jt = out.tau_hat;
        out.covariance[0][0] = jr * jr * cov[0][0];
        if (fit_tau_) {
            out.covariance[0][1] = out.covariance[1][0] = jr * jt * cov[0][1];
            out.covariance[1][1] = jt * jt * cov[1][1];
        }
        return out;
    }

    // R from the interpolated 1/e separation, solving q R = sqrt 2.
    static double width_radius(const CorrelationScan& angle, double lambda0_nm, double distance_mm) {
        const double k = energy_from_wavelength(lambda0_nm) / constants::hbar_c;
        double sep = 0.0;
        if (auto s = one_over_e_point(angle)) {
            sep = *s;
        } else if (!angle.bins.empty()) {
            sep = angle.bins.back().axis;
        }
        if (!(sep > 0.0)) sep = distance_mm * 1e-3;
        const double q = 2.0 * k * std::sin(0.5 * separation_to_angle(std::min(sep, 2.0 * distance_mm), distance_mm));
        return std::sqrt(2.0) / q;
    }

    // tau from the energy 1/e point after removing the longitudinal q = dE / hbar c part.
    static double width_tau(const CorrelationScan& energy, double radius) {
        const auto de = one_over_e_point(energy);
        const double d = de ? *de : (energy.bins.empty() ? 1.0 : std::max(energy.bins.back().axis, 1e-6));
        const double spatial = std::pow(d * radius / constants::hbar_c, 2) / 2.0;
        const double temporal = std::max(1.0 - spatial, 0.05);
        return std::sqrt(2.0 * temporal) * constants::hbar / d;
    }

    FitOptions opt_;
    bool fit_tau_;
    std::vector<detail::FitPoint> points_;
    double radius_guess_ = 0.0;
    double tau_guess_ = 0.0;
};

/// Fits (R, tau); tau is held at opt.tau_fixed_fs unless an energy scan is given.
inline SourceFit fit_source(const CorrelationScan& angle, const std::optional<CorrelationScan>& energy,
                            double lambda0_nm, double distance_mm, const FitOptions& opt = {}) {
    return SourceFitter(angle, energy ? &*energy : nullptr, lambda0_nm, distance_mm, opt).fit();
}

}  // namespace hbt
