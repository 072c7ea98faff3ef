#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "ftraj/errors.hpp"

namespace ftraj {

// One weighted sample of a scaling curve: x is the control variable (system
// size or coupling strength), y the measured value, sigma its standard
// error. All fits require sigma > 0; pass 1.0 for unweighted data.
struct DataPoint {
    double x = 0.0;
    double y = 0.0;
    double sigma = 1.0;
};

// Asymptotic classification read off the interpolating size fit.
enum class Regime { Volume, Subvolume, Area, Undetermined };

// Result of fitting f(L) = A L / (1 + C L^b), A, C, b >= 0.
//
// The curve is linear for L << L0 and behaves as (A/C) L^(1-b) for
// L >> L0, with L0 = C^(-1/b) the crossover scale. Classification:
// volume when b < 0.1 or C < 1e-8 (the power never develops; with C that
// small b is unidentified and flagged), area when b >= 1 - sigma_b, and
// subvolume in between; Undetermined when sigma_b > 0.5 leaves the
// exponent unconstrained. Fits landing within max(sigma_b, 0.05) of b = 1
// carry the log_area_ambiguous tag: at that exponent an area law cannot be
// told apart from a logarithmic growth by this functional form.
struct ScalingFit {
    double A = 0.0;
    double C = 0.0;
    double b = 0.0;
    bool b_fixed = false;
    bool b_unconstrained = false;
    Eigen::Matrix3d covariance = Eigen::Matrix3d::Zero();  // order (A, C, b)
    double residual_norm = 0.0;  // sqrt(sum of squared weighted residuals)
    double L0 = 0.0;
    bool reliable = false;  // largest fitted size reaches L0
    Regime regime = Regime::Undetermined;
    bool log_area_ambiguous = false;
};

double scaling_value(const ScalingFit& fit, double L);

// Weighted least squares for the interpolating size fit. Needs at least 4
// distinct sizes (3 when b is fixed) and strictly positive values. The
// nonlinear search runs damped least squares over (ln C, b) from a grid of
// starts, with A profiled out exactly; the best residual wins and ties go
// to the smaller b. Throws InsufficientPoints, ConfigError (non-positive
// values or errors), DegenerateData (all values equal), NoConvergence.
ScalingFit fit_scaling(const std::vector<DataPoint>& points,
                       std::optional<double> fix_b = std::nullopt);

// Result of fitting  f(gamma) = K / (1 + Q gamma^beta), K, Q, beta >= 0;
// K is the gamma -> 0 plateau.
struct LorentzianFit {
    double K = 0.0;
    double Q = 0.0;
    double beta = 0.0;
    Eigen::Matrix3d covariance = Eigen::Matrix3d::Zero();  // (K, Q, beta)
    double residual_norm = 0.0;
};

double lorentzian_value(const LorentzianFit& fit, double gamma);

// Weighted fit of the generalized Lorentzian over a coupling grid. Needs
// at least 4 distinct couplings spanning at least one decade.
LorentzianFit fit_lorentzian(const std::vector<DataPoint>& points);

// Log-log power law y = e^intercept * x^exponent.
struct PowerLawFit {
    double exponent = 0.0;
    double intercept = 0.0;
    double exponent_stderr = 0.0;
    int n_used = 0;
    // Percentile bootstrap interval for the exponent (filled only when the
    // fit is bootstrapped).
    double ci_low = 0.0;
    double ci_high = 0.0;
};

// Least-squares slope of ln L0 versus ln gamma, restricted to points with
// gamma < gamma_max. With n_bootstrap > 0 the residuals are resampled that
// many times (deterministically from `seed`) and the central 95% of the
// resampled slopes fills [ci_low, ci_high].
PowerLawFit fit_L0_powerlaw(const std::vector<DataPoint>& points,
                            double gamma_max, int n_bootstrap = 0,
                            std::uint64_t seed = 0);

// Size dependence of the Lorentzian parameters:
//   K(L) ~ m L^x + k,   ln Q(L) ~ y ln L + q,   beta(L) ~ slope * L + const.
struct ParameterScalings {
    double m = 0.0;
    double x = 0.0;
    double k = 0.0;
    double x_stderr = 0.0;
    double y = 0.0;
    double q = 0.0;
    double y_stderr = 0.0;
    double beta_slope = 0.0;
    double beta_slope_stderr = 0.0;
};

ParameterScalings fit_parameter_scalings(
    const std::vector<DataPoint>& k_vs_l,
    const std::vector<DataPoint>& q_vs_l,
    const std::vector<DataPoint>& beta_vs_l);

// One cell of the fit-window stability analysis: the size fit restricted
// to samples with l_min <= L <= l_max. Cells with too few usable points,
// or where the fit fails, are marked invalid.
struct StabilityCell {
    bool valid = false;
    double l_min = 0.0;
    double l_max = 0.0;
    ScalingFit fit;
};

std::vector<std::vector<StabilityCell>> stability_sweep(
    const std::vector<DataPoint>& points, const std::vector<double>& lmin_grid,
    const std::vector<double>& lmax_grid,
    std::optional<double> fix_b = std::nullopt);

}  // namespace ftraj
