#include "ftraj/fitting.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <vector>

#include "ftraj/noise.hpp"

namespace ftraj {

namespace {

constexpr double kCMin = 1e-8;        // below this, C is treated as zero
constexpr double kVolumeB = 0.1;      // b threshold for the linear regime
constexpr double kWideSigmaB = 0.5;   // exponent error leaving b unconstrained
constexpr double kTieRel = 1e-14;     // tie window, relative to signal power

int distinct_count(const std::vector<DataPoint>& pts) {
    std::set<double> xs;
    for (const auto& p : pts) xs.insert(p.x);
    return static_cast<int>(xs.size());
}

void require_finite_weighted(const std::vector<DataPoint>& pts,
                             bool positive_x, bool positive_y,
                             const char* what) {
    for (const auto& p : pts) {
        if (!std::isfinite(p.x) || !std::isfinite(p.y) ||
            !std::isfinite(p.sigma))
            throw ConfigError(std::string(what) + ": non-finite input");
        if (p.sigma <= 0.0)
            throw ConfigError(std::string(what) +
                              ": standard errors must be positive");
        if (positive_x && p.x <= 0.0)
            throw ConfigError(std::string(what) +
                              ": control values must be positive");
        if (positive_y && p.y <= 0.0)
            throw ConfigError(std::string(what) + ": values must be positive");
    }
}

bool all_values_equal(const std::vector<DataPoint>& pts) {
    double lo = pts.front().y, hi = pts.front().y;
    for (const auto& p : pts) {
        lo = std::min(lo, p.y);
        hi = std::max(hi, p.y);
    }
    return (hi - lo) <= 1e-13 * std::max(std::abs(lo), std::abs(hi));
}

double signal_power(const std::vector<DataPoint>& pts) {
    double s = 0.0;
    for (const auto& p : pts) s += (p.y / p.sigma) * (p.y / p.sigma);
    return s;
}

struct LmOutcome {
    Eigen::VectorXd theta;
    double phi = std::numeric_limits<double>::infinity();
    bool converged = false;
};

// Damped least squares over a box: solve (J^T J + lambda diag) delta = -J^T r
// with a numeric Jacobian, grow the damping tenfold on rejected steps and
// shrink it tenfold on accepted ones.
template <typename ResidualFn>
LmOutcome lm_minimize(const ResidualFn& residuals, Eigen::VectorXd theta,
                      const Eigen::VectorXd& lo, const Eigen::VectorXd& hi) {
    constexpr int kMaxIter = 400;
    const int p = static_cast<int>(theta.size());
    auto boxed = [&](Eigen::VectorXd v) {
        for (int i = 0; i < p; ++i) v(i) = std::clamp(v(i), lo(i), hi(i));
        return v;
    };
    theta = boxed(theta);
    Eigen::VectorXd r = residuals(theta);
    double phi = r.squaredNorm();
    if (!std::isfinite(phi)) return {theta, phi, false};
    double lambda = 1e-3;
    bool converged = false;
    for (int iter = 0; iter < kMaxIter && !converged; ++iter) {
        Eigen::MatrixXd J(r.size(), p);
        for (int j = 0; j < p; ++j) {
            double h = 1e-6 * (1.0 + std::abs(theta(j)));
            Eigen::VectorXd tp = theta, tm = theta;
            tp(j) = std::min(theta(j) + h, hi(j));
            tm(j) = std::max(theta(j) - h, lo(j));
            double dh = tp(j) - tm(j);
            if (dh <= 0.0) {
                J.col(j).setZero();
                continue;
            }
            J.col(j) = (residuals(tp) - residuals(tm)) / dh;
        }
        Eigen::MatrixXd jtj = J.transpose() * J;
        Eigen::VectorXd grad = J.transpose() * r;
        if (grad.lpNorm<Eigen::Infinity>() < 1e-14 * (1.0 + phi)) {
            converged = true;
            break;
        }
        bool stepped = false;
        for (int tries = 0; tries < 60; ++tries) {
            Eigen::MatrixXd m = jtj;
            for (int j = 0; j < p; ++j)
                m(j, j) += lambda * std::max(jtj(j, j), 1e-12);
            Eigen::VectorXd delta = m.ldlt().solve(-grad);
            Eigen::VectorXd trial = boxed(theta + delta);
            Eigen::VectorXd rt = residuals(trial);
            double phit = rt.squaredNorm();
            if (std::isfinite(phit) && phit < phi) {
                double drop = phi - phit;
                double step = (trial - theta).lpNorm<Eigen::Infinity>();
                theta = trial;
                r = rt;
                phi = phit;
                lambda = std::max(lambda / 10.0, 1e-12);
                stepped = true;
                if (drop < 1e-14 * (1.0 + phi) && step < 1e-10)
                    converged = true;
                break;
            }
            lambda *= 10.0;
            if (lambda > 1e12) break;
        }
        // No damping level produces descent: numerically at an optimum.
        if (!stepped) converged = true;
    }
    return {theta, phi, converged};
}

// Moore-Penrose inverse via SVD; tolerant of the rank deficiency that
// appears when a parameter decouples (e.g. b at C -> 0).
Eigen::MatrixXd pseudo_inverse(const Eigen::MatrixXd& m) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(
        m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    double tol = 1e-13 * sv.size() * (sv.size() ? sv(0) : 0.0);
    Eigen::VectorXd inv = sv;
    for (int i = 0; i < inv.size(); ++i)
        inv(i) = sv(i) > tol ? 1.0 / sv(i) : 0.0;
    return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

// Optimal scale factor for f = amp * shape with shape fixed: weighted
// projection of the data onto the shape, clamped to amp >= 0.
double profile_amplitude(const std::vector<DataPoint>& pts,
                         const std::vector<double>& shape) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        double w = 1.0 / (pts[i].sigma * pts[i].sigma);
        num += w * shape[i] * pts[i].y;
        den += w * shape[i] * shape[i];
    }
    if (den <= 0.0) return 0.0;
    return std::max(num / den, 0.0);
}

struct WeightedLine {
    double slope = 0.0;
    double intercept = 0.0;
    double slope_stderr = 0.0;
    double phi = 0.0;
};

// Weighted straight-line fit y = slope * x + intercept; the slope error is
// scaled by the reduced chi-square (zero when there are no spare degrees
// of freedom).
WeightedLine fit_weighted_line(const std::vector<double>& xs,
                               const std::vector<double>& ys,
                               const std::vector<double>& ws) {
    const int n = static_cast<int>(xs.size());
    double sw = 0, swx = 0, swxx = 0, swy = 0, swxy = 0;
    for (int i = 0; i < n; ++i) {
        sw += ws[i];
        swx += ws[i] * xs[i];
        swxx += ws[i] * xs[i] * xs[i];
        swy += ws[i] * ys[i];
        swxy += ws[i] * xs[i] * ys[i];
    }
    double denom = sw * swxx - swx * swx;
    if (!(std::abs(denom) > 0.0))
        throw DegenerateData("line fit: control values are all identical");
    WeightedLine out;
    out.slope = (sw * swxy - swx * swy) / denom;
    out.intercept = (swxx * swy - swx * swxy) / denom;
    for (int i = 0; i < n; ++i) {
        double r = ys[i] - out.slope * xs[i] - out.intercept;
        out.phi += ws[i] * r * r;
    }
    if (n > 2) {
        double s2 = out.phi / (n - 2);
        out.slope_stderr = std::sqrt(std::max(s2 * sw / denom, 0.0));
    }
    return out;
}

}  // namespace

double scaling_value(const ScalingFit& fit, double L) {
    return fit.A * L / (1.0 + fit.C * std::pow(L, fit.b));
}

double lorentzian_value(const LorentzianFit& fit, double gamma) {
    return fit.K / (1.0 + fit.Q * std::pow(gamma, fit.beta));
}

ScalingFit fit_scaling(const std::vector<DataPoint>& points,
                       std::optional<double> fix_b) {
    require_finite_weighted(points, true, true, "size fit");
    const bool fixed = fix_b.has_value();
    if (fixed && (!std::isfinite(*fix_b) || *fix_b < 0.0))
        throw ConfigError("size fit: fixed exponent must be non-negative");
    const int need = fixed ? 3 : 4;
    if (distinct_count(points) < need)
        throw InsufficientPoints("size fit: needs at least " +
                                 std::to_string(need) + " distinct sizes");
    if (all_values_equal(points))
        throw DegenerateData("size fit: all values identical");

    const int n = static_cast<int>(points.size());
    auto shape_at = [&](double cc, double bb) {
        std::vector<double> g(n);
        for (int i = 0; i < n; ++i)
            g[i] = points[i].x / (1.0 + cc * std::pow(points[i].x, bb));
        return g;
    };
    auto residuals_at = [&](double cc, double bb) {
        std::vector<double> g = shape_at(cc, bb);
        double amp = profile_amplitude(points, g);
        Eigen::VectorXd r(n);
        for (int i = 0; i < n; ++i)
            r(i) = (points[i].y - amp * g[i]) / points[i].sigma;
        return r;
    };

    struct Candidate {
        double c = 0.0, b = 0.0, phi = 0.0;
        bool converged = false;
    };
    std::vector<Candidate> found;
    const std::vector<double> c_starts = {1e-6, 1e-4, 1e-2, 0.1, 1.0, 10.0};
    const std::vector<double> b_starts = {0.05, 0.3, 0.5, 0.8, 1.0, 1.3, 2.0};
    if (fixed) {
        Eigen::VectorXd lo(1), hi(1);
        lo << -45.0;
        hi << 45.0;
        auto res = [&](const Eigen::VectorXd& th) {
            return residuals_at(std::exp(th(0)), *fix_b);
        };
        for (double c0 : c_starts) {
            Eigen::VectorXd th(1);
            th << std::log(c0);
            LmOutcome out = lm_minimize(res, th, lo, hi);
            found.push_back(
                {std::exp(out.theta(0)), *fix_b, out.phi, out.converged});
        }
    } else {
        Eigen::VectorXd lo(2), hi(2);
        lo << -45.0, 0.0;
        hi << 45.0, 5.0;
        auto res = [&](const Eigen::VectorXd& th) {
            return residuals_at(std::exp(th(0)), th(1));
        };
        for (double c0 : c_starts)
            for (double b0 : b_starts) {
                Eigen::VectorXd th(2);
                th << std::log(c0), b0;
                LmOutcome out = lm_minimize(res, th, lo, hi);
                found.push_back({std::exp(out.theta(0)), out.theta(1), out.phi,
                                 out.converged});
            }
    }
    double best = std::numeric_limits<double>::infinity();
    bool any = false;
    for (const auto& c : found)
        if (c.converged && std::isfinite(c.phi)) {
            any = true;
            best = std::min(best, c.phi);
        }
    if (!any) throw NoConvergence("size fit: no start converged");
    // Ties within the noise floor of the data go to the smaller exponent.
    double tie = best + kTieRel * signal_power(points);
    const Candidate* pick = nullptr;
    for (const auto& c : found) {
        if (!c.converged || !std::isfinite(c.phi) || c.phi > tie) continue;
        if (!pick || c.b < pick->b) pick = &c;
    }

    ScalingFit fit;
    fit.C = pick->c;
    fit.b = pick->b;
    fit.b_fixed = fixed;
    std::vector<double> g = shape_at(fit.C, fit.b);
    fit.A = profile_amplitude(points, g);
    Eigen::VectorXd r(n);
    for (int i = 0; i < n; ++i)
        r(i) = (points[i].y - fit.A * g[i]) / points[i].sigma;
    double phi = r.squaredNorm();
    fit.residual_norm = std::sqrt(phi);

    // Covariance from the full Jacobian at the optimum, scaled by the
    // reduced chi-square.
    const int p_eff = fixed ? 2 : 3;
    Eigen::MatrixXd jac(n, p_eff);
    for (int i = 0; i < n; ++i) {
        double lb = std::pow(points[i].x, fit.b);
        double frac = lb * fit.C / (1.0 + fit.C * lb);  // C L^b / (1 + C L^b)
        double w = 1.0 / points[i].sigma;
        jac(i, 0) = g[i] * w;
        jac(i, 1) = -fit.A * g[i] * (lb / (1.0 + fit.C * lb)) * w;
        if (!fixed)
            jac(i, 2) = -fit.A * g[i] * frac * std::log(points[i].x) * w;
    }
    double dof = std::max(n - p_eff, 1);
    Eigen::MatrixXd cov = (phi / dof) * pseudo_inverse(jac.transpose() * jac);
    fit.covariance.setZero();
    fit.covariance.topLeftCorner(p_eff, p_eff) = cov;
    double sigma_b = fixed ? 0.0 : std::sqrt(std::max(cov(2, 2), 0.0));

    fit.b_unconstrained = !fixed && fit.C < kCMin;
    if (fit.b < 1e-12 || fit.C <= 0.0)
        fit.L0 = std::numeric_limits<double>::infinity();
    else
        fit.L0 = std::pow(fit.C, -1.0 / fit.b);
    double l_max = 0.0;
    for (const auto& p : points) l_max = std::max(l_max, p.x);
    fit.reliable = l_max >= fit.L0;

    // The exponent uncertainty enters the thresholds with a small floor so
    // that data fitted to machine precision (sigma_b ~ 0, b off true by
    // optimizer tolerance) still classifies by its limiting value.
    double b_slack = std::max(sigma_b, 1e-4);
    if (fit.b < kVolumeB || fit.C < kCMin)
        fit.regime = Regime::Volume;
    else if (!fixed && sigma_b > kWideSigmaB)
        fit.regime = Regime::Undetermined;
    else if (fit.b >= 1.0 - b_slack)
        fit.regime = Regime::Area;
    else
        fit.regime = Regime::Subvolume;
    fit.log_area_ambiguous = std::abs(fit.b - 1.0) <= std::max(sigma_b, 0.05);
    return fit;
}

LorentzianFit fit_lorentzian(const std::vector<DataPoint>& points) {
    require_finite_weighted(points, true, true, "coupling fit");
    if (distinct_count(points) < 4)
        throw InsufficientPoints(
            "coupling fit: needs at least 4 distinct couplings");
    double g_lo = points.front().x, g_hi = points.front().x;
    for (const auto& p : points) {
        g_lo = std::min(g_lo, p.x);
        g_hi = std::max(g_hi, p.x);
    }
    if (g_hi < 10.0 * g_lo * (1.0 - 1e-12))
        throw ConfigError(
            "coupling fit: grid must span at least one decade");

    const int n = static_cast<int>(points.size());
    auto shape_at = [&](double qq, double bb) {
        std::vector<double> h(n);
        for (int i = 0; i < n; ++i)
            h[i] = 1.0 / (1.0 + qq * std::pow(points[i].x, bb));
        return h;
    };
    auto residuals = [&](const Eigen::VectorXd& th) {
        std::vector<double> h = shape_at(std::exp(th(0)), th(1));
        double amp = profile_amplitude(points, h);
        Eigen::VectorXd r(n);
        for (int i = 0; i < n; ++i)
            r(i) = (points[i].y - amp * h[i]) / points[i].sigma;
        return r;
    };

    Eigen::VectorXd lo(2), hi(2);
    lo << -45.0, 0.0;
    hi << 45.0, 6.0;
    double best = std::numeric_limits<double>::infinity();
    Eigen::VectorXd best_theta;
    bool any = false;
    for (double q0 : {1e-3, 1e-2, 0.1, 1.0, 10.0, 100.0})
        for (double b0 : {0.5, 1.0, 1.5, 2.0, 3.0}) {
            Eigen::VectorXd th(2);
            th << std::log(q0), b0;
            LmOutcome out = lm_minimize(residuals, th, lo, hi);
            if (out.converged && std::isfinite(out.phi) && out.phi < best) {
                best = out.phi;
                best_theta = out.theta;
                any = true;
            }
        }
    if (!any) throw NoConvergence("coupling fit: no start converged");

    LorentzianFit fit;
    fit.Q = std::exp(best_theta(0));
    fit.beta = best_theta(1);
    std::vector<double> h = shape_at(fit.Q, fit.beta);
    fit.K = profile_amplitude(points, h);
    double phi = 0.0;
    Eigen::MatrixXd jac(n, 3);
    for (int i = 0; i < n; ++i) {
        double r = (points[i].y - fit.K * h[i]) / points[i].sigma;
        phi += r * r;
        double gb = std::pow(points[i].x, fit.beta);
        double w = 1.0 / points[i].sigma;
        jac(i, 0) = h[i] * w;
        jac(i, 1) = -fit.K * h[i] * h[i] * gb * w;
        jac(i, 2) = -fit.K * h[i] * h[i] * fit.Q * gb *
                    std::log(points[i].x) * w;
    }
    fit.residual_norm = std::sqrt(phi);
    double dof = std::max(n - 3, 1);
    fit.covariance = (phi / dof) * pseudo_inverse(jac.transpose() * jac);
    return fit;
}

PowerLawFit fit_L0_powerlaw(const std::vector<DataPoint>& points,
                            double gamma_max, int n_bootstrap,
                            std::uint64_t seed) {
    std::vector<double> lx, ly;
    for (const auto& p : points) {
        if (!(p.x > 0.0) || !(p.x < gamma_max)) continue;
        if (!std::isfinite(p.y) || !(p.y > 0.0)) continue;  // skip diverged
        lx.push_back(std::log(p.x));
        ly.push_back(std::log(p.y));
    }
    const int n = static_cast<int>(lx.size());
    if (n < 3)
        throw InsufficientPoints(
            "crossover power law: fewer than 3 usable points below cutoff");
    std::vector<double> ones(n, 1.0);
    WeightedLine line = fit_weighted_line(lx, ly, ones);
    PowerLawFit fit;
    fit.exponent = line.slope;
    fit.intercept = line.intercept;
    fit.exponent_stderr = line.slope_stderr;
    fit.n_used = n;

    if (n_bootstrap > 0) {
        std::vector<double> fitted(n), resid(n);
        for (int i = 0; i < n; ++i) {
            fitted[i] = line.slope * lx[i] + line.intercept;
            resid[i] = ly[i] - fitted[i];
        }
        NoiseStream stream(seed, 0);
        std::vector<double> slopes(n_bootstrap);
        std::vector<double> yb(n);
        for (int rep = 0; rep < n_bootstrap; ++rep) {
            for (int i = 0; i < n; ++i) {
                // uniform() lies in (0,1], so ceil maps onto 1..n uniformly
                int idx =
                    static_cast<int>(std::ceil(stream.uniform() * n)) - 1;
                idx = std::clamp(idx, 0, n - 1);
                yb[i] = fitted[i] + resid[idx];
            }
            slopes[rep] = fit_weighted_line(lx, yb, ones).slope;
        }
        std::sort(slopes.begin(), slopes.end());
        auto at_quantile = [&](double q) {
            int i = static_cast<int>(std::floor(q * (n_bootstrap - 1)));
            return slopes[std::clamp(i, 0, n_bootstrap - 1)];
        };
        fit.ci_low = at_quantile(0.025);
        fit.ci_high = at_quantile(0.975);
    }
    return fit;
}

ParameterScalings fit_parameter_scalings(
    const std::vector<DataPoint>& k_vs_l, const std::vector<DataPoint>& q_vs_l,
    const std::vector<DataPoint>& beta_vs_l) {
    ParameterScalings out;

    // Plateau height: K(L) = m L^x + k, x profiled by damped least squares
    // with (m, k) solved linearly at each trial exponent.
    require_finite_weighted(k_vs_l, true, false, "plateau scaling");
    if (distinct_count(k_vs_l) < 4)
        throw InsufficientPoints(
            "plateau scaling: needs at least 4 distinct sizes");
    const int nk = static_cast<int>(k_vs_l.size());
    auto mk_at = [&](double x) {
        // weighted 2-column least squares for (m, k) given the exponent
        Eigen::MatrixXd a(nk, 2);
        Eigen::VectorXd rhs(nk);
        for (int i = 0; i < nk; ++i) {
            double w = 1.0 / k_vs_l[i].sigma;
            a(i, 0) = std::pow(k_vs_l[i].x, x) * w;
            a(i, 1) = w;
            rhs(i) = k_vs_l[i].y * w;
        }
        Eigen::Vector2d mk = a.colPivHouseholderQr().solve(rhs);
        return mk;
    };
    auto k_residuals = [&](const Eigen::VectorXd& th) {
        Eigen::Vector2d mk = mk_at(th(0));
        Eigen::VectorXd r(nk);
        for (int i = 0; i < nk; ++i)
            r(i) = (k_vs_l[i].y - mk(0) * std::pow(k_vs_l[i].x, th(0)) -
                    mk(1)) /
                   k_vs_l[i].sigma;
        return r;
    };
    Eigen::VectorXd lo(1), hi(1);
    lo << 0.0;
    hi << 5.0;
    double best = std::numeric_limits<double>::infinity();
    double best_x = 1.0;
    bool any = false;
    for (double x0 : {0.3, 0.5, 0.8, 1.0, 1.2, 1.5, 2.0, 2.5}) {
        Eigen::VectorXd th(1);
        th << x0;
        LmOutcome o = lm_minimize(k_residuals, th, lo, hi);
        if (o.converged && std::isfinite(o.phi) && o.phi < best) {
            best = o.phi;
            best_x = o.theta(0);
            any = true;
        }
    }
    if (!any) throw NoConvergence("plateau scaling: no start converged");
    out.x = best_x;
    Eigen::Vector2d mk = mk_at(best_x);
    out.m = mk(0);
    out.k = mk(1);
    Eigen::MatrixXd jac(nk, 3);
    double phi = 0.0;
    for (int i = 0; i < nk; ++i) {
        double w = 1.0 / k_vs_l[i].sigma;
        double lx = std::pow(k_vs_l[i].x, out.x);
        double r = (k_vs_l[i].y - out.m * lx - out.k) * w;
        phi += r * r;
        jac(i, 0) = lx * w;
        jac(i, 1) = out.m * lx * std::log(k_vs_l[i].x) * w;
        jac(i, 2) = w;
    }
    double dof = std::max(nk - 3, 1);
    Eigen::MatrixXd cov = (phi / dof) * pseudo_inverse(jac.transpose() * jac);
    out.x_stderr = std::sqrt(std::max(cov(1, 1), 0.0));

    // Lorentzian width: straight line through (ln L, ln Q).
    require_finite_weighted(q_vs_l, true, true, "width scaling");
    if (distinct_count(q_vs_l) < 3)
        throw InsufficientPoints(
            "width scaling: needs at least 3 distinct sizes");
    {
        std::vector<double> xs, ys, ws;
        for (const auto& p : q_vs_l) {
            xs.push_back(std::log(p.x));
            ys.push_back(std::log(p.y));
            // sigma is the error of Q itself; propagate through the log
            double w = p.y / p.sigma;
            ws.push_back(w * w);
        }
        WeightedLine line = fit_weighted_line(xs, ys, ws);
        out.y = line.slope;
        out.q = line.intercept;
        out.y_stderr = line.slope_stderr;
    }

    // Lorentzian power: linear trend in L, reported as slope +/- error.
    require_finite_weighted(beta_vs_l, true, false, "power trend");
    if (distinct_count(beta_vs_l) < 3)
        throw InsufficientPoints(
            "power trend: needs at least 3 distinct sizes");
    {
        std::vector<double> xs, ys, ws;
        for (const auto& p : beta_vs_l) {
            xs.push_back(p.x);
            ys.push_back(p.y);
            ws.push_back(1.0 / (p.sigma * p.sigma));
        }
        WeightedLine line = fit_weighted_line(xs, ys, ws);
        out.beta_slope = line.slope;
        out.beta_slope_stderr = line.slope_stderr;
    }
    return out;
}

std::vector<std::vector<StabilityCell>> stability_sweep(
    const std::vector<DataPoint>& points, const std::vector<double>& lmin_grid,
    const std::vector<double>& lmax_grid, std::optional<double> fix_b) {
    if (lmin_grid.empty() || lmax_grid.empty())
        throw ConfigError("stability sweep: empty window grid");
    std::vector<std::vector<StabilityCell>> table(lmin_grid.size());
    for (std::size_t i = 0; i < lmin_grid.size(); ++i) {
        table[i].resize(lmax_grid.size());
        for (std::size_t j = 0; j < lmax_grid.size(); ++j) {
            StabilityCell& cell = table[i][j];
            cell.l_min = lmin_grid[i];
            cell.l_max = lmax_grid[j];
            if (cell.l_min >= cell.l_max) continue;
            std::vector<DataPoint> window;
            for (const auto& p : points)
                if (p.x >= cell.l_min && p.x <= cell.l_max)
                    window.push_back(p);
            try {
                cell.fit = fit_scaling(window, fix_b);
                cell.valid = true;
            } catch (const Error&) {
                cell.valid = false;
            }
        }
    }
    return table;
}

}  // namespace ftraj
