#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <tuple>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "avsig/common.hpp"
#include "avsig/rules.hpp"
#include "avsig/version.hpp"

namespace avsig {

/// Per-category 0/1 matrix of shape apps x engines: cell (a, e) is 1 iff
/// engine e gave app a at least one detection in this category.
struct CategoryIndicatorMatrix {
    Category category = Category::Adware;
    std::vector<std::string> app_ids;     // row labels, dense app order
    std::vector<std::string> engine_ids;  // column labels, dense engine order
    std::vector<std::vector<double>> rows;
};

inline CategoryIndicatorMatrix build_category_matrix(const std::vector<NormalizedDetection>& nd,
                                                     Category category) {
    if (nd.empty()) throw ValidationError("no normalized detections");
    size_t n_apps = 0, n_engines = 0;
    for (const auto& d : nd) {
        n_apps = std::max(n_apps, static_cast<size_t>(d.app_idx) + 1);
        n_engines = std::max(n_engines, static_cast<size_t>(d.engine_idx) + 1);
    }
    CategoryIndicatorMatrix X;
    X.category = category;
    X.app_ids.assign(n_apps, std::string());
    X.engine_ids.assign(n_engines, std::string());
    X.rows.assign(n_apps, std::vector<double>(n_engines, 0.0));
    for (const auto& d : nd) {
        X.app_ids[d.app_idx] = d.app_id;
        X.engine_ids[d.engine_idx] = d.engine_id;
        if (d.category == category) X.rows[d.app_idx][d.engine_idx] = 1.0;
    }
    return X;
}

/// Sample covariance (n-1 denominator) of dense column data.
inline std::vector<std::vector<double>> sample_covariance(
    const std::vector<std::vector<double>>& rows) {
    size_t n = rows.size();
    if (n < 2) throw ValidationError("covariance needs at least two rows");
    size_t p = rows[0].size();
    std::vector<double> mean(p, 0.0);
    for (const auto& r : rows)
        for (size_t j = 0; j < p; ++j) mean[j] += r[j];
    for (auto& m : mean) m /= static_cast<double>(n);
    std::vector<std::vector<double>> S(p, std::vector<double>(p, 0.0));
    for (const auto& r : rows)
        for (size_t i = 0; i < p; ++i) {
            double di = r[i] - mean[i];
            for (size_t j = i; j < p; ++j) S[i][j] += di * (r[j] - mean[j]);
        }
    for (size_t i = 0; i < p; ++i)
        for (size_t j = i; j < p; ++j) {
            S[i][j] /= static_cast<double>(n - 1);
            S[j][i] = S[i][j];
        }
    return S;
}

struct FactorFitOptions {
    std::size_t max_iters = 5000;
    double tol = 1e-10;      // relative objective decrease marking convergence
    std::uint64_t seed = 1;  // power-iteration start vector and noise screen
    bool standardize = false;
    // Sample count behind the covariance being fitted; 0 means unknown. When
    // known, the fit screens the leading common-variance eigenvalue against
    // simulated independent-column noise and reports zero loadings when the
    // data cannot beat it (see fit_covariance).
    std::size_t n_samples = 0;
};

/// Single-factor model: latent variance fixed to 1, loadings omega and unique
/// variances theta per engine, global sign fixed so sum(omega) >= 0.
struct FactorModel {
    std::string category;  // display name of the category this model covers
    std::vector<std::string> engine_ids;
    std::vector<double> loadings;          // omega
    std::vector<double> unique_variances;  // theta, >= 0
    double fit_residual = 0.0;             // final objective value
    std::size_t n_samples = 0;
    std::size_t iterations = 0;
    bool standardized = false;
    std::vector<std::string> warnings;
    std::vector<double> objective_history;  // accepted objective values, initial first
};

class FitConvergenceError : public std::runtime_error {
public:
    FitConvergenceError(const std::string& msg, FactorModel last)
        : std::runtime_error(msg), last_(std::move(last)) {}
    const FactorModel& last_iterate() const { return last_; }

private:
    FactorModel last_;
};

/// Squared Frobenius distance between S and the single-factor implied
/// covariance omega*omega^T + diag(theta), counting the diagonal.
inline double factor_objective(const std::vector<std::vector<double>>& S,
                               const std::vector<double>& omega,
                               const std::vector<double>& theta) {
    size_t p = S.size();
    double f = 0.0;
    for (size_t i = 0; i < p; ++i)
        for (size_t j = 0; j < p; ++j) {
            double r = S[i][j] - omega[i] * omega[j] - (i == j ? theta[i] : 0.0);
            f += r * r;
        }
    return f;
}

/// Analytic gradient of factor_objective: with R = S - omega*omega^T -
/// diag(theta), d/d omega = -4 R omega and d/d theta = -2 diag(R).
inline void factor_gradient(const std::vector<std::vector<double>>& S,
                            const std::vector<double>& omega, const std::vector<double>& theta,
                            std::vector<double>& g_omega, std::vector<double>& g_theta) {
    size_t p = S.size();
    g_omega.assign(p, 0.0);
    g_theta.assign(p, 0.0);
    for (size_t i = 0; i < p; ++i) {
        double row_dot = 0.0;
        for (size_t j = 0; j < p; ++j) {
            double r = S[i][j] - omega[i] * omega[j] - (i == j ? theta[i] : 0.0);
            row_dot += r * omega[j];
            if (i == j) g_theta[i] = -2.0 * r;
        }
        g_omega[i] = -4.0 * row_dot;
    }
}

inline std::vector<std::vector<double>> implied_covariance(const std::vector<double>& omega,
                                                           const std::vector<double>& theta) {
    size_t p = omega.size();
    std::vector<std::vector<double>> out(p, std::vector<double>(p, 0.0));
    for (size_t i = 0; i < p; ++i)
        for (size_t j = 0; j < p; ++j)
            out[i][j] = omega[i] * omega[j] + (i == j ? theta[i] : 0.0);
    return out;
}

namespace detail {

/// Dominant eigenpair by power iteration; deterministic via seeded start.
inline std::pair<double, std::vector<double>> power_iteration(
    const std::vector<std::vector<double>>& S, std::uint64_t seed) {
    size_t p = S.size();
    std::mt19937_64 rng(seed);
    std::vector<double> v(p), next(p);
    for (auto& x : v)
        x = 0.1 + 0.9 * (static_cast<double>(rng() >> 11) * 0x1.0p-53);
    double norm = 0.0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    for (auto& x : v) x /= norm;

    double lambda = 0.0;
    for (int iter = 0; iter < 1000; ++iter) {
        for (size_t i = 0; i < p; ++i) {
            next[i] = 0.0;
            for (size_t j = 0; j < p; ++j) next[i] += S[i][j] * v[j];
        }
        double nn = 0.0;
        for (double x : next) nn += x * x;
        nn = std::sqrt(nn);
        if (nn == 0.0) return {0.0, v};  // S annihilates v; eigenvalue 0
        for (auto& x : next) x /= nn;
        double new_lambda = 0.0;
        for (size_t i = 0; i < p; ++i) {
            double dot = 0.0;
            for (size_t j = 0; j < p; ++j) dot += S[i][j] * next[j];
            new_lambda += next[i] * dot;
        }
        v = next;
        if (std::abs(new_lambda - lambda) <= 1e-13 * (1.0 + std::abs(new_lambda))) {
            lambda = new_lambda;
            break;
        }
        lambda = new_lambda;
    }
    return {lambda, v};
}

} // namespace detail

/// Least-squares single-factor fit of a covariance matrix: minimize
/// ||S - omega*omega^T - diag(theta)||_F^2 subject to theta >= 0, by projected
/// gradient descent with backtracking line search. Zero-variance columns are
/// excluded from the objective and reported with zero loading and uniqueness;
/// at least two columns with nonzero variance are required. When
/// options.n_samples is set, the fit first screens for common signal above
/// independent-column sampling noise and returns the zero-loading stationary
/// point (omega = 0, theta = diag(S)) when there is none.
inline FactorModel fit_covariance(std::vector<std::vector<double>> S,
                                  std::vector<std::string> labels,
                                  const FactorFitOptions& options = {}) {
    size_t p = S.size();
    if (labels.size() != p)
        throw ValidationError("label count does not match covariance size");
    if (options.tol <= 0.0) throw ValidationError("tol must be positive");
    for (size_t i = 0; i < p; ++i)
        if (S[i].size() != p) throw ValidationError("covariance matrix must be square");

    FactorModel model;
    model.engine_ids = std::move(labels);
    model.standardized = options.standardize;
    model.loadings.assign(p, 0.0);
    model.unique_variances.assign(p, 0.0);

    // Partition out zero-variance columns: nothing to explain, nothing to fit.
    std::vector<size_t> active;
    for (size_t i = 0; i < p; ++i) {
        if (S[i][i] > 1e-12) {
            active.push_back(i);
        } else {
            model.warnings.push_back("engine " + model.engine_ids[i] +
                                     " has zero variance; excluded from fit");
        }
    }
    size_t pa = active.size();
    if (pa < 2) throw ValidationError("factor fit needs at least two columns with variance");

    std::vector<std::vector<double>> Sa(pa, std::vector<double>(pa, 0.0));
    for (size_t i = 0; i < pa; ++i)
        for (size_t j = 0; j < pa; ++j) Sa[i][j] = S[active[i]][active[j]];
    if (options.standardize) {
        std::vector<double> sd(pa);
        for (size_t i = 0; i < pa; ++i) sd[i] = std::sqrt(Sa[i][i]);
        for (size_t i = 0; i < pa; ++i)
            for (size_t j = 0; j < pa; ++j) Sa[i][j] /= sd[i] * sd[j];
    }

    // Work from the dominant eigenpair of Sa with its diagonal replaced by
    // each row's largest absolute off-diagonal (the classical communality
    // estimate). Iterating on Sa itself folds unique variance into the
    // factor, and on weakly correlated data that start biases the descent
    // toward a degenerate optimum that cancels one row of residuals with a
    // single large loading of arbitrary magnitude.
    auto reduce_diagonal = [](std::vector<std::vector<double>> M) {
        size_t q = M.size();
        for (size_t i = 0; i < q; ++i) {
            double h = 0.0;
            for (size_t j = 0; j < q; ++j)
                if (j != i) h = std::max(h, std::abs(M[i][j]));
            M[i][i] = h;
        }
        return M;
    };
    auto [lambda, v] = detail::power_iteration(reduce_diagonal(Sa), options.seed);

    // Independence screen. Least squares rewards chasing sampling noise: on
    // truly independent columns the best rank-one term still soaks up
    // off-diagonal noise with loadings far above the noise scale itself. When
    // the sample count is known, fit a factor only if the common-variance
    // eigenvalue clearly beats the largest one found across simulated
    // independent-column covariances (off-diagonal sd sqrt(S_ii S_jj / n));
    // otherwise start — and stay — at the zero-loading stationary point.
    bool fit_factor = true;
    if (options.n_samples > 0) {
        double lambda_null = 0.0;
        std::mt19937_64 noise(options.seed ^ 0x9e3779b97f4a7c15ull);
        for (int rep = 0; rep < 19; ++rep) {
            std::vector<std::vector<double>> E(pa, std::vector<double>(pa, 0.0));
            for (size_t i = 0; i < pa; ++i)
                for (size_t j = i + 1; j < pa; ++j) {
                    double sd = std::sqrt(Sa[i][i] * Sa[j][j] /
                                          static_cast<double>(options.n_samples));
                    E[i][j] = E[j][i] = (noise() & 1) ? sd : -sd;
                }
            lambda_null = std::max(
                lambda_null, detail::power_iteration(reduce_diagonal(E), options.seed).first);
        }
        fit_factor = lambda > 2.0 * lambda_null;
        if (!fit_factor)
            model.warnings.push_back(
                "off-diagonal covariance within sampling noise; loadings fixed at zero");
    }

    std::vector<double> omega(pa, 0.0), theta(pa);
    if (fit_factor && lambda > 0.0)
        for (size_t i = 0; i < pa; ++i) omega[i] = std::sqrt(lambda) * v[i];
    for (size_t i = 0; i < pa; ++i)
        theta[i] = std::max(Sa[i][i] - omega[i] * omega[i], 0.0);

    double f = factor_objective(Sa, omega, theta);
    model.objective_history.push_back(f);
    std::vector<double> g_omega, g_theta, cand_omega(pa), cand_theta(pa);
    double step = 1.0;
    bool converged = (f == 0.0);
    size_t iter = 0;
    const double armijo = 1e-4;

    for (; iter < options.max_iters && !converged; ++iter) {
        factor_gradient(Sa, omega, theta, g_omega, g_theta);
        double gsq = 0.0;
        for (double g : g_omega) gsq += g * g;
        for (double g : g_theta) gsq += g * g;
        if (gsq <= 1e-28) {
            converged = true;
            break;
        }

        double alpha = step;
        double f_new = f;
        bool accepted = false;
        for (int bt = 0; bt < 60; ++bt) {
            for (size_t i = 0; i < pa; ++i) {
                cand_omega[i] = omega[i] - alpha * g_omega[i];
                cand_theta[i] = std::max(0.0, theta[i] - alpha * g_theta[i]);
            }
            f_new = factor_objective(Sa, cand_omega, cand_theta);
            if (f_new <= f - armijo * alpha * gsq) {
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if (!accepted) {
            // The step underflowed without satisfying Armijo: the iterate is
            // numerically stationary.
            converged = true;
            break;
        }
        omega.swap(cand_omega);
        theta.swap(cand_theta);
        double decrease = f - f_new;
        f = f_new;
        model.objective_history.push_back(f);
        step = std::min(alpha * 2.0, 1.0);
        if (decrease <= options.tol * std::max(f, 1e-300)) converged = true;
    }

    // The diagonal-only model (omega = 0, theta = diag(S)) is a stationary
    // point gradient descent cannot start from; fall back to it when the
    // descent result is worse, so the returned fit never loses to it.
    {
        std::vector<double> omega0(pa, 0.0), theta0(pa);
        for (size_t i = 0; i < pa; ++i) theta0[i] = Sa[i][i];
        double f0 = factor_objective(Sa, omega0, theta0);
        if (f0 < f) {
            omega = std::move(omega0);
            theta = std::move(theta0);
            f = f0;
            model.objective_history.push_back(f);
        }
    }

    // Loadings are sign-indeterminate; report the orientation whose sum is
    // non-negative.
    double sum = 0.0;
    for (double w : omega) sum += w;
    if (sum < 0.0)
        for (auto& w : omega) w = -w;

    model.iterations = iter;
    model.fit_residual = f;
    for (size_t i = 0; i < pa; ++i) {
        model.loadings[active[i]] = omega[i];
        model.unique_variances[active[i]] = theta[i];
    }
    if (!converged) {
        throw FitConvergenceError("factor fit did not converge in " +
                                      std::to_string(options.max_iters) + " iterations",
                                  model);
    }
    return model;
}

/// Fit a category's model from its apps x engines indicator matrix.
inline FactorModel fit_single_factor(const CategoryIndicatorMatrix& X,
                                     const FactorFitOptions& options = {}) {
    auto S = sample_covariance(X.rows);
    FactorFitOptions opts = options;
    opts.n_samples = X.rows.size();
    FactorModel model = fit_covariance(std::move(S), X.engine_ids, opts);
    model.category = category_display_name(X.category);
    model.n_samples = X.rows.size();
    if (model.n_samples < 10 * X.engine_ids.size())
        model.warnings.push_back("sample count below 10x engine count; estimates may be unstable");
    return model;
}

// --- scoring -----------------------------------------------------------------

/// Numerically stable logistic function.
inline double logistic(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    double e = std::exp(z);
    return e / (1.0 + e);
}

/// Latent score Z = sum of loadings over flagged engines; x must align with
/// the model's engine order.
inline double z_score(const std::vector<double>& x, const FactorModel& model) {
    if (x.size() != model.loadings.size())
        throw ValidationError("indicator vector length does not match model");
    double z = 0.0;
    for (size_t i = 0; i < x.size(); ++i) z += model.loadings[i] * x[i];
    return z;
}

/// Per-app latent scores and detection probabilities, indexed by category in
/// declaration order (Adware, HarmfulThreats, UnknownGeneric).
struct ScoreResult {
    std::string app_id;
    std::array<double, 3> z{};
    std::array<double, 3> p{};
};

namespace detail {

inline std::array<std::unordered_map<std::string, double>, 3> loading_maps(
    const std::array<FactorModel, 3>& models) {
    std::array<std::unordered_map<std::string, double>, 3> w;
    for (size_t m = 0; m < 3; ++m)
        for (size_t i = 0; i < models[m].engine_ids.size(); ++i)
            w[m].emplace(models[m].engine_ids[i], models[m].loadings[i]);
    return w;
}

} // namespace detail

/// Score every app appearing in the normalized detections, in dense app
/// order. Engines are matched to model coefficients by id; each (app, engine,
/// category) indicator counts once however many raw detections back it.
inline std::vector<ScoreResult> score_all(const std::vector<NormalizedDetection>& nd,
                                          const std::array<FactorModel, 3>& models) {
    size_t n_apps = 0;
    for (const auto& d : nd) n_apps = std::max(n_apps, static_cast<size_t>(d.app_idx) + 1);
    std::vector<ScoreResult> out(n_apps);
    for (const auto& d : nd) out[d.app_idx].app_id = d.app_id;

    auto w = detail::loading_maps(models);
    std::set<std::tuple<int, size_t, std::string>> seen;
    for (const auto& d : nd) {
        size_t m = static_cast<size_t>(d.category);
        auto it = w[m].find(d.engine_id);
        if (it == w[m].end()) continue;
        if (seen.emplace(d.app_idx, m, d.engine_id).second) out[d.app_idx].z[m] += it->second;
    }
    for (auto& r : out)
        for (size_t m = 0; m < 3; ++m) r.p[m] = logistic(r.z[m]);
    return out;
}

/// Score one app; an app absent from the detections has all-zero indicators,
/// hence z = 0 and p = 0.5 in every category.
inline ScoreResult score_app(const std::string& app_id,
                             const std::vector<NormalizedDetection>& nd,
                             const std::array<FactorModel, 3>& models) {
    ScoreResult r;
    r.app_id = app_id;
    auto w = detail::loading_maps(models);
    std::set<std::pair<size_t, std::string>> seen;
    for (const auto& d : nd) {
        if (d.app_id != app_id) continue;
        size_t m = static_cast<size_t>(d.category);
        auto it = w[m].find(d.engine_id);
        if (it == w[m].end()) continue;
        if (seen.emplace(m, d.engine_id).second) r.z[m] += it->second;
    }
    for (size_t m = 0; m < 3; ++m) r.p[m] = logistic(r.z[m]);
    return r;
}

// --- model serialization -------------------------------------------------------

inline nlohmann::json model_to_json(const FactorModel& model) {
    return {{"toolkit_version", kVersion},
            {"category", model.category},
            {"standardized", model.standardized},
            {"n_samples", model.n_samples},
            {"engines", model.engine_ids},
            {"loadings", model.loadings},
            {"unique_variances", model.unique_variances},
            {"fit_residual", model.fit_residual},
            {"iterations", model.iterations},
            {"warnings", model.warnings}};
}

inline FactorModel model_from_json(const nlohmann::json& j) {
    FactorModel model;
    try {
        model.category = j.at("category").get<std::string>();
        model.standardized = j.at("standardized").get<bool>();
        model.n_samples = j.value("n_samples", std::size_t{0});
        model.engine_ids = j.at("engines").get<std::vector<std::string>>();
        model.loadings = j.at("loadings").get<std::vector<double>>();
        model.unique_variances = j.at("unique_variances").get<std::vector<double>>();
        model.fit_residual = j.value("fit_residual", 0.0);
        model.iterations = j.value("iterations", std::size_t{0});
        if (j.contains("warnings"))
            model.warnings = j.at("warnings").get<std::vector<std::string>>();
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("malformed model JSON: ") + e.what());
    }
    if (model.loadings.size() != model.engine_ids.size() ||
        model.unique_variances.size() != model.engine_ids.size())
        throw ValidationError("model arrays have mismatched lengths");
    return model;
}

} // namespace avsig
