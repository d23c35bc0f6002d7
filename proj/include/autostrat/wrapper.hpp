#pragma once

#include <span>
#include <string>
#include <vector>

#include "autostrat/tabular.hpp"
#include "json.hpp"

namespace autostrat {

/// Ordinary least squares with an implicit intercept. Per-column vectors
/// cover the design columns only; the intercept is reported separately.
struct OlsFit {
    double intercept = 0.0;
    double intercept_se = 0.0;
    std::vector<double> coefficients;
    std::vector<double> std_errors;
    std::vector<double> t_stats;
    std::vector<double> p_values;
    double r_squared = 0.0;
    double sigma2 = 0.0;
    int residual_dof = 0;
    bool regularized = false;  // design was rank deficient; ridge jitter applied
    std::vector<std::size_t> column_to_feature;
};

/// Fits y on [1, X] through a column-pivoted Householder QR. When X is rank
/// deficient, refits with ridge lambda = 1e-8 * trace(X'X)/p and marks the
/// fit regularized. Throws InsufficientRows unless rows > columns + 1.
OlsFit ols_fit(const Eigen::MatrixXd& x, std::span<const double> y);
OlsFit ols_fit(const DesignMatrix& design, std::span<const double> y);

struct EliminationStep {
    std::string dropped;
    double p_value = 1.0;  // the dropped feature's best (smallest) column p-value
    bool regularized = false;
    std::vector<std::string> survivors;
};

struct EliminationTrace {
    std::vector<std::string> candidates;
    std::vector<EliminationStep> steps;
    std::vector<std::string> final_features;  // most significant first
    std::vector<double> final_p_values;

    /// Survivor set when `k` features remain (k between final size and the
    /// candidate count), name-sorted.
    std::vector<std::string> survivors_at(std::size_t k) const;
};

/// Backward elimination on the linear probability model: refit OLS on the
/// one-hot encoded survivors and drop the feature whose smallest column
/// p-value is largest, until `k` remain. Ties drop the name-later feature.
EliminationTrace backward_eliminate(const Dataset& d, const std::vector<std::string>& candidates, std::size_t k);

nlohmann::json to_json(const OlsFit& fit);
nlohmann::json to_json(const EliminationTrace& trace);

}  // namespace autostrat
