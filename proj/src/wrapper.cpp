#include "autostrat/wrapper.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "autostrat/error.hpp"
#include "autostrat/special.hpp"

namespace autostrat {

namespace {

// p-values this close are treated as tied so exact duplicates, which differ
// only by rounding, fall back to the name-order rule.
constexpr double kPTieTolerance = 1e-12;

}  // namespace

OlsFit ols_fit(const Eigen::MatrixXd& x, std::span<const double> y) {
    const Eigen::Index n = x.rows();
    const Eigen::Index p = x.cols();
    if (static_cast<Eigen::Index>(y.size()) != n) throw Error(ErrorCode::InvalidArgument, "ols_fit: y length mismatch");
    if (n <= p + 1) throw Error(ErrorCode::InsufficientRows, "ols_fit needs more rows than columns + 1");

    const Eigen::Index q = p + 1;
    Eigen::MatrixXd a(n, q);
    a.col(0).setOnes();
    a.rightCols(p) = x;
    const Eigen::Map<const Eigen::VectorXd> yv(y.data(), n);

    OlsFit fit;
    fit.residual_dof = static_cast<int>(n - p - 1);

    Eigen::VectorXd beta;
    Eigen::MatrixXd cov_unscaled;  // (A'A)^-1 or (A'A + lambda I)^-1
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
    if (qr.rank() == q) {
        beta = qr.solve(yv);
        // (A'A)^-1 = P R^-1 R^-T P'
        const Eigen::MatrixXd r = qr.matrixR().topLeftCorner(q, q).triangularView<Eigen::Upper>();
        const Eigen::MatrixXd rinv =
            r.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(q, q));
        const Eigen::MatrixXd inner = rinv * rinv.transpose();
        const auto perm = qr.colsPermutation();
        cov_unscaled = perm * inner * perm.transpose();
    } else {
        fit.regularized = true;
        const Eigen::MatrixXd ata = a.transpose() * a;
        const double lambda = 1e-8 * ata.trace() / static_cast<double>(q);
        // ridge as least squares on [A; sqrt(lambda) I] keeps the solve orthogonal
        Eigen::MatrixXd aug(n + q, q);
        aug.topRows(n) = a;
        aug.bottomRows(q) = std::sqrt(lambda) * Eigen::MatrixXd::Identity(q, q);
        Eigen::VectorXd yaug = Eigen::VectorXd::Zero(n + q);
        yaug.head(n) = yv;
        const Eigen::HouseholderQR<Eigen::MatrixXd> rqr(aug);
        beta = rqr.solve(yaug);
        cov_unscaled = (ata + lambda * Eigen::MatrixXd::Identity(q, q)).ldlt().solve(Eigen::MatrixXd::Identity(q, q));
    }

    const Eigen::VectorXd resid = yv - a * beta;
    const double rss = resid.squaredNorm();
    const double ybar = yv.mean();
    const double tss = (yv.array() - ybar).matrix().squaredNorm();
    fit.r_squared = tss > 0.0 ? 1.0 - rss / tss : 0.0;
    fit.sigma2 = rss / static_cast<double>(fit.residual_dof);

    auto se_of = [&](Eigen::Index i) { return std::sqrt(std::max(0.0, fit.sigma2 * cov_unscaled(i, i))); };
    fit.intercept = beta(0);
    fit.intercept_se = se_of(0);
    for (Eigen::Index j = 1; j < q; ++j) {
        const double b = beta(j);
        const double se = se_of(j);
        double t;
        if (se > 0.0) t = b / se;
        else t = b == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), b);
        fit.coefficients.push_back(b);
        fit.std_errors.push_back(se);
        fit.t_stats.push_back(t);
        fit.p_values.push_back(std::clamp(special::student_t_two_sided(t, fit.residual_dof), 0.0, 1.0));
    }
    return fit;
}

OlsFit ols_fit(const DesignMatrix& design, std::span<const double> y) {
    auto fit = ols_fit(design.x, y);
    fit.column_to_feature = design.column_feature;
    return fit;
}

std::vector<std::string> EliminationTrace::survivors_at(std::size_t k) const {
    if (k > candidates.size() || k < final_features.size())
        throw Error(ErrorCode::KTooLarge, "no survivor set of size " + std::to_string(k) + " in this trace");
    const std::size_t steps_taken = candidates.size() - k;
    std::vector<std::string> out = steps_taken == 0 ? candidates : steps[steps_taken - 1].survivors;
    std::sort(out.begin(), out.end());
    return out;
}

EliminationTrace backward_eliminate(const Dataset& d, const std::vector<std::string>& candidates, std::size_t k) {
    if (k < 1) throw Error(ErrorCode::InvalidArgument, "k must be at least 1");
    if (k > candidates.size())
        throw Error(ErrorCode::KTooLarge, "k=" + std::to_string(k) + " exceeds " + std::to_string(candidates.size()) +
                                              " candidate features");
    std::set<std::string> uniq(candidates.begin(), candidates.end());
    if (uniq.size() != candidates.size()) throw Error(ErrorCode::InvalidArgument, "duplicate candidate features");
    for (const auto& c : candidates) d.index_of(c);

    EliminationTrace trace;
    trace.candidates.assign(uniq.begin(), uniq.end());
    const std::vector<double> y(d.outcome().begin(), d.outcome().end());

    // Smallest column p-value per feature; a feature without columns (a
    // single-level nominal) carries no evidence and gets p = 1.
    auto feature_p = [&](const std::vector<std::string>& feats, bool& regularized) {
        const auto design = one_hot(d, feats);
        const auto fit = ols_fit(design, y);
        regularized = fit.regularized;
        std::vector<double> best(feats.size(), 1.0);
        for (std::size_t c = 0; c < fit.p_values.size(); ++c)
            best[design.column_feature[c]] = std::min(best[design.column_feature[c]], fit.p_values[c]);
        return best;
    };

    std::vector<std::string> survivors = trace.candidates;  // name-sorted
    while (survivors.size() > k) {
        bool regularized = false;
        const auto p = feature_p(survivors, regularized);
        std::size_t worst = 0;
        for (std::size_t i = 1; i < survivors.size(); ++i)
            if (p[i] >= p[worst] - kPTieTolerance) worst = i;  // later name wins ties
        EliminationStep step;
        step.dropped = survivors[worst];
        step.p_value = p[worst];
        step.regularized = regularized;
        survivors.erase(survivors.begin() + static_cast<std::ptrdiff_t>(worst));
        step.survivors = survivors;
        trace.steps.push_back(std::move(step));
    }

    bool regularized = false;
    const auto p = feature_p(survivors, regularized);
    std::vector<std::size_t> order(survivors.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return p[a] < p[b]; });
    for (auto i : order) {
        trace.final_features.push_back(survivors[i]);
        trace.final_p_values.push_back(p[i]);
    }
    return trace;
}

nlohmann::json to_json(const OlsFit& fit) {
    return {{"intercept", fit.intercept},       {"intercept_se", fit.intercept_se}, {"coefficients", fit.coefficients},
            {"std_errors", fit.std_errors},     {"t_stats", fit.t_stats},           {"p_values", fit.p_values},
            {"r_squared", fit.r_squared},       {"sigma2", fit.sigma2},             {"residual_dof", fit.residual_dof},
            {"regularized", fit.regularized}};
}

nlohmann::json to_json(const EliminationTrace& trace) {
    nlohmann::json steps = nlohmann::json::array();
    for (const auto& s : trace.steps)
        steps.push_back({{"dropped", s.dropped},
                         {"p_value", s.p_value},
                         {"regularized", s.regularized},
                         {"survivors", s.survivors}});
    return {{"candidates", trace.candidates},
            {"steps", steps},
            {"final", trace.final_features},
            {"final_p_values", trace.final_p_values}};
}

}  // namespace autostrat
