#include "autostrat/filters.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>

#include "autostrat/error.hpp"
#include "autostrat/special.hpp"

namespace autostrat {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<double> as_reals(std::span<const std::uint8_t> y) { return {y.begin(), y.end()}; }

double entropy(const std::vector<double>& counts, double n) {
    double h = 0.0;
    for (double c : counts)
        if (c > 0.0) h -= (c / n) * std::log(c / n);
    return h;
}

}  // namespace

std::optional<double> pearson(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw Error(ErrorCode::InvalidArgument, "pearson: vectors differ in length");
    if (x.size() < 2) throw Error(ErrorCode::InvalidArgument, "pearson: need at least two points");
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx <= 0.0 || syy <= 0.0) return std::nullopt;
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::optional<double> feature_outcome_corr(std::span<const double> x, std::span<const std::uint8_t> y) {
    const auto yr = as_reals(y);
    return pearson(x, yr);
}

double vif_among(const Dataset& d, std::size_t target, std::span<const std::size_t> others) {
    const auto n = static_cast<Eigen::Index>(d.n_rows());
    const auto p = static_cast<Eigen::Index>(others.size());
    if (p < 1) throw Error(ErrorCode::InsufficientRows, "VIF needs at least two continuous features");
    if (n <= p + 1) throw Error(ErrorCode::InsufficientRows, "VIF needs more rows than continuous features");

    Eigen::VectorXd t(n);
    const auto& tc = d.column(target);
    for (Eigen::Index i = 0; i < n; ++i) t(i) = tc.values[static_cast<std::size_t>(i)];
    t.array() -= t.mean();
    const double tss = t.squaredNorm();
    if (tss <= 0.0) return kInf;

    Eigen::MatrixXd x(n, p);
    for (Eigen::Index j = 0; j < p; ++j) {
        const auto& c = d.column(others[static_cast<std::size_t>(j)]);
        for (Eigen::Index i = 0; i < n; ++i) x(i, j) = c.values[static_cast<std::size_t>(i)];
        x.col(j).array() -= x.col(j).mean();
    }
    const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
    const Eigen::VectorXd beta = qr.solve(t);
    const double rss = (t - x * beta).squaredNorm();
    if (rss <= 1e-13 * tss) return kInf;
    return tss / rss;  // 1 / (1 - R^2)
}

double vif(const Dataset& d, std::string_view feature) {
    const auto target = d.index_of(feature);
    if (d.column(target).kind != FeatureKind::Continuous)
        throw Error(ErrorCode::InvalidArgument, "VIF is defined for continuous features only");
    std::vector<std::size_t> others;
    std::size_t n_cont = 0;
    for (std::size_t j = 0; j < d.n_features(); ++j) {
        if (d.column(j).kind != FeatureKind::Continuous) continue;
        ++n_cont;
        if (j != target) others.push_back(j);
    }
    if (n_cont < 2) throw Error(ErrorCode::InsufficientRows, "VIF needs at least two continuous features");
    if (d.n_rows() <= n_cont) throw Error(ErrorCode::InsufficientRows, "VIF needs more rows than continuous features");
    return vif_among(d, target, others);
}

ContingencyTable crosstab(std::span<const std::int32_t> a, std::span<const std::int32_t> b) {
    if (a.size() != b.size()) throw Error(ErrorCode::InvalidArgument, "crosstab: vectors differ in length");
    std::int32_t ra = 0, rb = 0;
    for (auto v : a) ra = std::max(ra, v + 1);
    for (auto v : b) rb = std::max(rb, v + 1);
    ContingencyTable t(static_cast<std::size_t>(ra), std::vector<double>(static_cast<std::size_t>(rb), 0.0));
    for (std::size_t i = 0; i < a.size(); ++i) t[static_cast<std::size_t>(a[i])][static_cast<std::size_t>(b[i])] += 1.0;
    return t;
}

ChiSquareResult chi_square(const ContingencyTable& table) {
    const std::size_t r0 = table.size();
    const std::size_t c0 = r0 ? table[0].size() : 0;
    std::vector<double> row(r0, 0.0), col(c0, 0.0);
    double n = 0.0;
    for (std::size_t i = 0; i < r0; ++i) {
        if (table[i].size() != c0) throw Error(ErrorCode::InvalidArgument, "ragged contingency table");
        for (std::size_t j = 0; j < c0; ++j) {
            if (table[i][j] < 0.0) throw Error(ErrorCode::InvalidArgument, "negative contingency count");
            row[i] += table[i][j];
            col[j] += table[i][j];
            n += table[i][j];
        }
    }
    std::vector<std::size_t> rows, cols;
    for (std::size_t i = 0; i < r0; ++i)
        if (row[i] > 0.0) rows.push_back(i);
    for (std::size_t j = 0; j < c0; ++j)
        if (col[j] > 0.0) cols.push_back(j);
    if (rows.size() < 2 || cols.size() < 2)
        throw Error(ErrorCode::DegenerateTable, "contingency table has fewer than two non-empty rows or columns");

    ChiSquareResult res;
    res.n = n;
    res.rows = static_cast<int>(rows.size());
    res.cols = static_cast<int>(cols.size());
    for (auto i : rows)
        for (auto j : cols) {
            const double e = row[i] * col[j] / n;
            const double diff = table[i][j] - e;
            res.chi2 += diff * diff / e;
        }
    res.dof = (res.rows - 1) * (res.cols - 1);
    res.p_value = special::chi2_sf(res.chi2, res.dof);
    return res;
}

ChiSquareResult chi_square(std::span<const std::int32_t> a, std::span<const std::int32_t> b) {
    return chi_square(crosstab(a, b));
}

double cramers_v(const ChiSquareResult& chi) {
    const int k = std::min(chi.rows, chi.cols) - 1;
    if (k < 1 || chi.n <= 0.0) return 0.0;
    return std::min(1.0, std::sqrt(chi.chi2 / (chi.n * k)));
}

double cramers_v(std::span<const std::int32_t> a, std::span<const std::int32_t> b) {
    return cramers_v(chi_square(a, b));
}

double mutual_information(const ContingencyTable& joint, bool normalized) {
    const std::size_t r = joint.size();
    const std::size_t c = r ? joint[0].size() : 0;
    std::vector<double> row(r, 0.0), col(c, 0.0);
    double n = 0.0;
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) {
            row[i] += joint[i][j];
            col[j] += joint[i][j];
            n += joint[i][j];
        }
    if (n <= 0.0) return 0.0;
    double mi = 0.0;
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) {
            const double nij = joint[i][j];
            if (nij > 0.0) mi += (nij / n) * std::log(nij * n / (row[i] * col[j]));
        }
    mi = std::max(mi, 0.0);
    if (!normalized) return mi;
    const double hf = entropy(row, n);
    const double hy = entropy(col, n);
    if (hf <= 0.0 || hy <= 0.0) return 0.0;
    return std::clamp(2.0 * mi / (hf + hy), 0.0, 1.0);
}

double mutual_information(std::span<const std::int32_t> f, std::span<const std::uint8_t> y, bool normalized) {
    if (f.size() != y.size()) throw Error(ErrorCode::InvalidArgument, "mutual_information: length mismatch");
    std::vector<std::int32_t> yc(y.begin(), y.end());
    return mutual_information(crosstab(f, yc), normalized);
}

// ---------------------------------------------------------------------------

void FilterThresholds::validate() const {
    auto open01 = [](double v) { return v > 0.0 && v < 1.0; };
    if (!open01(rho_max)) throw Error(ErrorCode::InvalidConfig, "rho_max must be in (0,1)");
    if (!(vif_max > 0.0)) throw Error(ErrorCode::InvalidConfig, "vif_max must be positive");
    if (!open01(chi2_alpha)) throw Error(ErrorCode::InvalidConfig, "chi2_alpha must be in (0,1)");
    if (!open01(cramers_v_max)) throw Error(ErrorCode::InvalidConfig, "cramers_v_max must be in (0,1)");
}

FilterThresholds FilterThresholds::from_json(const nlohmann::json& j) {
    FilterThresholds t;
    t.rho_max = j.value("rho_max", t.rho_max);
    t.vif_max = j.value("vif_max", t.vif_max);
    t.chi2_alpha = j.value("chi2_alpha", t.chi2_alpha);
    t.cramers_v_max = j.value("cramers_v_max", t.cramers_v_max);
    t.normalized_mi = j.value("normalized_mi", t.normalized_mi);
    t.validate();
    return t;
}

nlohmann::json FilterThresholds::to_json() const {
    return {{"rho_max", rho_max},
            {"vif_max", vif_max},
            {"chi2_alpha", chi2_alpha},
            {"cramers_v_max", cramers_v_max},
            {"normalized_mi", normalized_mi}};
}

std::vector<std::string> FilterDiagnostics::kept() const {
    std::vector<std::string> out = kept_continuous;
    out.insert(out.end(), kept_categorical.begin(), kept_categorical.end());
    std::sort(out.begin(), out.end());
    return out;
}

FilterDiagnostics filter_select(const Dataset& d, const FilterThresholds& t) {
    t.validate();
    FilterDiagnostics diag;

    // Feature indices by kind, sorted by name so nothing depends on column order.
    std::vector<std::size_t> cont, cat;
    for (std::size_t j = 0; j < d.n_features(); ++j)
        (d.column(j).kind == FeatureKind::Continuous ? cont : cat).push_back(j);
    auto by_name = [&](std::size_t a, std::size_t b) { return d.column(a).name < d.column(b).name; };
    std::sort(cont.begin(), cont.end(), by_name);
    std::sort(cat.begin(), cat.end(), by_name);

    std::set<std::size_t> dropped;
    auto drop = [&](std::size_t j, std::string reason) {
        dropped.insert(j);
        diag.dropped.push_back({d.column(j).name, std::move(reason)});
    };
    auto fmt = [](double v) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.6g", v);
        return std::string(buf);
    };

    // --- continuous: pairwise correlation ---
    std::map<std::size_t, double> outcome_corr;
    for (auto j : cont) outcome_corr[j] = std::fabs(feature_outcome_corr(d.column(j).values, d.outcome()).value_or(0.0));

    struct Pair {
        std::size_t a, b;
        double strength;
    };
    std::vector<Pair> strong;
    for (std::size_t i = 0; i < cont.size(); ++i)
        for (std::size_t k = i + 1; k < cont.size(); ++k) {
            const auto a = cont[i], b = cont[k];
            const auto rho = pearson(d.column(a).values, d.column(b).values);
            diag.pearson_pairs.push_back({d.column(a).name, d.column(b).name, rho});
            if (rho && std::fabs(*rho) > t.rho_max) strong.push_back({a, b, std::fabs(*rho)});
        }
    // `strong` is already in name order; a stable sort keeps that as the tie-break.
    std::stable_sort(strong.begin(), strong.end(), [](const Pair& x, const Pair& y) { return x.strength > y.strength; });
    for (const auto& pr : strong) {
        if (dropped.count(pr.a) || dropped.count(pr.b)) continue;
        // pr.a precedes pr.b by name; on equal outcome correlation pr.a survives
        const bool drop_a = outcome_corr[pr.a] < outcome_corr[pr.b];
        const auto loser = drop_a ? pr.a : pr.b;
        const auto winner = drop_a ? pr.b : pr.a;
        drop(loser, "pearson |rho|=" + fmt(pr.strength) + " with " + d.column(winner).name +
                        "; weaker outcome correlation");
    }

    // --- continuous: iterative VIF elimination ---
    std::vector<std::size_t> alive;
    for (auto j : cont)
        if (!dropped.count(j)) alive.push_back(j);
    for (int round = 0; alive.size() >= 2; ++round) {
        if (d.n_rows() <= alive.size())
            throw Error(ErrorCode::InsufficientRows, "VIF needs more rows than continuous features");
        std::size_t worst = 0;
        double worst_vif = -1.0;
        for (std::size_t i = 0; i < alive.size(); ++i) {
            std::vector<std::size_t> others;
            for (std::size_t k = 0; k < alive.size(); ++k)
                if (k != i) others.push_back(alive[k]);
            const double v = vif_among(d, alive[i], others);
            diag.vif_values.push_back({d.column(alive[i]).name, v, round});
            // >= so that among tied maxima the name-later feature is removed
            if (v >= worst_vif) {
                worst_vif = v;
                worst = i;
            }
        }
        if (!(worst_vif > t.vif_max)) break;
        drop(alive[worst], "vif=" + (std::isinf(worst_vif) ? std::string("inf") : fmt(worst_vif)) + " > " +
                               fmt(t.vif_max));
        alive.erase(alive.begin() + static_cast<std::ptrdiff_t>(worst));
    }
    for (auto j : alive) diag.kept_continuous.push_back(d.column(j).name);

    // --- categorical: chi-square significance and Cramer's V strength ---
    std::map<std::size_t, double> mi;
    for (auto j : cat) {
        mi[j] = mutual_information(d.column(j).codes, d.outcome(), t.normalized_mi);
        diag.mi_values.push_back({d.column(j).name, mi[j]});
    }
    std::vector<Pair> assoc;
    for (std::size_t i = 0; i < cat.size(); ++i)
        for (std::size_t k = i + 1; k < cat.size(); ++k) {
            const auto a = cat[i], b = cat[k];
            ChiSquareResult chi;
            try {
                chi = chi_square(d.column(a).codes, d.column(b).codes);
            } catch (const Error& e) {
                if (e.code() == ErrorCode::DegenerateTable) continue;
                throw;
            }
            const double v = cramers_v(chi);
            diag.chi2_pairs.push_back({d.column(a).name, d.column(b).name, chi});
            diag.cramers_pairs.push_back({d.column(a).name, d.column(b).name, v});
            if (chi.p_value < t.chi2_alpha && v > t.cramers_v_max) assoc.push_back({a, b, v});
        }
    std::stable_sort(assoc.begin(), assoc.end(), [](const Pair& x, const Pair& y) { return x.strength > y.strength; });
    for (const auto& pr : assoc) {
        if (dropped.count(pr.a) || dropped.count(pr.b)) continue;
        const bool drop_a = mi[pr.a] < mi[pr.b];
        const auto loser = drop_a ? pr.a : pr.b;
        const auto winner = drop_a ? pr.b : pr.a;
        drop(loser, "cramers_v=" + fmt(pr.strength) + " with " + d.column(winner).name +
                        "; lower mutual information with outcome");
    }
    for (auto j : cat)
        if (!dropped.count(j)) diag.kept_categorical.push_back(d.column(j).name);
    return diag;
}

nlohmann::json to_json(const FilterDiagnostics& diag) {
    using nlohmann::json;
    json pp = json::array(), vv = json::array(), cc = json::array(), cv = json::array(), mm = json::array(),
         dd = json::array();
    for (const auto& p : diag.pearson_pairs)
        pp.push_back({{"a", p.a}, {"b", p.b}, {"rho", p.rho ? json(*p.rho) : json(nullptr)}, {"defined", p.rho.has_value()}});
    for (const auto& v : diag.vif_values) vv.push_back({{"feature", v.feature}, {"vif", v.vif}, {"round", v.round}});
    for (const auto& c : diag.chi2_pairs)
        cc.push_back({{"a", c.a}, {"b", c.b}, {"chi2", c.chi.chi2}, {"dof", c.chi.dof}, {"p_value", c.chi.p_value}});
    for (const auto& c : diag.cramers_pairs) cv.push_back({{"a", c.a}, {"b", c.b}, {"cramers_v", c.v}});
    for (const auto& m : diag.mi_values) mm.push_back({{"feature", m.feature}, {"mi", m.mi}});
    for (const auto& r : diag.dropped) dd.push_back({{"feature", r.feature}, {"reason", r.reason}});
    return {{"pearson_pairs", pp},     {"vif_values", vv}, {"chi2_pairs", cc},
            {"cramers_pairs", cv},     {"mi_values", mm},  {"dropped", dd},
            {"kept_continuous", diag.kept_continuous}, {"kept_categorical", diag.kept_categorical}};
}

}  // namespace autostrat
