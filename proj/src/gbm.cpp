#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "autostrat/embedded.hpp"
#include "autostrat/error.hpp"
#include "autostrat/random.hpp"

namespace autostrat {

namespace {

double sigmoid(double m) { return 1.0 / (1.0 + std::exp(-m)); }

// Per encoded column: split edges (value <= edges[b] lies in bin <= b) and the
// bin index of every row.
struct BinnedColumn {
    std::vector<double> edges;
    std::vector<std::uint16_t> bins;
    std::size_t n_bins() const { return edges.size() + 1; }
};

BinnedColumn bin_column(const std::vector<double>& values, const std::vector<std::size_t>& train_rows, int max_bins) {
    std::vector<double> v;
    v.reserve(train_rows.size());
    for (auto i : train_rows) v.push_back(values[i]);
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());

    BinnedColumn bc;
    if (v.size() <= static_cast<std::size_t>(max_bins)) {
        bc.edges.assign(v.begin(), v.empty() ? v.end() : v.end() - 1);
    } else {
        // distinct values at evenly spaced ranks
        for (int b = 1; b < max_bins; ++b) {
            const auto idx = static_cast<std::size_t>(b) * v.size() / static_cast<std::size_t>(max_bins);
            const double e = v[idx - 1];
            if (bc.edges.empty() || e > bc.edges.back()) bc.edges.push_back(e);
        }
    }
    bc.bins.resize(values.size());
    for (std::size_t i = 0; i < values.size(); ++i)
        bc.bins[i] = static_cast<std::uint16_t>(std::lower_bound(bc.edges.begin(), bc.edges.end(), values[i]) -
                                                bc.edges.begin());
    return bc;
}

std::vector<EncodedColumn> fit_encoding(const Dataset& d, const std::vector<std::size_t>& train_rows,
                                        const GbmConfig& cfg) {
    double prior = 0.0;
    for (auto i : train_rows) prior += d.outcome()[i];
    prior /= static_cast<double>(train_rows.size());

    std::vector<EncodedColumn> enc;
    for (std::size_t j = 0; j < d.n_features(); ++j) {
        const auto& c = d.column(j);
        if (c.kind != FeatureKind::Nominal) {
            enc.push_back({c.name, j, EncodedColumn::Kind::Raw, 0, {}, 0.0});
        } else if (cfg.preset == GbmPreset::A) {
            for (std::size_t l = 0; l < c.arity(); ++l)
                enc.push_back({c.name + "=" + c.levels[l], j, EncodedColumn::Kind::Indicator,
                               static_cast<std::int32_t>(l), {}, 0.0});
        } else {
            std::vector<double> sum(c.arity(), 0.0), cnt(c.arity(), 0.0);
            for (auto i : train_rows) {
                sum[static_cast<std::size_t>(c.codes[i])] += d.outcome()[i];
                cnt[static_cast<std::size_t>(c.codes[i])] += 1.0;
            }
            EncodedColumn e{c.name, j, EncodedColumn::Kind::TargetStat, 0, {}, prior};
            for (std::size_t l = 0; l < c.arity(); ++l)
                e.level_values.push_back((sum[l] + cfg.prior_weight * prior) / (cnt[l] + cfg.prior_weight));
            enc.push_back(std::move(e));
        }
    }
    return enc;
}

double encoded_value(const EncodedColumn& e, const Column& c, std::size_t row) {
    switch (e.kind) {
        case EncodedColumn::Kind::Raw: return c.numeric(row);
        case EncodedColumn::Kind::Indicator: return c.codes[row] == e.level ? 1.0 : 0.0;
        case EncodedColumn::Kind::TargetStat: {
            const auto code = static_cast<std::size_t>(c.codes[row]);
            return code < e.level_values.size() ? e.level_values[code] : e.unseen_value;
        }
    }
    return 0.0;
}

double tree_output(const Tree& t, const std::vector<std::vector<double>>& cols, std::size_t row) {
    int n = 0;
    while (t.nodes[static_cast<std::size_t>(n)].column >= 0) {
        const auto& node = t.nodes[static_cast<std::size_t>(n)];
        n = cols[static_cast<std::size_t>(node.column)][row] <= node.threshold ? node.left : node.right;
    }
    return t.nodes[static_cast<std::size_t>(n)].value;
}

}  // namespace

GbmConfig GbmConfig::preset_a(std::uint64_t seed) {
    GbmConfig c;
    c.preset = GbmPreset::A;
    c.subsample = 1.0;
    c.seed = seed;
    return c;
}

GbmConfig GbmConfig::preset_b(std::uint64_t seed) {
    GbmConfig c;
    c.preset = GbmPreset::B;
    c.subsample = 0.8;
    c.seed = seed;
    return c;
}

void GbmConfig::validate() const {
    if (n_trees < 0) throw Error(ErrorCode::InvalidConfig, "n_trees must be >= 0");
    if (max_depth < 1) throw Error(ErrorCode::InvalidConfig, "max_depth must be >= 1");
    if (!(learning_rate > 0.0 && learning_rate <= 1.0)) throw Error(ErrorCode::InvalidConfig, "learning_rate must be in (0,1]");
    if (!(min_child_weight >= 0.0)) throw Error(ErrorCode::InvalidConfig, "min_child_weight must be >= 0");
    if (!(l2_reg >= 0.0)) throw Error(ErrorCode::InvalidConfig, "l2_reg must be >= 0");
    if (!(subsample > 0.0 && subsample <= 1.0)) throw Error(ErrorCode::InvalidConfig, "subsample must be in (0,1]");
    if (!(holdout_fraction >= 0.0 && holdout_fraction < 1.0))
        throw Error(ErrorCode::InvalidConfig, "holdout_fraction must be in [0,1)");
    if (!(prior_weight >= 0.0)) throw Error(ErrorCode::InvalidConfig, "prior_weight must be >= 0");
    if (max_bins < 2 || max_bins > 65535) throw Error(ErrorCode::InvalidConfig, "max_bins must be in [2, 65535]");
}

GbmConfig GbmConfig::from_json(const nlohmann::json& j, GbmConfig base) {
    try {
        if (j.contains("preset")) {
            const auto p = j.at("preset").get<std::string>();
            if (p == "A") base.preset = GbmPreset::A;
            else if (p == "B") base.preset = GbmPreset::B;
            else throw Error(ErrorCode::InvalidConfig, "unknown GBM preset '" + p + "'");
        }
        base.n_trees = j.value("n_trees", base.n_trees);
        base.max_depth = j.value("max_depth", base.max_depth);
        base.learning_rate = j.value("learning_rate", base.learning_rate);
        base.min_child_weight = j.value("min_child_weight", base.min_child_weight);
        base.l2_reg = j.value("l2_reg", base.l2_reg);
        base.subsample = j.value("subsample", base.subsample);
        base.seed = j.value("seed", base.seed);
        base.holdout_fraction = j.value("holdout_fraction", base.holdout_fraction);
        base.prior_weight = j.value("prior_weight", base.prior_weight);
        base.max_bins = j.value("max_bins", base.max_bins);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::InvalidConfig, std::string("malformed GBM config: ") + e.what());
    }
    base.validate();
    return base;
}

nlohmann::json GbmConfig::to_json() const {
    return {{"preset", preset == GbmPreset::A ? "A" : "B"},
            {"n_trees", n_trees},
            {"max_depth", max_depth},
            {"learning_rate", learning_rate},
            {"min_child_weight", min_child_weight},
            {"l2_reg", l2_reg},
            {"subsample", subsample},
            {"seed", seed},
            {"holdout_fraction", holdout_fraction},
            {"prior_weight", prior_weight},
            {"max_bins", max_bins}};
}

std::vector<double> GbmModel::predict_proba(const Dataset& d) const {
    std::vector<std::size_t> src;
    for (const auto& f : feature_names_) src.push_back(d.index_of(f));
    std::vector<std::vector<double>> cols(encoding_.size(), std::vector<double>(d.n_rows()));
    for (std::size_t c = 0; c < encoding_.size(); ++c) {
        const auto& col = d.column(src[encoding_[c].source]);
        for (std::size_t i = 0; i < d.n_rows(); ++i) cols[c][i] = encoded_value(encoding_[c], col, i);
    }
    std::vector<double> out(d.n_rows());
    for (std::size_t i = 0; i < d.n_rows(); ++i) {
        double m = base_margin_;
        for (const auto& t : trees_) m += tree_output(t, cols, i);
        out[i] = sigmoid(m);
    }
    return out;
}

struct GbmTrainer {
    static TrainedGbm run(const Dataset& d, const GbmConfig& cfg);
};

TrainedGbm GbmTrainer::run(const Dataset& d, const GbmConfig& cfg) {
    cfg.validate();
    const std::size_t n = d.n_rows();
    const auto y = d.outcome();
    const auto positives = static_cast<std::size_t>(std::count(y.begin(), y.end(), std::uint8_t{1}));
    if (positives == 0 || positives == n) throw Error(ErrorCode::SingleClassOutcome, "outcome has a single class");

    // seeded holdout split
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    Rng split_rng(derive_seed(cfg.seed, {0x5b1f}));
    split_rng.shuffle(perm);
    const auto n_hold = static_cast<std::size_t>(std::floor(cfg.holdout_fraction * static_cast<double>(n)));
    std::vector<std::size_t> hold(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_hold));
    std::vector<std::size_t> train(perm.begin() + static_cast<std::ptrdiff_t>(n_hold), perm.end());
    std::sort(hold.begin(), hold.end());
    std::sort(train.begin(), train.end());
    {
        std::size_t tp = 0;
        for (auto i : train) tp += y[i];
        if (tp == 0 || tp == train.size())
            throw Error(ErrorCode::SingleClassOutcome, "training split has a single outcome class");
    }

    TrainedGbm result;
    GbmModel& model = result.model;
    model.preset_ = cfg.preset;
    model.feature_names_ = d.feature_names();
    model.encoding_ = fit_encoding(d, train, cfg);

    const std::size_t n_cols = model.encoding_.size();
    std::vector<std::vector<double>> cols(n_cols, std::vector<double>(n));
    std::vector<BinnedColumn> binned;
    binned.reserve(n_cols);
    for (std::size_t c = 0; c < n_cols; ++c) {
        const auto& col = d.column(model.encoding_[c].source);
        for (std::size_t i = 0; i < n; ++i) cols[c][i] = encoded_value(model.encoding_[c], col, i);
        binned.push_back(bin_column(cols[c], train, cfg.max_bins));
    }

    double prior = 0.0;
    for (auto i : train) prior += y[i];
    prior /= static_cast<double>(train.size());
    model.base_margin_ = std::log(prior / (1.0 - prior));

    std::vector<double> margin(n, model.base_margin_);
    std::vector<double> grad(n, 0.0), hess(n, 0.0);
    const double lambda = cfg.l2_reg;
    auto leaf_weight = [&](double g, double h) { return -g / (h + lambda); };
    auto score = [&](double g, double h) { return g * g / (h + lambda); };

    std::vector<double> hist_g, hist_h;
    for (int t = 0; t < cfg.n_trees; ++t) {
        for (auto i : train) {
            const double p = sigmoid(margin[i]);
            grad[i] = p - y[i];
            hess[i] = std::max(p * (1.0 - p), 1e-16);
        }
        std::vector<std::size_t> rows = train;
        if (cfg.subsample < 1.0) {
            Rng rng(derive_seed(cfg.seed, {0x7ee, static_cast<std::uint64_t>(t)}));
            const auto keep = std::max<std::size_t>(
                1, static_cast<std::size_t>(std::floor(cfg.subsample * static_cast<double>(rows.size()))));
            for (std::size_t i = 0; i < keep; ++i) {
                const auto j = i + static_cast<std::size_t>(rng.below(rows.size() - i));
                std::swap(rows[i], rows[j]);
            }
            rows.resize(keep);
            std::sort(rows.begin(), rows.end());
        }

        Tree tree;
        struct Pending {
            int node;
            int depth;
            std::vector<std::size_t> rows;
        };
        std::vector<Pending> level{{0, 0, std::move(rows)}};
        tree.nodes.emplace_back();
        while (!level.empty()) {
            std::vector<Pending> next;
            for (auto& pend : level) {
                double g = 0.0, h = 0.0;
                for (auto i : pend.rows) {
                    g += grad[i];
                    h += hess[i];
                }
                auto& node0 = tree.nodes[static_cast<std::size_t>(pend.node)];
                node0.cover = h;
                node0.value = cfg.learning_rate * leaf_weight(g, h);
                if (pend.depth >= cfg.max_depth || pend.rows.size() < 2) continue;

                const double parent = score(g, h);
                double best_gain = 0.0;
                int best_col = -1;
                std::size_t best_bin = 0;
                for (std::size_t c = 0; c < n_cols; ++c) {
                    const auto& bc = binned[c];
                    const std::size_t nb = bc.n_bins();
                    if (nb < 2) continue;
                    hist_g.assign(nb, 0.0);
                    hist_h.assign(nb, 0.0);
                    for (auto i : pend.rows) {
                        hist_g[bc.bins[i]] += grad[i];
                        hist_h[bc.bins[i]] += hess[i];
                    }
                    double gl = 0.0, hl = 0.0;
                    for (std::size_t b = 0; b + 1 < nb; ++b) {
                        gl += hist_g[b];
                        hl += hist_h[b];
                        const double gr = g - gl;
                        const double hr = h - hl;
                        if (hl < cfg.min_child_weight || hr < cfg.min_child_weight) continue;
                        if (hl <= 0.0 || hr <= 0.0) continue;
                        const double gain = 0.5 * (score(gl, hl) + score(gr, hr) - parent);
                        if (gain > best_gain) {
                            best_gain = gain;
                            best_col = static_cast<int>(c);
                            best_bin = b;
                        }
                    }
                }
                if (best_col < 0) continue;

                const auto& bc = binned[static_cast<std::size_t>(best_col)];
                std::vector<std::size_t> lrows, rrows;
                for (auto i : pend.rows) (bc.bins[i] <= best_bin ? lrows : rrows).push_back(i);
                if (lrows.empty() || rrows.empty()) continue;

                const int left = static_cast<int>(tree.nodes.size());
                tree.nodes.emplace_back();
                tree.nodes.emplace_back();
                auto& node = tree.nodes[static_cast<std::size_t>(pend.node)];
                node.column = best_col;
                node.threshold = bc.edges[best_bin];
                node.left = left;
                node.right = left + 1;
                node.gain = best_gain;
                model.total_gain_ += best_gain;
                next.push_back({left, pend.depth + 1, std::move(lrows)});
                next.push_back({left + 1, pend.depth + 1, std::move(rrows)});
            }
            level = std::move(next);
        }
        for (std::size_t i = 0; i < n; ++i) margin[i] += tree_output(tree, cols, i);
        model.trees_.push_back(std::move(tree));
    }

    std::vector<double> proba;
    std::vector<std::uint8_t> yh;
    for (auto i : hold) {
        proba.push_back(sigmoid(margin[i]));
        yh.push_back(y[i]);
    }
    result.metrics = evaluate(proba, yh);
    result.metrics.holdout_fraction = cfg.holdout_fraction;
    result.metrics.seed = cfg.seed;
    result.metrics.n_train = train.size();
    result.metrics.n_holdout = hold.size();
    return result;
}

TrainedGbm gbm_train(const Dataset& d, const GbmConfig& cfg) { return GbmTrainer::run(d, cfg); }

FeatureRanking extract_importance(const GbmModel& model) {
    FeatureRanking r;
    r.source = model.preset() == GbmPreset::A ? RankingSource::PresetA : RankingSource::PresetB;
    r.features = model.feature_names();
    r.scores.assign(r.features.size(), 0.0);
    for (const auto& t : model.trees())
        for (const auto& node : t.nodes)
            if (node.column >= 0) r.scores[model.encoding()[static_cast<std::size_t>(node.column)].source] += node.gain;
    return r;
}

FitMetrics evaluate(std::span<const double> proba, std::span<const std::uint8_t> y) {
    if (proba.size() != y.size()) throw Error(ErrorCode::InvalidArgument, "evaluate: length mismatch");
    FitMetrics m;
    if (y.empty()) return m;
    double tp = 0, fp = 0, fn = 0, correct = 0, ll = 0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const bool pred = proba[i] >= 0.5;
        const bool truth = y[i] == 1;
        if (pred && truth) ++tp;
        if (pred && !truth) ++fp;
        if (!pred && truth) ++fn;
        if (pred == truth) ++correct;
        const double p = std::clamp(proba[i], 1e-15, 1.0 - 1e-15);
        ll -= truth ? std::log(p) : std::log(1.0 - p);
    }
    m.f1 = (2 * tp + fp + fn) > 0 ? 2 * tp / (2 * tp + fp + fn) : 0.0;
    m.accuracy = correct / static_cast<double>(y.size());
    m.log_loss = ll / static_cast<double>(y.size());
    return m;
}

nlohmann::json to_json(const FitMetrics& m) {
    return {{"f1", m.f1},
            {"accuracy", m.accuracy},
            {"log_loss", m.log_loss},
            {"holdout_fraction", m.holdout_fraction},
            {"seed", m.seed},
            {"n_train", m.n_train},
            {"n_holdout", m.n_holdout}};
}

nlohmann::json to_json(const GbmModel& model) {
    nlohmann::json trees = nlohmann::json::array();
    for (const auto& t : model.trees()) {
        nlohmann::json nodes = nlohmann::json::array();
        for (const auto& nd : t.nodes) {
            if (nd.column < 0)
                nodes.push_back({{"leaf", nd.value}, {"cover", nd.cover}});
            else
                nodes.push_back({{"split", model.encoding()[static_cast<std::size_t>(nd.column)].name},
                                 {"threshold", nd.threshold},
                                 {"left", nd.left},
                                 {"right", nd.right},
                                 {"gain", nd.gain},
                                 {"cover", nd.cover}});
        }
        trees.push_back(nodes);
    }
    return {{"preset", model.preset() == GbmPreset::A ? "A" : "B"},
            {"base_margin", model.base_margin()},
            {"features", model.feature_names()},
            {"total_gain", model.total_gain()},
            {"trees", trees}};
}

}  // namespace autostrat
