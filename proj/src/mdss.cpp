#include "autostrat/mdss.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include "autostrat/error.hpp"
#include "autostrat/parallel.hpp"
#include "autostrat/random.hpp"

namespace autostrat {

namespace {

constexpr double kConvergenceTol = 1e-12;

void check_alpha(double alpha_g) {
    if (!(alpha_g > 0.0 && alpha_g < 1.0))
        throw Error(ErrorCode::AlphaOutOfRange, "expected outcome rate must lie in (0,1)");
}

// Which values of each scanned feature are currently allowed.
struct ScanState {
    std::vector<std::vector<char>> allowed;

    bool restricted(std::size_t f) const {
        return std::find(allowed[f].begin(), allowed[f].end(), char{0}) != allowed[f].end();
    }
};

struct ScanContext {
    const DiscreteDataset& d;
    std::vector<std::size_t> columns;  // dataset column per scanned feature
    std::vector<std::string> names;
    double alpha = 0.0;
};

SubsetDescriptor descriptor_of(const ScanContext& ctx, const ScanState& st) {
    SubsetDescriptor s;
    for (std::size_t f = 0; f < ctx.columns.size(); ++f) {
        if (!st.restricted(f)) continue;
        std::vector<std::int32_t> codes;
        for (std::size_t v = 0; v < st.allowed[f].size(); ++v)
            if (st.allowed[f][v]) codes.push_back(static_cast<std::int32_t>(v));
        s.restrictions[ctx.names[f]] = std::move(codes);
    }
    return s;
}

bool better(const ScoredSubset& a, const ScoredSubset& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.subset.n_restricted() != b.subset.n_restricted()) return a.subset.n_restricted() < b.subset.n_restricted();
    return a.subset.encode() < b.subset.encode();
}

RestartTrace run_restart(const ScanContext& ctx, const ScanConfig& cfg, std::size_t restart) {
    const std::size_t k = ctx.columns.size();
    const std::size_t n = ctx.d.n_rows();
    const auto y = ctx.d.outcome();
    Rng rng(derive_seed(cfg.seed, {0x5ca9, restart}));

    ScanState st;
    for (std::size_t f = 0; f < k; ++f) {
        const auto arity = ctx.d.column(ctx.columns[f]).arity();
        std::vector<char> mask(arity, 1);
        if (restart > 0 && arity > 1) {
            do {
                for (auto& m : mask) m = rng.bernoulli(0.5) ? 1 : 0;
            } while (std::find(mask.begin(), mask.end(), char{1}) == mask.end());
        }
        st.allowed.push_back(std::move(mask));
    }

    // per row: number of scanned features whose restriction excludes it
    std::vector<std::uint16_t> violations(n, 0);
    for (std::size_t f = 0; f < k; ++f) {
        const auto& codes = ctx.d.column(ctx.columns[f]).codes;
        for (std::size_t i = 0; i < n; ++i)
            if (!st.allowed[f][static_cast<std::size_t>(codes[i])]) ++violations[i];
    }
    std::int64_t cur_n = 0, cur_sum = 0;
    for (std::size_t i = 0; i < n; ++i)
        if (violations[i] == 0) {
            ++cur_n;
            cur_sum += y[i];
        }
    double current = score_bernoulli(cur_sum, cur_n, ctx.alpha).score;

    RestartTrace trace;
    trace.ascent.push_back(current);
    std::vector<std::size_t> order(k);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::vector<ValueRecord> records;

    for (int cycle = 0; cycle < cfg.max_iterations; ++cycle) {
        const double cycle_start = current;
        rng.shuffle(order);
        for (auto f : order) {
            const auto& col = ctx.d.column(ctx.columns[f]);
            auto& mask = st.allowed[f];
            records.assign(col.arity(), ValueRecord{});
            for (std::size_t v = 0; v < records.size(); ++v) records[v].value = static_cast<std::int32_t>(v);
            std::int64_t total = 0;
            for (std::size_t i = 0; i < n; ++i) {
                const auto code = static_cast<std::size_t>(col.codes[i]);
                const int others = violations[i] - (mask[code] ? 0 : 1);
                if (others == 0) {
                    ++records[code].n;
                    records[code].sum_y += y[i];
                    ++total;
                }
            }
            std::vector<char> next(col.arity(), 1);
            double next_score = 0.0;
            if (total > 0) {
                const auto best = best_value_subset(records, ctx.alpha);
                std::fill(next.begin(), next.end(), char{0});
                for (auto v : best.values) next[static_cast<std::size_t>(v)] = 1;
                next_score = best.score;
            }
            if (next_score >= current && next != mask) {
                for (std::size_t i = 0; i < n; ++i) {
                    const auto code = static_cast<std::size_t>(col.codes[i]);
                    violations[i] = static_cast<std::uint16_t>(violations[i] + (next[code] ? 0 : 1) - (mask[code] ? 0 : 1));
                }
                mask = std::move(next);
                current = next_score;
            }
            trace.ascent.push_back(current);
        }
        trace.cycles = cycle + 1;
        if (current - cycle_start <= kConvergenceTol) {
            trace.converged = true;
            break;
        }
    }
    trace.result = evaluate_subset(ctx.d, descriptor_of(ctx, st));
    return trace;
}

}  // namespace

BernoulliScore score_bernoulli(std::int64_t sum_y, std::int64_t n_s, double alpha_g) {
    check_alpha(alpha_g);
    if (n_s < 0 || sum_y < 0 || sum_y > n_s)
        throw Error(ErrorCode::InvalidArgument, "score_bernoulli requires 0 <= sum_y <= n_s");
    if (n_s == 0 || sum_y == 0) return {0.0, 1.0};
    const auto s = static_cast<double>(sum_y);
    const auto n = static_cast<double>(n_s);
    if (sum_y == n_s) {
        // q -> infinity limit of s log q - n log(1 - a + q a)
        return {n * std::log(1.0 / alpha_g), std::numeric_limits<double>::infinity()};
    }
    // q > 1 iff the subset rate exceeds alpha; testing the rate keeps the full population at exactly 0
    if (!(s / n > alpha_g)) return {0.0, 1.0};
    const double q = s * (1.0 - alpha_g) / (alpha_g * (n - s));
    if (!(q > 1.0)) return {0.0, 1.0};
    const double score = s * std::log(q) - n * std::log(1.0 - alpha_g + q * alpha_g);
    return {std::max(score, 0.0), q};
}

std::string SubsetDescriptor::encode() const {
    std::string out;
    for (const auto& [name, codes] : restrictions) {
        if (!out.empty()) out += ';';
        out += name + '=';
        for (std::size_t i = 0; i < codes.size(); ++i) {
            if (i) out += ',';
            out += std::to_string(codes[i]);
        }
    }
    return out;
}

SubsetDescriptor canonicalize(const SubsetDescriptor& s, const DiscreteDataset& d) {
    SubsetDescriptor out;
    for (const auto& [name, codes] : s.restrictions) {
        const auto& col = d.column(d.index_of(name));
        std::set<std::int32_t> uniq(codes.begin(), codes.end());
        if (uniq.empty()) throw Error(ErrorCode::InvalidArgument, "empty restriction on '" + name + "'");
        for (auto c : uniq)
            if (c < 0 || static_cast<std::size_t>(c) >= col.arity())
                throw Error(ErrorCode::InvalidArgument, "restriction on '" + name + "' names a value outside its domain");
        if (uniq.size() == col.arity()) continue;
        out.restrictions[name] = std::vector<std::int32_t>(uniq.begin(), uniq.end());
    }
    return out;
}

std::vector<std::uint8_t> membership(const DiscreteDataset& d, const SubsetDescriptor& s) {
    std::vector<std::uint8_t> member(d.n_rows(), 1);
    for (const auto& [name, codes] : s.restrictions) {
        const auto& col = d.column(d.index_of(name));
        std::vector<char> ok(col.arity(), 0);
        for (auto c : codes)
            if (c >= 0 && static_cast<std::size_t>(c) < ok.size()) ok[static_cast<std::size_t>(c)] = 1;
        for (std::size_t i = 0; i < d.n_rows(); ++i)
            if (!ok[static_cast<std::size_t>(col.codes[i])]) member[i] = 0;
    }
    return member;
}

std::vector<ValueRecord> aggregate_by_value(const DiscreteDataset& d, std::string_view feature,
                                            const SubsetDescriptor& conditioning) {
    const auto& col = d.column(d.index_of(feature));
    SubsetDescriptor others = conditioning;
    others.restrictions.erase(std::string(feature));
    const auto member = membership(d, others);
    std::vector<ValueRecord> out(col.arity());
    for (std::size_t v = 0; v < out.size(); ++v) out[v].value = static_cast<std::int32_t>(v);
    for (std::size_t i = 0; i < d.n_rows(); ++i) {
        if (!member[i]) continue;
        auto& r = out[static_cast<std::size_t>(col.codes[i])];
        ++r.n;
        r.sum_y += d.outcome()[i];
    }
    return out;
}

ValueSubset best_value_subset(std::span<const ValueRecord> records, double alpha_g) {
    check_alpha(alpha_g);
    std::vector<const ValueRecord*> live;
    for (const auto& r : records) {
        if (r.n < 0 || r.sum_y < 0 || r.sum_y > r.n) throw Error(ErrorCode::InvalidArgument, "invalid value record");
        if (r.n > 0) live.push_back(&r);
    }
    if (live.empty()) throw Error(ErrorCode::EmptyRecords, "no value has any rows");

    // Priority sum/(n alpha) is ordered like sum/n; compare rates exactly.
    auto rate_cmp = [](const ValueRecord* a, const ValueRecord* b) {
        const auto lhs = static_cast<__int128>(a->sum_y) * b->n;
        const auto rhs = static_cast<__int128>(b->sum_y) * a->n;
        if (lhs != rhs) return lhs > rhs;
        return a->value < b->value;
    };
    std::sort(live.begin(), live.end(), rate_cmp);
    auto same_rate = [](const ValueRecord* a, const ValueRecord* b) {
        return static_cast<__int128>(a->sum_y) * b->n == static_cast<__int128>(b->sum_y) * a->n;
    };

    std::int64_t n = 0, s = 0;
    double best_score = -1.0;
    std::size_t best_len = 0;
    std::int64_t best_n = 0, best_s = 0;
    for (std::size_t i = 0; i < live.size(); ++i) {
        n += live[i]->n;
        s += live[i]->sum_y;
        if (i + 1 < live.size() && same_rate(live[i], live[i + 1])) continue;
        const double sc = score_bernoulli(s, n, alpha_g).score;
        if (sc >= best_score) {
            best_score = sc;
            best_len = i + 1;
            best_n = n;
            best_s = s;
        }
    }

    ValueSubset out;
    out.score = best_score;
    out.n = best_n;
    out.sum_y = best_s;
    if (best_len == live.size()) {
        for (const auto& r : records) out.values.push_back(r.value);
    } else {
        for (std::size_t i = 0; i < best_len; ++i) out.values.push_back(live[i]->value);
    }
    std::sort(out.values.begin(), out.values.end());
    out.values.erase(std::unique(out.values.begin(), out.values.end()), out.values.end());
    return out;
}

void ScanConfig::validate() const {
    if (n_restarts < 1) throw Error(ErrorCode::InvalidConfig, "n_restarts must be >= 1");
    if (max_iterations < 1) throw Error(ErrorCode::InvalidConfig, "max_iterations must be >= 1");
    if (workers < 1) throw Error(ErrorCode::InvalidConfig, "workers must be >= 1");
}

ScanConfig ScanConfig::from_json(const nlohmann::json& j, ScanConfig base) {
    try {
        base.n_restarts = j.value("n_restarts", base.n_restarts);
        base.max_iterations = j.value("max_iterations", base.max_iterations);
        base.seed = j.value("seed", base.seed);
        base.workers = j.value("workers", base.workers);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::InvalidConfig, std::string("malformed scan config: ") + e.what());
    }
    base.validate();
    return base;
}

nlohmann::json ScanConfig::to_json() const {
    // workers is omitted: it never changes results
    return {{"n_restarts", n_restarts}, {"max_iterations", max_iterations}, {"seed", seed}};
}

ScoredSubset evaluate_subset(const DiscreteDataset& d, const SubsetDescriptor& s) {
    ScoredSubset out;
    out.subset = canonicalize(s, d);
    out.alpha_g = d.outcome_mean();
    const auto member = membership(d, out.subset);
    for (std::size_t i = 0; i < d.n_rows(); ++i)
        if (member[i]) {
            ++out.n_members;
            out.sum_outcomes += d.outcome()[i];
        }
    const auto sc = score_bernoulli(out.sum_outcomes, out.n_members, out.alpha_g);
    out.score = sc.score;
    out.q_mle = sc.q_mle;
    return out;
}

ScanTrace scan_traced(const DiscreteDataset& d, const std::vector<std::string>& features, const ScanConfig& cfg) {
    cfg.validate();
    if (features.empty()) throw Error(ErrorCode::NoFeatures, "scan needs at least one feature");
    const double alpha = d.outcome_mean();
    if (!(alpha > 0.0 && alpha < 1.0))
        throw Error(ErrorCode::DegenerateOutcome, "outcome is constant; nothing to scan");

    ScanContext ctx{d, {}, {}, alpha};
    std::set<std::string> seen;
    for (const auto& f : features) {
        if (!seen.insert(f).second) throw Error(ErrorCode::InvalidArgument, "feature '" + f + "' listed twice");
        ctx.columns.push_back(d.index_of(f));
        ctx.names.push_back(f);
    }
    if (features.size() > 65535) throw Error(ErrorCode::InvalidArgument, "too many scan features");

    ScanTrace out;
    out.restarts.resize(static_cast<std::size_t>(cfg.n_restarts));
    parallel_for(out.restarts.size(), cfg.workers,
                 [&](std::size_t r) { out.restarts[r] = run_restart(ctx, cfg, r); });
    for (std::size_t r = 1; r < out.restarts.size(); ++r)
        if (better(out.restarts[r].result, out.restarts[out.best_restart].result)) out.best_restart = r;
    out.best = out.restarts[out.best_restart].result;
    return out;
}

ScoredSubset scan(const DiscreteDataset& d, const std::vector<std::string>& features, const ScanConfig& cfg) {
    return scan_traced(d, features, cfg).best;
}

nlohmann::json subset_json(const SubsetDescriptor& s, const DiscreteDataset& d) {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [name, codes] : s.restrictions) {
        const auto& col = d.column(name);
        nlohmann::json labels = nlohmann::json::array();
        for (auto c : codes) labels.push_back(col.labels[static_cast<std::size_t>(c)]);
        j[name] = labels;
    }
    return j;
}

nlohmann::json to_json(const ScoredSubset& s, const DiscreteDataset& d) {
    return {{"restrictions", subset_json(s.subset, d)},
            {"score", s.score},
            {"q_mle", s.q_mle},
            {"n_members", s.n_members},
            {"sum_outcomes", s.sum_outcomes},
            {"alpha_g", s.alpha_g}};
}

}  // namespace autostrat
