#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "autostrat/mdss.hpp"
#include "autostrat/random.hpp"
#include "autostrat/synth.hpp"
#include "autostrat/tabular.hpp"

namespace testsupport {

using namespace autostrat;

inline std::string letter(int i) { return std::string(1, static_cast<char>('A' + i)); }

/// Dataset of nominal features f1..fm with the given per-row codes.
inline Dataset categorical_dataset(const std::vector<std::vector<int>>& codes, const std::vector<std::uint8_t>& y) {
    std::vector<Column> cols;
    for (std::size_t j = 0; j < codes.size(); ++j) {
        std::vector<std::string> labels;
        for (int c : codes[j]) labels.push_back(letter(c));
        cols.push_back(Column::categorical("f" + std::to_string(j + 1), FeatureKind::Nominal, labels));
    }
    return Dataset(std::move(cols), y);
}

struct OracleResult {
    double score = -1.0;
    std::int64_t n = 0;
    std::int64_t sum_y = 0;
};

/// Exhaustive conjunction search: every non-empty value set per feature.
inline OracleResult brute_force_scan(const DiscreteDataset& d, const std::vector<std::string>& features) {
    const std::size_t n = d.n_rows();
    std::int64_t total = 0;
    for (auto v : d.outcome()) total += v;
    const double alpha = static_cast<double>(total) / static_cast<double>(n);

    std::vector<const DiscreteColumn*> cols;
    std::vector<std::uint32_t> limits;
    for (const auto& f : features) {
        cols.push_back(&d.column(f));
        limits.push_back((1u << cols.back()->arity()) - 1u);
    }
    std::vector<std::uint32_t> masks(cols.size(), 1u);
    OracleResult best;
    while (true) {
        std::int64_t cnt = 0, sum = 0;
        for (std::size_t r = 0; r < n; ++r) {
            bool in = true;
            for (std::size_t j = 0; j < cols.size() && in; ++j)
                in = (masks[j] >> cols[j]->codes[r]) & 1u;
            if (in) {
                ++cnt;
                sum += d.outcome()[r];
            }
        }
        if (cnt > 0) {
            const double s = score_bernoulli(sum, cnt, alpha).score;
            if (s > best.score) best = {s, cnt, sum};
        }
        std::size_t j = 0;
        while (j < masks.size() && masks[j] == limits[j]) masks[j++] = 1u;
        if (j == masks.size()) break;
        ++masks[j];
    }
    return best;
}

/// Restricted (feature, code) pairs of a descriptor.
inline std::set<std::pair<std::string, std::int32_t>> restricted_pairs(const SubsetDescriptor& s) {
    std::set<std::pair<std::string, std::int32_t>> out;
    for (const auto& [f, codes] : s.restrictions)
        for (auto c : codes) out.emplace(f, c);
    return out;
}

inline double jaccard(const SubsetDescriptor& a, const SubsetDescriptor& b) {
    const auto pa = restricted_pairs(a), pb = restricted_pairs(b);
    std::size_t inter = 0;
    for (const auto& p : pa) inter += pb.count(p);
    const std::size_t uni = pa.size() + pb.size() - inter;
    return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

/// Synth spec used by the recovery checks: plant c1=A and c2=B, q*=4.
inline SynthSpec planted_spec(std::uint64_t seed) {
    SynthSpec s;
    s.n_rows = 2000;
    s.n_continuous = 4;
    s.correlation = 0.3;
    s.collinear_triples = 1;
    s.categorical_arities = {3, 3, 4, 2};
    s.base_rate = 0.2;
    s.seed = seed;
    PlantSpec p;
    p.q_star = 4.0;
    p.restrictions.restrictions = {{"c1", {0}}, {"c2", {1}}};
    s.plant = p;
    return s;
}

/// Two-sided one-sample Kolmogorov-Smirnov statistic against U(0,1).
inline double ks_uniform(std::vector<double> p) {
    std::sort(p.begin(), p.end());
    const double n = static_cast<double>(p.size());
    double d = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        d = std::max(d, (static_cast<double>(i) + 1.0) / n - p[i]);
        d = std::max(d, p[i] - static_cast<double>(i) / n);
    }
    return d;
}

}  // namespace testsupport
