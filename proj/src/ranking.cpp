#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "autostrat/embedded.hpp"
#include "autostrat/error.hpp"

namespace autostrat {

std::string_view to_string(RankingSource s) noexcept {
    switch (s) {
        case RankingSource::PresetA: return "PresetA";
        case RankingSource::PresetB: return "PresetB";
        case RankingSource::Committee: return "Committee";
        case RankingSource::FilterWrapper: return "FilterWrapper";
    }
    return "PresetA";
}

void FeatureRanking::validate() const {
    if (features.size() != scores.size())
        throw Error(ErrorCode::InvalidArgument, "ranking has mismatched feature/score lengths");
    for (double s : scores) {
        if (!std::isfinite(s) || s < 0.0) throw Error(ErrorCode::InvalidArgument, "ranking scores must be finite and >= 0");
        if (normalized && s > 1.0) throw Error(ErrorCode::InvalidArgument, "normalized ranking score above 1");
    }
}

FeatureRanking minmax_normalize(const FeatureRanking& r) {
    r.validate();
    FeatureRanking out = r;
    out.normalized = true;
    out.degenerate = false;
    if (r.scores.empty()) return out;
    const auto [lo, hi] = std::minmax_element(r.scores.begin(), r.scores.end());
    const double range = *hi - *lo;
    if (!(range > 0.0)) {
        std::fill(out.scores.begin(), out.scores.end(), 0.0);
        out.degenerate = true;
        return out;
    }
    for (auto& s : out.scores) s = std::clamp((s - *lo) / range, 0.0, 1.0);
    return out;
}

FeatureRanking committee_vote(std::span<const FeatureRanking> rankings) {
    if (rankings.size() < 2) throw Error(ErrorCode::InvalidArgument, "committee vote needs at least two rankings");
    for (const auto& r : rankings) {
        r.validate();
        if (!r.normalized) throw Error(ErrorCode::InvalidArgument, "committee vote expects normalized rankings");
    }
    std::map<std::string, std::vector<double>> votes;
    for (std::size_t i = 0; i < rankings[0].features.size(); ++i) votes[rankings[0].features[i]];
    if (votes.size() != rankings[0].features.size())
        throw Error(ErrorCode::InvalidArgument, "ranking lists a feature twice");
    for (const auto& r : rankings) {
        if (r.features.size() != votes.size())
            throw Error(ErrorCode::MismatchedFeatureSets, "rankings cover different feature sets");
        for (std::size_t i = 0; i < r.features.size(); ++i) {
            auto it = votes.find(r.features[i]);
            if (it == votes.end())
                throw Error(ErrorCode::MismatchedFeatureSets, "feature '" + r.features[i] + "' not in every ranking");
            it->second.push_back(r.scores[i]);
        }
    }
    FeatureRanking out;
    out.source = RankingSource::Committee;
    out.normalized = true;
    for (auto& [f, v] : votes) {
        out.features.push_back(f);
        if (v.size() != rankings.size())
            throw Error(ErrorCode::MismatchedFeatureSets, "feature '" + f + "' repeated within a ranking");
        // name order and sorted summation make the vote independent of list order
        std::sort(v.begin(), v.end());
        out.scores.push_back(std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size()));
    }
    return out;
}

std::vector<std::string> top_k(const FeatureRanking& r, std::size_t k) {
    r.validate();
    if (k < 1) throw Error(ErrorCode::InvalidArgument, "k must be at least 1");
    if (k > r.features.size())
        throw Error(ErrorCode::KTooLarge,
                    "k=" + std::to_string(k) + " exceeds " + std::to_string(r.features.size()) + " ranked features");
    std::vector<std::size_t> order(r.features.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (r.scores[a] != r.scores[b]) return r.scores[a] > r.scores[b];
        return r.features[a] < r.features[b];
    });
    std::vector<std::string> out;
    for (std::size_t i = 0; i < k; ++i) out.push_back(r.features[order[i]]);
    return out;
}

nlohmann::json to_json(const FeatureRanking& r) {
    nlohmann::json scores = nlohmann::json::object();
    for (std::size_t i = 0; i < r.features.size(); ++i) scores[r.features[i]] = r.scores[i];
    return {{"source", std::string(to_string(r.source))},
            {"normalized", r.normalized},
            {"degenerate", r.degenerate},
            {"scores", scores},
            {"order", r.features.empty() ? nlohmann::json::array() : nlohmann::json(top_k(r, r.features.size()))}};
}

}  // namespace autostrat
