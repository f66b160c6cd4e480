// Copyright 2026 The Latte Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License"); you may not use this file except in compliance
// with the License. You may obtain a copy of the License at
//
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software distributed under the License
// is distributed on an "AS IS" BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express
// or implied. See the License for the specific language governing permissions and limitations under the License.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "latte/error.hpp"
#include "latte/record.hpp"

namespace latte {

/// Which attention multipliers enter the late-interaction sum.
enum class AttentionMode : std::uint8_t {
    none,        ///< plain MaxSim
    query_only,  ///< e^{A_q} only
    doc_only,    ///< (e^{A_d})^delta only
    both,        ///< full attention-weighted MaxSim
};

inline constexpr AttentionMode kAllModes[] = {AttentionMode::none, AttentionMode::query_only,
                                              AttentionMode::doc_only, AttentionMode::both};

inline std::string_view to_string(AttentionMode mode) {
    switch (mode) {
        case AttentionMode::none: return "none";
        case AttentionMode::query_only: return "query-only";
        case AttentionMode::doc_only: return "doc-only";
        case AttentionMode::both: return "both";
    }
    return "?";
}

inline std::optional<AttentionMode> parse_attention_mode(std::string_view text) {
    for (auto mode : kAllModes) {
        if (text == to_string(mode)) return mode;
    }
    return std::nullopt;
}

inline bool uses_query_attention(AttentionMode mode) {
    return mode == AttentionMode::query_only || mode == AttentionMode::both;
}
inline bool uses_doc_attention(AttentionMode mode) {
    return mode == AttentionMode::doc_only || mode == AttentionMode::both;
}

struct ScoringConfig {
    AttentionMode mode = AttentionMode::both;
    /// Document length clipping l, in tokens.
    std::uint32_t clip_len = 150;
    /// Fixed regularizer exponent; replaces min(1, content_len / l) when set.
    std::optional<double> delta_override;

    void validate() const {
        if (clip_len < 1) throw Error(ErrorKind::invalid_argument, "clip length must be >= 1");
        if (delta_override && !(*delta_override > 0.0 && *delta_override <= 1.0)) {
            throw Error(ErrorKind::invalid_argument, "delta override must lie in (0, 1]");
        }
    }
};

/// Dot product of two unit vectors, accumulated in double and clamped to [-1, 1].
inline double cosine(std::span<const float> u, std::span<const float> v) {
    if (u.size() != v.size()) {
        throw Error(ErrorKind::dim_mismatch, std::to_string(u.size()) + " vs " + std::to_string(v.size()));
    }
    double dot = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) dot += static_cast<double>(u[i]) * static_cast<double>(v[i]);
    return std::clamp(dot, -1.0, 1.0);
}

/// Attention regularizer min(1, content_len / l).
inline double delta(std::uint32_t content_len, std::uint32_t clip_len) {
    if (content_len < 1 || clip_len < 1) {
        throw Error(ErrorKind::invalid_argument, "delta requires content_len >= 1 and l >= 1");
    }
    return std::min(1.0, static_cast<double>(content_len) / static_cast<double>(clip_len));
}

inline double effective_delta(const EmbeddedRecord& doc, const ScoringConfig& config) {
    return config.delta_override ? *config.delta_override : delta(doc.content_len, config.clip_len);
}

/// How one query token contributed to a pair score.
struct MatchDetail {
    std::size_t query_token = 0;
    /// Document token with the highest cosine (smallest index on ties).
    std::size_t doc_token = 0;
    double cosine = 0.0;
    double query_multiplier = 1.0;
    double doc_multiplier = 1.0;
    double contribution = 0.0;
};

namespace detail {

inline void check_pair(const EmbeddedRecord& query, const EmbeddedRecord& doc) {
    if (query.role != Role::query) throw Error(ErrorKind::invalid_argument, "'" + query.id + "' is not a query");
    if (doc.role != Role::document) throw Error(ErrorKind::invalid_argument, "'" + doc.id + "' is not a document");
    if (query.dim != doc.dim) {
        throw Error(ErrorKind::dim_mismatch, "query '" + query.id + "' dim " + std::to_string(query.dim) +
                                                 " vs document '" + doc.id + "' dim " + std::to_string(doc.dim));
    }
    if (doc.kept_count() == 0) throw Error(ErrorKind::no_kept_tokens, "document '" + doc.id + "'");
}

/// Visits each kept query token with its best kept document token and the three factors of its
/// contribution. Shared by score_pair and explain_pair so both see identical arithmetic.
template <typename Visitor>
void for_each_match(const EmbeddedRecord& query, const EmbeddedRecord& doc, const ScoringConfig& config,
                    Visitor&& visit) {
    check_pair(query, doc);
    const bool weight_query = uses_query_attention(config.mode);
    const bool weight_doc = uses_doc_attention(config.mode);
    const double doc_delta = weight_doc ? effective_delta(doc, config) : 1.0;

    for (std::size_t i = 0; i < query.token_count(); ++i) {
        if (!query.kept(i)) continue;
        const auto q = query.row(i);
        std::size_t best = doc.token_count();
        double best_cos = -2.0;
        for (std::size_t j = 0; j < doc.token_count(); ++j) {
            if (!doc.kept(j)) continue;
            const double c = cosine(q, doc.row(j));
            if (c > best_cos) {
                best_cos = c;
                best = j;
            }
        }
        MatchDetail m;
        m.query_token = i;
        m.doc_token = best;
        m.cosine = best_cos;
        m.query_multiplier = weight_query ? std::exp(static_cast<double>(query.attention[i])) : 1.0;
        m.doc_multiplier = weight_doc ? std::pow(std::exp(static_cast<double>(doc.attention[best])), doc_delta) : 1.0;
        m.contribution = m.query_multiplier * m.cosine * m.doc_multiplier;
        visit(m);
    }
}

}  // namespace detail

/// Late-interaction relevance of `doc` to `query`: for every kept query token, the maximum cosine
/// over kept document tokens, scaled by e^{A_q} and (e^{A_dw})^delta as the mode selects, summed.
/// AttentionMode::none is plain MaxSim.
inline double score_pair(const EmbeddedRecord& query, const EmbeddedRecord& doc, const ScoringConfig& config = {}) {
    double score = 0.0;
    detail::for_each_match(query, doc, config, [&](const MatchDetail& m) { score += m.contribution; });
    return score;
}

/// Per-query-token breakdown of score_pair. Contributions sum to the pair score.
inline std::vector<MatchDetail> explain_pair(const EmbeddedRecord& query, const EmbeddedRecord& doc,
                                             const ScoringConfig& config = {}) {
    std::vector<MatchDetail> details;
    details.reserve(query.token_count());
    detail::for_each_match(query, doc, config, [&](const MatchDetail& m) { details.push_back(m); });
    return details;
}

}  // namespace latte
