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

// Brute-force reference ranker used to check the production scoring path. Only the ScoringConfig type
// is borrowed from scoring.hpp; the arithmetic is plain nested loops in double precision.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "latte/error.hpp"
#include "latte/record.hpp"
#include "latte/scoring.hpp"

namespace latte {

struct OracleHit {
    std::string doc_id;
    double score = 0.0;
};

namespace oracle {

inline double attention_weighted_maxsim(const EmbeddedRecord& q, const EmbeddedRecord& d, const ScoringConfig& cfg) {
    if (q.dim != d.dim) throw Error(ErrorKind::dim_mismatch, "oracle: query/document dims differ");
    const bool use_q = cfg.mode == AttentionMode::query_only || cfg.mode == AttentionMode::both;
    const bool use_d = cfg.mode == AttentionMode::doc_only || cfg.mode == AttentionMode::both;

    double reg = 1.0;
    if (cfg.delta_override) {
        reg = *cfg.delta_override;
    } else {
        const double ratio = double(d.content_len) / double(cfg.clip_len);
        reg = ratio < 1.0 ? ratio : 1.0;
    }

    const std::size_t n = q.attention.size();
    const std::size_t m = d.attention.size();
    const std::size_t dim = q.dim;
    std::size_t kept_docs = 0;
    for (std::size_t j = 0; j < m; ++j) kept_docs += !d.keep_mask || (*d.keep_mask)[j];
    if (kept_docs == 0) throw Error(ErrorKind::no_kept_tokens, "oracle: document '" + d.id + "'");

    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (q.keep_mask && !(*q.keep_mask)[i]) continue;
        double best = 0.0;
        std::size_t w = m;
        for (std::size_t j = 0; j < m; ++j) {
            if (d.keep_mask && !(*d.keep_mask)[j]) continue;
            double s = 0.0;
            for (std::size_t c = 0; c < dim; ++c) s += double(q.embeddings[i * dim + c]) * double(d.embeddings[j * dim + c]);
            if (s > 1.0) s = 1.0;
            if (s < -1.0) s = -1.0;
            if (w == m || s > best) {
                best = s;
                w = j;
            }
        }
        const double fq = use_q ? std::exp(double(q.attention[i])) : 1.0;
        const double fd = use_d ? std::exp(reg * double(d.attention[w])) : 1.0;
        total += fq * best * fd;
    }
    return total;
}

}  // namespace oracle

/// Scores every document against `query` and returns the full ranking: descending score,
/// ascending doc id on ties.
inline std::vector<OracleHit> oracle_rank(const std::vector<EmbeddedRecord>& documents, const EmbeddedRecord& query,
                                          const ScoringConfig& config) {
    std::vector<OracleHit> ranking;
    ranking.reserve(documents.size());
    for (const auto& d : documents) ranking.push_back({d.id, oracle::attention_weighted_maxsim(query, d, config)});
    std::sort(ranking.begin(), ranking.end(), [](const OracleHit& a, const OracleHit& b) {
        return a.score > b.score || (a.score == b.score && a.doc_id < b.doc_id);
    });
    return ranking;
}

}  // namespace latte
