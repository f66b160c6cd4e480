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

// Seeded synthetic corpora with planted relevance, plus a small hand-built fixture.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <string>
#include <utility>
#include <vector>

#include "latte/error.hpp"
#include "latte/random.hpp"
#include "latte/record.hpp"
#include "latte/trec.hpp"

namespace latte {

struct TokenRange {
    std::uint32_t min = 1;
    std::uint32_t max = 1;
};

struct SynthSpec {
    std::uint64_t seed = 42;
    std::uint32_t doc_count = 1000;
    std::uint32_t query_count = 50;
    std::uint32_t dim = 16;
    TokenRange doc_tokens{28, 36};
    TokenRange query_tokens{8, 16};
    /// 0: decoy documents carry the same attention on their planted token as relevant ones.
    /// 1: decoys carry none.
    double attention_signal_strength = 0.9;
    std::uint32_t relevant_per_query = 1;

    void validate(const RecordLimits& limits = {}) const {
        auto fail = [](const std::string& what) { throw Error(ErrorKind::invalid_argument, "synth spec: " + what); };
        if (doc_count < 1 || query_count < 1 || relevant_per_query < 1) fail("all counts must be >= 1");
        if (dim < 2) fail("dim must be >= 2");
        if (doc_tokens.min < 1 || doc_tokens.min > doc_tokens.max) fail("invalid document token range");
        if (query_tokens.min < 1 || query_tokens.min > query_tokens.max) fail("invalid query token range");
        if (doc_tokens.max > limits.max_document_tokens) fail("document token range exceeds the document cap");
        if (query_tokens.max > limits.max_query_tokens) fail("query token range exceeds the query cap");
        if (!(attention_signal_strength >= 0.0 && attention_signal_strength <= 1.0)) {
            fail("attention_signal_strength must lie in [0, 1]");
        }
        if (static_cast<std::uint64_t>(query_count) * relevant_per_query > doc_count) {
            fail("query_count * relevant_per_query exceeds doc_count");
        }
    }
};

struct SynthCorpus {
    std::vector<EmbeddedRecord> documents;
    std::vector<EmbeddedRecord> queries;
    Qrels qrels;
};

/// Attention carried by planted topic tokens (query and relevant documents).
inline constexpr double kSynthHighAttention = 1.0;
/// Filler tokens draw attention uniformly from [0, kSynthLowAttention).
inline constexpr double kSynthLowAttention = 0.1;
/// Per-component Gaussian noise added to a topic vector to make a "near" token.
inline constexpr double kSynthTopicNoise = 0.1;

namespace detail {

inline void push_unit(std::vector<float>& out, std::vector<double> v) {
    double norm = 0.0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    for (double x : v) out.push_back(static_cast<float>(x / norm));
}

inline std::vector<double> gaussian(Rng& rng, std::uint32_t dim) {
    std::vector<double> v(dim);
    for (auto& x : v) x = rng.normal();
    return v;
}

inline std::vector<double> unit_gaussian(Rng& rng, std::uint32_t dim) {
    auto v = gaussian(rng, dim);
    double norm = 0.0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    for (auto& x : v) x /= norm;
    return v;
}

inline std::vector<double> near(Rng& rng, const std::vector<double>& topic) {
    std::vector<double> v(topic);
    for (auto& x : v) x += kSynthTopicNoise * rng.normal();
    return v;
}

/// One record of `m` tokens. The first `planted` draws pick distinct positions that hold tokens near
/// `topic` with `topic_attention`; every other position holds a random unit token with low attention.
inline EmbeddedRecord planted_record(Rng& rng, std::string id, Role role, std::uint32_t dim, std::uint32_t m,
                                     std::uint32_t planted, const std::vector<double>& topic,
                                     double topic_attention) {
    EmbeddedRecord r;
    r.id = std::move(id);
    r.role = role;
    r.dim = dim;
    r.content_len = m;
    r.embeddings.reserve(static_cast<std::size_t>(m) * dim);
    r.attention.reserve(m);

    std::vector<std::uint32_t> slots(m);
    for (std::uint32_t t = 0; t < m; ++t) slots[t] = t;
    std::vector<bool> is_topic(m, false);
    for (std::uint32_t p = 0; p < planted; ++p) {
        std::uint32_t j = p + static_cast<std::uint32_t>(rng.below(m - p));
        std::swap(slots[p], slots[j]);
        is_topic[slots[p]] = true;
    }
    for (std::uint32_t t = 0; t < m; ++t) {
        if (is_topic[t]) {
            push_unit(r.embeddings, near(rng, topic));
            r.attention.push_back(static_cast<float>(topic_attention));
        } else {
            push_unit(r.embeddings, gaussian(rng, dim));
            r.attention.push_back(static_cast<float>(rng.uniform(0.0, kSynthLowAttention)));
        }
    }
    return r;
}

}  // namespace detail

/// Builds a corpus where attention, not cosine alone, separates relevant from non-relevant documents.
///
/// Every query owns a random unit topic vector; a "near" token is that vector plus N(0, 0.1^2) noise
/// per component, renormalized. Half the query's tokens (at least one) are near its topic with high
/// attention; the rest are random with low attention. Documents are shuffled; the first
/// query_count * relevant_per_query become relevant documents (query by query) and the rest are decoys,
/// each assigned to a uniformly drawn query. Relevant and decoy documents alike plant one token drawn
/// from the same distribution near their query's topic, so cosines cannot tell them apart. The planted
/// token's attention is high for relevant documents and high * (1 - strength) for decoys.
///
/// Draw order (fixed for reproducibility): topics for all queries, the document shuffle, decoy query
/// choices, then documents in id order, then queries in id order.
inline SynthCorpus gen_corpus(const SynthSpec& spec, const RecordLimits& limits = {}) {
    spec.validate(limits);
    Rng rng(spec.seed);

    std::vector<std::vector<double>> topics;
    topics.reserve(spec.query_count);
    for (std::uint32_t q = 0; q < spec.query_count; ++q) topics.push_back(detail::unit_gaussian(rng, spec.dim));

    std::vector<std::uint32_t> order(spec.doc_count);
    for (std::uint32_t d = 0; d < spec.doc_count; ++d) order[d] = d;
    rng.shuffle(std::span(order));

    const std::uint32_t relevant_total = spec.query_count * spec.relevant_per_query;
    std::vector<std::uint32_t> owner(spec.doc_count);
    std::vector<bool> relevant(spec.doc_count, false);
    for (std::uint32_t i = 0; i < spec.doc_count; ++i) {
        const std::uint32_t doc = order[i];
        if (i < relevant_total) {
            owner[doc] = i / spec.relevant_per_query;
            relevant[doc] = true;
        } else {
            owner[doc] = static_cast<std::uint32_t>(rng.below(spec.query_count));
        }
    }

    auto doc_id = [](std::uint32_t d) { return "d" + std::to_string(d); };
    auto query_id = [](std::uint32_t q) { return "q" + std::to_string(q); };

    SynthCorpus corpus;
    corpus.documents.reserve(spec.doc_count);
    const double decoy_attention = kSynthHighAttention * (1.0 - spec.attention_signal_strength);
    for (std::uint32_t d = 0; d < spec.doc_count; ++d) {
        const auto m = static_cast<std::uint32_t>(rng.between(spec.doc_tokens.min, spec.doc_tokens.max));
        corpus.documents.push_back(detail::planted_record(rng, doc_id(d), Role::document, spec.dim, m, 1,
                                                          topics[owner[d]],
                                                          relevant[d] ? kSynthHighAttention : decoy_attention));
        if (relevant[d]) corpus.qrels.add(query_id(owner[d]), doc_id(d), 1);
    }
    corpus.queries.reserve(spec.query_count);
    for (std::uint32_t q = 0; q < spec.query_count; ++q) {
        const auto m = static_cast<std::uint32_t>(rng.between(spec.query_tokens.min, spec.query_tokens.max));
        const std::uint32_t planted = std::max<std::uint32_t>(1, m / 2);
        corpus.queries.push_back(detail::planted_record(rng, query_id(q), Role::query, spec.dim, m, planted,
                                                        topics[q], kSynthHighAttention));
    }
    return corpus;
}

struct ToyFixture {
    EmbeddedRecord query;
    EmbeddedRecord d1;
    EmbeddedRecord d2;
    EmbeddedRecord d3;
};

namespace detail {

struct ToyToken {
    float x, y, z, w;
    float attention;
};

inline EmbeddedRecord toy_record(std::string id, Role role, std::initializer_list<ToyToken> tokens) {
    EmbeddedRecord r;
    r.id = std::move(id);
    r.role = role;
    r.dim = 4;
    for (const auto& t : tokens) {
        r.embeddings.insert(r.embeddings.end(), {t.x, t.y, t.z, t.w});
        r.attention.push_back(t.attention);
    }
    r.content_len = static_cast<std::uint32_t>(tokens.size());
    return r;
}

}  // namespace detail

/// Four-dimensional stand-ins for
///   Q : "Who is going to study?"
///   D1: "Alice is walking to school."
///   D2: "Bob is going to buy apples."
///   D3: "Only studying makes Jack a dull boy."
/// Axis 0 carries function-word phrasing, axis 1 the study/school concept, axes 2-3 everything else.
/// Plain MaxSim favours D2 (shared "is going to"); with attention (delta = 1) D1 wins on the high-attention
/// study/school match and D3 drops to last because its "studying" token carries almost no attention.
inline ToyFixture toy_fixture() {
    using detail::toy_record;
    ToyFixture f;
    f.query = toy_record("Q", Role::query,
                         {
                             {0.0f, 0.0f, 0.0f, 1.0f, 0.10f},    // who
                             {1.0f, 0.0f, 0.0f, 0.0f, 0.05f},    // is
                             {0.6f, 0.0f, 0.8f, 0.0f, 0.05f},    // going
                             {0.96f, 0.0f, 0.0f, 0.28f, 0.05f},  // to
                             {0.0f, 1.0f, 0.0f, 0.0f, 2.00f},    // study
                         });
    f.d1 = toy_record("D1", Role::document,
                      {
                          {0.0f, 0.0f, 0.898384f, 0.439210f, 0.30f},         // alice
                          {1.0f, 0.0f, 0.0f, 0.0f, 0.05f},                   // is
                          {0.499401f, 0.199760f, 0.499401f, -0.679185f, 0.40f},  // walking
                          {0.96f, 0.0f, 0.0f, 0.28f, 0.05f},                 // to
                          {0.0f, 0.600812f, 0.781055f, 0.170230f, 2.00f},    // school
                      });
    f.d2 = toy_record("D2", Role::document,
                      {
                          {0.0f, 0.0f, 0.8f, 0.6f, 0.30f},            // bob
                          {1.0f, 0.0f, 0.0f, 0.0f, 0.05f},            // is
                          {0.6f, 0.0f, 0.8f, 0.0f, 0.05f},            // going
                          {0.96f, 0.0f, 0.0f, 0.28f, 0.05f},          // to
                          {0.0f, 0.199960f, 0.979804f, 0.0f, 1.00f},  // buy
                          {0.0f, 0.0f, 0.6f, 0.8f, 1.00f},            // apples
                      });
    f.d3 = toy_record("D3", Role::document,
                      {
                          {0.200795f, 0.0f, 0.401589f, -0.893536f, 0.20f},   // only
                          {0.0f, 0.950074f, 0.0f, 0.312024f, 0.02f},         // studying
                          {0.401589f, 0.0f, 0.200795f, -0.893536f, 0.10f},   // makes
                          {0.0f, 0.0f, 1.0f, 0.0f, 0.30f},                   // jack
                          {0.6f, 0.0f, 0.0f, -0.8f, 0.05f},                  // a
                          {0.0f, 0.100180f, 0.901624f, -0.420758f, 0.80f},   // dull
                          {0.0f, 0.0f, 0.6f, -0.8f, 0.80f},                  // boy
                      });
    return f;
}

}  // namespace latte
