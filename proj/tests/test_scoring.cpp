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

#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>

#include "latte/latte.hpp"
#include "test_support.hpp"

using namespace latte;
using latte::testing::error_of;
using latte::testing::make_record;
using latte::testing::rel_close;
using latte::testing::seeded_pairs;

namespace {

// Q = {(1,0) A=0.5, (0,1) A=0.1}, D = {(1,0) A=0.3, (0.6,0.8) A=0.2}
EmbeddedRecord example_query() { return make_record("q", Role::query, {{1.0f, 0.0f}, {0.0f, 1.0f}}, {0.5f, 0.1f}); }
EmbeddedRecord example_doc() {
    return make_record("d", Role::document, {{1.0f, 0.0f}, {0.6f, 0.8f}}, {0.3f, 0.2f});
}

// Term-by-term expansion e^{0.5}*1*e^{0.3} + e^{0.1}*0.8*e^{0.2}, evaluated on the float32 inputs.
constexpr double kExampleBoth = 3.3054280220028276;
// 1 + cos((0,1),(0.6f,0.8f))
constexpr double kExampleNone = 1.800000011920929;

ScoringConfig with_mode(AttentionMode mode, std::optional<double> delta = 1.0) {
    ScoringConfig c;
    c.mode = mode;
    c.delta_override = delta;
    return c;
}

}  // namespace

TEST_CASE("cosine of unit vectors", "[scoring]") {
    const std::vector<float> x{1.0f, 0.0f}, y{0.0f, 1.0f}, z{0.6f, 0.8f};
    CHECK(cosine(x, x) == 1.0);
    CHECK(cosine(x, y) == 0.0);
    CHECK(cosine(x, z) == Catch::Approx(0.6).epsilon(1e-7));
    const std::vector<float> w{1.0f, 0.0f, 0.0f};
    CHECK(error_of([&] { cosine(x, w); })->kind() == ErrorKind::dim_mismatch);
    const std::vector<float> over{1.0000001f, 0.0f};
    CHECK(cosine(over, over) == 1.0);
}

TEST_CASE("delta regularizer", "[scoring]") {
    CHECK(delta(300, 150) == 1.0);
    CHECK(delta(150, 150) == 1.0);
    CHECK(delta(75, 150) == 0.5);
    CHECK(delta(1, 1) == 1.0);
    CHECK_THROWS_AS(delta(0, 150), Error);
    CHECK_THROWS_AS(delta(10, 0), Error);

    double prev = 0.0;
    for (std::uint32_t len = 1; len <= 400; ++len) {
        const double d = delta(len, 150);
        CHECK(d >= prev);
        CHECK(d > 0.0);
        CHECK(d <= 1.0);
        if (len >= 150) CHECK(d == 1.0);
        prev = d;
    }
}

TEST_CASE("scoring config validation", "[scoring]") {
    ScoringConfig c;
    CHECK(c.mode == AttentionMode::both);
    CHECK(c.clip_len == 150);
    CHECK_NOTHROW(c.validate());
    c.delta_override = 0.0;
    CHECK_THROWS_AS(c.validate(), Error);
    c.delta_override = 1.5;
    CHECK_THROWS_AS(c.validate(), Error);
    c.delta_override = 1.0;
    CHECK_NOTHROW(c.validate());
    c.clip_len = 0;
    CHECK_THROWS_AS(c.validate(), Error);

    for (auto mode : kAllModes) CHECK(parse_attention_mode(to_string(mode)) == mode);
    CHECK_FALSE(parse_attention_mode("query_only"));
}

TEST_CASE("hand-expanded example pair", "[scoring]") {
    const auto q = example_query();
    const auto d = example_doc();
    CHECK(rel_close(score_pair(q, d, with_mode(AttentionMode::both)), kExampleBoth));
    CHECK(std::abs(score_pair(q, d, with_mode(AttentionMode::both)) - 3.3055) < 1e-4);
    CHECK(rel_close(score_pair(q, d, with_mode(AttentionMode::none)), kExampleNone));

    const auto details = explain_pair(q, d, with_mode(AttentionMode::both));
    REQUIRE(details.size() == 2);
    CHECK(details[0].query_token == 0);
    CHECK(details[0].doc_token == 0);
    CHECK(details[0].cosine == 1.0);
    CHECK(details[1].query_token == 1);
    CHECK(details[1].doc_token == 1);
    CHECK(details[1].cosine == Catch::Approx(0.8).epsilon(1e-7));
    double sum = 0.0;
    for (const auto& m : details) {
        CHECK(m.contribution == m.query_multiplier * m.cosine * m.doc_multiplier);
        sum += m.contribution;
    }
    CHECK(rel_close(sum, kExampleBoth));
}

TEST_CASE("single-token identical pair contributes e^(a+b)", "[scoring]") {
    const float a = 0.37f, b = 0.81f;
    const auto q = make_record("q", Role::query, {{0.0f, 1.0f, 0.0f}}, {a});
    const auto d = make_record("d", Role::document, {{0.0f, 1.0f, 0.0f}}, {b});
    const auto details = explain_pair(q, d, with_mode(AttentionMode::both));
    REQUIRE(details.size() == 1);
    CHECK(rel_close(details[0].contribution, std::exp(double(a) + double(b)), 1e-12));
}

TEST_CASE("mode none leaves every multiplier at exactly 1", "[scoring]") {
    for (const auto& [q, d] : seeded_pairs(20, 5)) {
        for (const auto& m : explain_pair(q, d, with_mode(AttentionMode::none, std::nullopt))) {
            CHECK(m.query_multiplier == 1.0);
            CHECK(m.doc_multiplier == 1.0);
        }
    }
}

TEST_CASE("ablation modes apply only their own multiplier", "[scoring]") {
    const auto q = example_query();
    const auto d = example_doc();
    const double cos2 = kExampleNone - 1.0;
    const double q_only = std::exp(0.5) + std::exp(double(0.1f)) * cos2;
    const double d_only = std::exp(double(0.3f)) + cos2 * std::exp(double(0.2f));
    CHECK(rel_close(score_pair(q, d, with_mode(AttentionMode::query_only)), q_only));
    CHECK(rel_close(score_pair(q, d, with_mode(AttentionMode::doc_only)), d_only));
}

TEST_CASE("effective delta comes from content_len unless overridden", "[scoring]") {
    auto d = example_doc();
    d.content_len = 1;
    const auto q = example_query();
    ScoringConfig c;
    c.clip_len = 4;  // delta = 0.25
    const double expected = std::exp(0.5) * std::exp(0.25 * double(0.3f)) +
                            std::exp(double(0.1f)) * (kExampleNone - 1.0) * std::exp(0.25 * double(0.2f));
    CHECK(rel_close(score_pair(q, d, c), expected));
    c.delta_override = 1.0;
    CHECK(rel_close(score_pair(q, d, c), kExampleBoth));
}

TEST_CASE("keep masks skip query tokens and restrict document tokens", "[scoring]") {
    auto q = example_query();
    auto d = example_doc();
    q.keep_mask = std::vector<std::uint8_t>{0, 1};
    const double only_second = std::exp(double(0.1f)) * (kExampleNone - 1.0) * std::exp(double(0.2f));
    CHECK(rel_close(score_pair(q, d, with_mode(AttentionMode::both)), only_second));

    q.keep_mask.reset();
    d.keep_mask = std::vector<std::uint8_t>{0, 1};
    const auto details = explain_pair(q, d, with_mode(AttentionMode::both));
    CHECK(details[0].doc_token == 1);
    CHECK(details[1].doc_token == 1);

    d.keep_mask = std::vector<std::uint8_t>{0, 0};
    CHECK(error_of([&] { score_pair(q, d); })->kind() == ErrorKind::no_kept_tokens);
}

TEST_CASE("argmax ties resolve to the smallest document token", "[scoring]") {
    const auto q = make_record("q", Role::query, {{1.0f, 0.0f}}, {0.0f});
    const auto d = make_record("d", Role::document, {{0.0f, 1.0f}, {1.0f, 0.0f}, {1.0f, 0.0f}}, {0.0f, 0.1f, 0.9f});
    const auto details = explain_pair(q, d, with_mode(AttentionMode::both));
    CHECK(details[0].doc_token == 1);
}

TEST_CASE("pair errors", "[scoring]") {
    const auto q = example_query();
    const auto d = example_doc();
    const auto d3 = make_record("d3", Role::document, {{1.0f, 0.0f, 0.0f}}, {0.0f});
    CHECK(error_of([&] { score_pair(q, d3); })->kind() == ErrorKind::dim_mismatch);
    CHECK(error_of([&] { score_pair(d, d); })->kind() == ErrorKind::invalid_argument);
    CHECK(error_of([&] { score_pair(q, q); })->kind() == ErrorKind::invalid_argument);
}

TEST_CASE("zero attention collapses every mode to plain MaxSim", "[scoring][property]") {
    for (const auto& [q, d] : seeded_pairs(200, 11, true)) {
        const double none = score_pair(q, d, with_mode(AttentionMode::none, std::nullopt));
        for (auto mode : kAllModes) {
            CHECK(rel_close(score_pair(q, d, with_mode(mode, std::nullopt)), none));
        }
    }
}

TEST_CASE("selected document token is the same in every mode", "[scoring][property]") {
    for (const auto& [q, d] : seeded_pairs(200, 12)) {
        const auto base = explain_pair(q, d, with_mode(AttentionMode::none));
        for (auto mode : kAllModes) {
            const auto other = explain_pair(q, d, with_mode(mode, std::nullopt));
            REQUIRE(other.size() == base.size());
            for (std::size_t i = 0; i < base.size(); ++i) CHECK(other[i].doc_token == base[i].doc_token);
        }
    }
}

TEST_CASE("explanations sum to the pair score", "[scoring][property]") {
    for (const auto& [q, d] : seeded_pairs(100, 13)) {
        for (auto mode : kAllModes) {
            const auto config = with_mode(mode, std::nullopt);
            double sum = 0.0;
            for (const auto& m : explain_pair(q, d, config)) sum += m.contribution;
            CHECK(rel_close(sum, score_pair(q, d, config)));
        }
    }
}

TEST_CASE("score is invariant to token order", "[scoring][property]") {
    Rng rng(77);
    for (const auto& [q, d] : seeded_pairs(50, 14)) {
        auto permute = [&](const EmbeddedRecord& r) {
            std::vector<std::size_t> order(r.token_count());
            for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
            rng.shuffle(std::span(order));
            EmbeddedRecord p = r;
            p.embeddings.clear();
            p.attention.clear();
            if (p.keep_mask) p.keep_mask->clear();
            for (auto t : order) {
                auto row = r.row(t);
                p.embeddings.insert(p.embeddings.end(), row.begin(), row.end());
                p.attention.push_back(r.attention[t]);
                if (r.keep_mask) p.keep_mask->push_back((*r.keep_mask)[t]);
            }
            return p;
        };
        const auto pq = permute(q);
        const auto pd = permute(d);
        for (auto mode : kAllModes) {
            const auto config = with_mode(mode, std::nullopt);
            const double base = score_pair(q, d, config);
            // Ties between exactly equal cosines can pick a different token after permutation; random
            // unit vectors make that a measure-zero event.
            CHECK(std::abs(score_pair(pq, pd, config) - base) <= 1e-9 * std::max(1.0, std::abs(base)));
        }
    }
}

TEST_CASE("raising attention on a positively matched token raises the score", "[scoring][property]") {
    for (const auto& [q0, d0] : seeded_pairs(100, 15)) {
        const auto config = with_mode(AttentionMode::both, std::nullopt);
        const double base = score_pair(q0, d0, config);
        const auto details = explain_pair(q0, d0, config);
        for (const auto& m : details) {
            if (m.cosine <= 0.0) continue;
            auto q = q0;
            q.attention[m.query_token] += 0.25f;
            CHECK(score_pair(q, d0, config) > base);
            const bool all_positive = std::all_of(details.begin(), details.end(), [&](const MatchDetail& o) {
                return o.doc_token != m.doc_token || o.cosine > 0.0;
            });
            if (all_positive) {
                auto d = d0;
                d.attention[m.doc_token] += 0.25f;
                CHECK(score_pair(q0, d, config) > base);
            }
            break;
        }
    }
}

TEST_CASE("score magnitude is bounded by the attention multipliers", "[scoring][property]") {
    for (const auto& [q, d] : seeded_pairs(200, 16)) {
        const ScoringConfig config = with_mode(AttentionMode::both, std::nullopt);
        const double delta_eff = effective_delta(d, config);
        const double max_aq = *std::max_element(q.attention.begin(), q.attention.end());
        const double max_ad = *std::max_element(d.attention.begin(), d.attention.end());
        const double bound = double(q.kept_count()) * std::exp(max_aq) * std::exp(delta_eff * max_ad);
        CHECK(std::abs(score_pair(q, d, config)) <= bound * (1 + 1e-12));
    }
}
