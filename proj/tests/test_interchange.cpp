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

#include <cstring>
#include <functional>
#include <sstream>

#include "latte/latte.hpp"
#include "test_support.hpp"

using namespace latte;
using latte::testing::error_of;
using latte::testing::make_record;
using latte::testing::random_record;

namespace {

std::vector<EmbeddedRecord> random_records(std::uint64_t seed, std::size_t count, std::uint32_t dim) {
    Rng rng(seed);
    std::vector<EmbeddedRecord> records;
    for (std::size_t i = 0; i < count; ++i) {
        const bool query = rng.uniform01() < 0.3;
        const auto m = static_cast<std::uint32_t>(rng.between(1, query ? 32 : 60));
        records.push_back(random_record(rng, "r" + std::to_string(i), query ? Role::query : Role::document, dim, m,
                                        0.5, rng.uniform01() < 0.5));
    }
    return records;
}

}  // namespace

TEST_CASE("single record serializes to header plus record bytes and reads back", "[lire]") {
    const auto r = make_record("a", Role::document, {{0.6f, 0.8f}}, {0.25f});
    std::ostringstream out(std::ios::binary);
    const std::vector records{r};
    const auto written = write_records(records, out);
    const auto bytes = out.str();

    // header 4+4+4+8, record 1+2+1+4+4+1 + 2*4 + 1*4
    CHECK(kLireHeaderBytes == 20);
    CHECK(written == 20 + 13 + 8 + 4);
    CHECK(bytes.size() == written);
    CHECK(bytes.substr(0, 4) == "LIR1");

    std::uint32_t version = 0, dim = 0;
    std::uint64_t count = 0;
    std::memcpy(&version, bytes.data() + 4, 4);
    std::memcpy(&dim, bytes.data() + 8, 4);
    std::memcpy(&count, bytes.data() + 12, 8);
    CHECK(version == 1);
    CHECK(dim == 2);
    CHECK(count == 1);

    const auto back = read_records_from_bytes(bytes);
    REQUIRE(back.size() == 1);
    CHECK(back[0] == r);
}

TEST_CASE("empty sequence writes a valid zero-record file", "[lire]") {
    const auto bytes = write_records_to_bytes({});
    CHECK(bytes.size() == kLireHeaderBytes);
    CHECK(read_records_from_bytes(bytes).empty());
}

TEST_CASE("serialization is deterministic for 1000 records", "[lire]") {
    const auto records = random_records(7, 1000, 16);
    const auto first = write_records_to_bytes(records);
    const auto second = write_records_to_bytes(random_records(7, 1000, 16));
    CHECK(std::hash<std::string>{}(first) == std::hash<std::string>{}(second));
    CHECK(first == second);
}

TEST_CASE("round trip is bit-exact on seeded random records", "[lire][property]") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        Rng rng(seed);
        const auto dim = static_cast<std::uint32_t>(rng.between(1, 24));
        const auto records = random_records(seed + 100, rng.between(0, 12), dim);
        const auto bytes = write_records_to_bytes(records);
        const auto back = read_records_from_bytes(bytes);
        REQUIRE(back == records);
        CHECK(write_records_to_bytes(back) == bytes);
    }
}

TEST_CASE("three records round trip", "[lire]") {
    const auto records = random_records(3, 3, 8);
    CHECK(read_records_from_bytes(write_records_to_bytes(records)) == records);
}

TEST_CASE("truncated payload names the record index", "[lire]") {
    const auto records = random_records(5, 3, 8);
    const auto bytes = write_records_to_bytes(records);
    const auto first_two = write_records_to_bytes(std::span(records).first(2)).size();
    const auto cut = bytes.substr(0, first_two + 7);
    const auto err = error_of([&] { read_records_from_bytes(cut); });
    REQUIRE(err);
    CHECK(err->kind() == ErrorKind::truncated);
    CHECK(std::string(err->what()).find("record 2") != std::string::npos);

    const auto header_err = error_of([&] { read_records_from_bytes(bytes.substr(0, 10)); });
    REQUIRE(header_err);
    CHECK(header_err->kind() == ErrorKind::truncated);
}

TEST_CASE("reader distinguishes magic, version, non-finite and norm errors", "[lire]") {
    const auto r = make_record("x", Role::document, {{0.6f, 0.8f}, {1.0f, 0.0f}}, {0.1f, 0.2f});
    const std::vector records{r};
    const auto good = write_records_to_bytes(records);
    const std::size_t first_float = kLireHeaderBytes + 1 + 2 + 1 + 4 + 4 + 1;

    SECTION("bad magic") {
        auto bytes = good;
        bytes[3] = '2';
        CHECK(error_of([&] { read_records_from_bytes(bytes); })->kind() == ErrorKind::bad_magic);
    }
    SECTION("unsupported version") {
        auto bytes = good;
        bytes[4] = 2;
        CHECK(error_of([&] { read_records_from_bytes(bytes); })->kind() == ErrorKind::unsupported_version);
    }
    SECTION("NaN embedding") {
        auto bytes = good;
        const float nan = std::numeric_limits<float>::quiet_NaN();
        std::memcpy(bytes.data() + first_float, &nan, 4);
        CHECK(error_of([&] { read_records_from_bytes(bytes); })->kind() == ErrorKind::non_finite);
    }
    SECTION("infinite attention") {
        auto bytes = good;
        const float inf = std::numeric_limits<float>::infinity();
        std::memcpy(bytes.data() + first_float + 4 * 4, &inf, 4);
        CHECK(error_of([&] { read_records_from_bytes(bytes); })->kind() == ErrorKind::non_finite);
    }
    SECTION("norm 0.90 exceeds the ingestion gate") {
        auto bytes = good;
        const float row[2] = {0.54f, 0.72f};
        std::memcpy(bytes.data() + first_float, row, 8);
        const auto err = error_of([&] { read_records_from_bytes(bytes); });
        REQUIRE(err);
        CHECK(err->kind() == ErrorKind::norm_out_of_tolerance);
    }
    SECTION("norm within the gate is normalized on ingestion") {
        auto bytes = good;
        const float row[2] = {0.603f, 0.804f};  // norm 1.005
        std::memcpy(bytes.data() + first_float, row, 8);
        const auto back = read_records_from_bytes(bytes);
        CHECK(std::abs(row_norm(back[0].row(0)) - 1.0) <= kUnitNormTolerance);
        CHECK(back[0].row(0)[0] == Catch::Approx(0.6).epsilon(1e-6));
        CHECK(back[0].row(1)[0] == 1.0f);
    }
    SECTION("zero row") {
        auto bytes = good;
        const float row[2] = {0.0f, 0.0f};
        std::memcpy(bytes.data() + first_float, row, 8);
        CHECK(error_of([&] { read_records_from_bytes(bytes); })->kind() == ErrorKind::zero_norm);
    }
}

TEST_CASE("writer rejects mixed dims and invalid records with the offending id", "[lire]") {
    const auto a = make_record("a", Role::document, {{1.0f, 0.0f}}, {0.1f});
    const auto b = make_record("b", Role::document, {{1.0f, 0.0f, 0.0f}}, {0.1f});
    auto err = error_of([&] { write_records_to_bytes(std::vector{a, b}); });
    REQUIRE(err);
    CHECK(err->kind() == ErrorKind::mixed_dim);
    CHECK(std::string(err->what()).find("'b'") != std::string::npos);

    auto negative = make_record("neg", Role::document, {{1.0f, 0.0f}}, {-0.5f});
    err = error_of([&] { write_records_to_bytes(std::vector{negative}); });
    REQUIRE(err);
    CHECK(err->kind() == ErrorKind::invalid_record);
    CHECK(std::string(err->what()).find("'neg'") != std::string::npos);

    auto long_content = make_record("c", Role::document, {{1.0f, 0.0f}}, {0.1f}, 2);
    CHECK(error_of([&] { write_records_to_bytes(std::vector{long_content}); })->kind() == ErrorKind::invalid_record);

    auto unnormalized = make_record("u", Role::document, {{3.0f, 4.0f}}, {0.1f});
    CHECK(error_of([&] { write_records_to_bytes(std::vector{unnormalized}); })->kind() ==
          ErrorKind::norm_out_of_tolerance);

    auto empty_id = make_record("", Role::document, {{1.0f, 0.0f}}, {0.1f});
    CHECK(error_of([&] { write_records_to_bytes(std::vector{empty_id}); })->kind() == ErrorKind::invalid_record);
}

TEST_CASE("token caps apply per role and are configurable", "[lire]") {
    Rng rng(1);
    const auto query = random_record(rng, "q", Role::query, 4, 33);
    const std::vector records{query};
    CHECK(error_of([&] { write_records_to_bytes(records); })->kind() == ErrorKind::invalid_record);

    RecordLimits wide;
    wide.max_query_tokens = 300;
    const auto bytes = write_records_to_bytes(records, wide);
    CHECK(error_of([&] { read_records_from_bytes(bytes); })->kind() == ErrorKind::invalid_record);
    CHECK(read_records_from_bytes(bytes, wide) == records);

    const auto doc = random_record(rng, "d", Role::document, 4, 300);
    CHECK_NOTHROW(write_records_to_bytes(std::vector{doc}));
    const auto big = random_record(rng, "d2", Role::document, 4, 301);
    CHECK_THROWS_AS(write_records_to_bytes(std::vector{big}), Error);
}

TEST_CASE("normalize_embeddings rescales rows and leaves attention alone", "[normalize]") {
    SECTION("3-4-5 row") {
        auto r = normalize_embeddings(make_record("a", Role::document, {{3.0f, 4.0f}}, {0.7f}, 1));
        CHECK(r.row(0)[0] == Catch::Approx(0.6).margin(1e-7));
        CHECK(r.row(0)[1] == Catch::Approx(0.8).margin(1e-7));
        CHECK(r.attention[0] == 0.7f);
        CHECK(r.content_len == 1);
    }
    SECTION("unit rows are unchanged") {
        const auto r = make_record("a", Role::document, {{1.0f, 0.0f}, {0.6f, 0.8f}}, {0.1f, 0.2f});
        const auto n = normalize_embeddings(r);
        for (std::size_t i = 0; i < r.embeddings.size(); ++i) {
            CHECK(std::abs(n.embeddings[i] - r.embeddings[i]) <= 1e-7);
        }
    }
    SECTION("seeded random rows end up unit norm") {
        Rng rng(99);
        EmbeddedRecord r;
        r.id = "big";
        r.dim = 12;
        for (int t = 0; t < 100; ++t) {
            const double scale = rng.uniform(0.01, 50.0);
            for (int d = 0; d < 12; ++d) r.embeddings.push_back(static_cast<float>(scale * rng.normal()));
            r.attention.push_back(0.0f);
        }
        r.content_len = 100;
        const auto n = normalize_embeddings(r);
        for (std::size_t t = 0; t < 100; ++t) CHECK(std::abs(row_norm(n.row(t)) - 1.0) <= 1e-6);
    }
    SECTION("zero row reports its index") {
        const auto r = make_record("z", Role::document, {{1.0f, 0.0f}, {0.0f, 0.0f}}, {0.0f, 0.0f});
        const auto err = error_of([&] { normalize_embeddings(r); });
        REQUIRE(err);
        CHECK(err->kind() == ErrorKind::zero_norm);
        CHECK(std::string(err->what()).find("row 1") != std::string::npos);
    }
}

TEST_CASE("qrels parsing", "[qrels]") {
    SECTION("single line") {
        std::istringstream in("q1\td7\t1\n");
        const auto qrels = read_qrels(in);
        REQUIRE(qrels.size() == 1);
        REQUIRE(qrels.find("q1"));
        CHECK(qrels.find("q1")->at("d7") == 1);
    }
    SECTION("duplicate pair") {
        std::istringstream in("q1\td7\t1\nq1\td7\t2\n");
        const auto err = error_of([&] { read_qrels(in); });
        REQUIRE(err);
        CHECK(err->kind() == ErrorKind::duplicate_entry);
        CHECK(std::string(err->what()).find("line 2") != std::string::npos);
    }
    SECTION("malformed line reports its number") {
        std::istringstream in("q1\td1\t1\nq1\td2\t0\nq1 d3 x\n");
        const auto err = error_of([&] { read_qrels(in); });
        REQUIRE(err);
        CHECK(err->kind() == ErrorKind::malformed_line);
        CHECK(std::string(err->what()).find("line 3") != std::string::npos);
    }
    SECTION("negative relevance") {
        std::istringstream in("q1\td1\t-1\n");
        CHECK(error_of([&] { read_qrels(in); })->kind() == ErrorKind::malformed_line);
    }
}

TEST_CASE("run file parsing", "[run]") {
    std::istringstream in("q1 Q0 d7 1 3.3055 latte\n");
    const auto run = read_run(in);
    REQUIRE(run.size() == 1);
    CHECK(run[0] == RunEntry{"q1", "d7", 1, 3.3055, "latte"});

    std::istringstream bad("q1 Q0 d7 1 3.3055 latte\nq1 Q0 d8 zero 1.0 latte\n");
    const auto err = error_of([&] { read_run(bad); });
    REQUIRE(err);
    CHECK(err->kind() == ErrorKind::malformed_line);
    CHECK(std::string(err->what()).find("line 2") != std::string::npos);

    std::istringstream short_line("q1 Q0 d7 1 3.3\n");
    CHECK(error_of([&] { read_run(short_line); })->kind() == ErrorKind::malformed_line);
}

TEST_CASE("qrels and run files round trip", "[qrels][run][property]") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        Rng rng(seed);
        Qrels qrels;
        std::vector<RunEntry> run;
        for (int q = 0; q < 5; ++q) {
            const std::string qid = "q" + std::to_string(q);
            for (std::uint32_t d = 0; d < 8; ++d) {
                if (rng.uniform01() < 0.5) qrels.add(qid, "d" + std::to_string(d), static_cast<int>(rng.below(4)));
                run.push_back({qid, "d" + std::to_string(rng.below(1000)), d + 1,
                               rng.normal() * std::pow(10.0, rng.uniform(-8, 8)), "tag" + std::to_string(seed)});
            }
        }
        std::ostringstream qout, rout;
        write_qrels(qrels, qout);
        write_run(run, rout);
        std::istringstream qin(qout.str()), rin(rout.str());
        CHECK(read_qrels(qin) == qrels);
        CHECK(read_run(rin) == run);
    }
}

TEST_CASE("validate_run enforces rank and tie order", "[run]") {
    std::vector<RunEntry> ok{{"q1", "a", 1, 2.0, "t"}, {"q1", "b", 2, 2.0, "t"}, {"q1", "c", 3, 1.0, "t"},
                             {"q2", "a", 1, 5.0, "t"}};
    CHECK_NOTHROW(validate_run(ok));
    auto tie_order = ok;
    std::swap(tie_order[0].doc_id, tie_order[1].doc_id);
    CHECK_THROWS_AS(validate_run(tie_order), Error);
    auto gap = ok;
    gap[2].rank = 4;
    CHECK_THROWS_AS(validate_run(gap), Error);
    auto rising = ok;
    rising[2].score = 3.0;
    CHECK_THROWS_AS(validate_run(rising), Error);
}
