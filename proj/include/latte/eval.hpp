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
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "latte/error.hpp"
#include "latte/trec.hpp"

namespace latte {

/// Fraction of relevant documents found in the top k. nullopt (query skipped) when `relevant` is empty.
inline std::optional<double> recall_at_k(std::span<const std::string> ranking, const std::set<std::string>& relevant,
                                         std::size_t k) {
    if (k < 1) throw Error(ErrorKind::invalid_argument, "k must be >= 1");
    if (relevant.empty()) return std::nullopt;
    std::unordered_set<std::string_view> found;
    for (std::size_t r = 0; r < std::min(k, ranking.size()); ++r) {
        if (relevant.contains(ranking[r])) found.insert(ranking[r]);
    }
    return static_cast<double>(found.size()) / static_cast<double>(relevant.size());
}

/// 1 when any relevant document appears in the top k, else 0.
inline std::optional<double> success_at_k(std::span<const std::string> ranking, const std::set<std::string>& relevant,
                                          std::size_t k = 5) {
    if (k < 1) throw Error(ErrorKind::invalid_argument, "k must be >= 1");
    if (relevant.empty()) return std::nullopt;
    for (std::size_t r = 0; r < std::min(k, ranking.size()); ++r) {
        if (relevant.contains(ranking[r])) return 1.0;
    }
    return 0.0;
}

/// nDCG@k with gain 2^rel - 1 and discount log2(rank + 1). nullopt when no document has rel > 0.
/// A document repeated in `ranking` only earns gain at its first position.
inline std::optional<double> ndcg_at_k(std::span<const std::string> ranking, const Qrels::Judgments& grades,
                                       std::size_t k = 10) {
    if (k < 1) throw Error(ErrorKind::invalid_argument, "k must be >= 1");
    auto gain = [](int rel) { return std::exp2(static_cast<double>(rel)) - 1.0; };

    std::vector<int> ideal;
    for (const auto& [doc, rel] : grades) {
        if (rel > 0) ideal.push_back(rel);
    }
    if (ideal.empty()) return std::nullopt;
    std::sort(ideal.begin(), ideal.end(), std::greater<>());
    double ideal_dcg = 0.0;
    for (std::size_t r = 0; r < std::min(k, ideal.size()); ++r) ideal_dcg += gain(ideal[r]) / std::log2(r + 2.0);

    double dcg = 0.0;
    std::unordered_set<std::string_view> seen;
    for (std::size_t r = 0; r < std::min(k, ranking.size()); ++r) {
        if (!seen.insert(ranking[r]).second) continue;
        auto it = grades.find(ranking[r]);
        if (it != grades.end() && it->second > 0) dcg += gain(it->second) / std::log2(r + 2.0);
    }
    return dcg / ideal_dcg;
}

enum class MetricKind : std::uint8_t { recall, success, ndcg };

struct MetricSpec {
    MetricKind kind = MetricKind::recall;
    std::uint32_t k = 10;

    std::string name() const {
        const char* base = kind == MetricKind::recall ? "recall" : kind == MetricKind::success ? "success" : "ndcg";
        return std::string(base) + "@" + std::to_string(k);
    }

    bool operator==(const MetricSpec&) const = default;
};

/// Parses "recall@K", "success@K" or "ndcg@K" (case-sensitive, K >= 1).
inline MetricSpec parse_metric(std::string_view text) {
    auto at = text.find('@');
    if (at == std::string_view::npos) throw Error(ErrorKind::invalid_argument, "metric '" + std::string(text) + "'");
    MetricSpec spec;
    auto base = text.substr(0, at);
    if (base == "recall") spec.kind = MetricKind::recall;
    else if (base == "success") spec.kind = MetricKind::success;
    else if (base == "ndcg") spec.kind = MetricKind::ndcg;
    else throw Error(ErrorKind::invalid_argument, "unknown metric '" + std::string(text) + "'");
    if (!detail::parse_number(text.substr(at + 1), spec.k) || spec.k < 1) {
        throw Error(ErrorKind::invalid_argument, "metric '" + std::string(text) + "' needs a positive cutoff");
    }
    return spec;
}

struct MetricReport {
    /// query id -> metric name -> value
    std::map<std::string, std::map<std::string, double>> per_query;
    /// metric name -> unweighted mean over the queries scored for that metric
    std::map<std::string, double> aggregate;
    /// metric name -> number of queries contributing to the aggregate
    std::map<std::string, std::size_t> scored;
    /// metric name -> number of run queries skipped (no judgments, or none relevant)
    std::map<std::string, std::size_t> skipped;
    /// Queries scored for at least one metric.
    std::size_t query_count = 0;
};

/// Scores every query present in `run`. Lines within a query are ordered by the rank column, so input
/// line order does not matter.
inline MetricReport evaluate_run(const std::vector<RunEntry>& run, const Qrels& qrels,
                                 std::span<const MetricSpec> metrics) {
    std::map<std::string, std::vector<const RunEntry*>> by_query;
    for (const auto& e : run) by_query[e.query_id].push_back(&e);

    MetricReport report;
    std::map<std::string, double> sums;
    for (const auto& m : metrics) {
        report.scored[m.name()] = 0;
        report.skipped[m.name()] = 0;
    }
    for (auto& [query_id, entries] : by_query) {
        std::stable_sort(entries.begin(), entries.end(), [](const RunEntry* a, const RunEntry* b) {
            if (a->rank != b->rank) return a->rank < b->rank;
            return a->doc_id < b->doc_id;
        });
        std::vector<std::string> ranking;
        ranking.reserve(entries.size());
        for (const auto* e : entries) ranking.push_back(e->doc_id);

        const Qrels::Judgments* grades = qrels.find(query_id);
        std::set<std::string> relevant;
        if (grades) {
            for (const auto& [doc, rel] : *grades) {
                if (rel > 0) relevant.insert(doc);
            }
        }
        bool any = false;
        for (const auto& m : metrics) {
            const auto name = m.name();
            std::optional<double> value;
            if (grades) {
                switch (m.kind) {
                    case MetricKind::recall: value = recall_at_k(ranking, relevant, m.k); break;
                    case MetricKind::success: value = success_at_k(ranking, relevant, m.k); break;
                    case MetricKind::ndcg: value = ndcg_at_k(ranking, *grades, m.k); break;
                }
            }
            if (!value) {
                ++report.skipped[name];
                continue;
            }
            report.per_query[query_id][name] = *value;
            sums[name] += *value;
            ++report.scored[name];
            any = true;
        }
        report.query_count += any;
    }
    for (const auto& m : metrics) {
        const auto name = m.name();
        const auto n = report.scored[name];
        report.aggregate[name] = n == 0 ? 0.0 : sums[name] / static_cast<double>(n);
    }
    return report;
}

/// Mean across several reports weighted by how many queries each scored per metric.
inline MetricReport combine_reports(std::span<const MetricReport> reports) {
    MetricReport combined;
    std::map<std::string, double> weighted;
    for (const auto& r : reports) {
        for (const auto& [name, value] : r.aggregate) {
            const auto n = r.scored.contains(name) ? r.scored.at(name) : 0;
            weighted[name] += value * static_cast<double>(n);
            combined.scored[name] += n;
            combined.skipped[name] += r.skipped.contains(name) ? r.skipped.at(name) : 0;
        }
        combined.query_count += r.query_count;
    }
    for (const auto& [name, total] : weighted) {
        const auto n = combined.scored[name];
        combined.aggregate[name] = n == 0 ? 0.0 : total / static_cast<double>(n);
    }
    return combined;
}

/// TSV lines "metric<TAB>query_id<TAB>value": per-query rows first, then one "ALL" row per metric.
inline void write_report(const MetricReport& report, std::ostream& out) {
    for (const auto& [name, mean] : report.aggregate) {
        for (const auto& [query_id, values] : report.per_query) {
            auto it = values.find(name);
            if (it != values.end()) out << name << '\t' << query_id << '\t' << format_double(it->second) << '\n';
        }
    }
    for (const auto& [name, mean] : report.aggregate) out << name << "\tALL\t" << format_double(mean) << '\n';
}

/// Inverse of write_report. Scored counts are recovered from the per-query rows; skip tallies are not
/// part of the file and come back as zero.
inline MetricReport read_report(std::istream& in) {
    MetricReport report;
    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        std::string_view line = detail::strip_cr(raw);
        if (detail::is_blank(line)) continue;
        auto fields = detail::split_whitespace(line);
        double value = 0.0;
        if (fields.size() != 3 || !detail::parse_number(fields[2], value)) {
            throw detail::malformed(line_no, "expected 'metric<TAB>query_id<TAB>value'");
        }
        std::string name(fields[0]);
        if (fields[1] == "ALL") {
            report.aggregate[name] = value;
        } else {
            report.per_query[std::string(fields[1])][name] = value;
            ++report.scored[name];
        }
    }
    for (const auto& [name, mean] : report.aggregate) {
        report.scored.try_emplace(name, 0);
        report.skipped.try_emplace(name, 0);
    }
    report.query_count = report.per_query.size();
    return report;
}

}  // namespace latte
