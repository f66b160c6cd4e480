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

// Text formats for relevance judgments (qrels TSV) and ranked runs (TREC six-column run files).

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "latte/error.hpp"

namespace latte {

class Qrels {
public:
    using Judgments = std::map<std::string, int, std::less<>>;

    void add(const std::string& query_id, const std::string& doc_id, int relevance) {
        if (relevance < 0) {
            throw Error(ErrorKind::invalid_argument, "negative relevance for (" + query_id + ", " + doc_id + ")");
        }
        auto [it, inserted] = by_query_[query_id].emplace(doc_id, relevance);
        if (!inserted) throw Error(ErrorKind::duplicate_entry, "qrel (" + query_id + ", " + doc_id + ")");
        ++size_;
    }

    /// Judgments for one query, or nullptr when the query has none.
    const Judgments* find(std::string_view query_id) const {
        auto it = by_query_.find(query_id);
        return it == by_query_.end() ? nullptr : &it->second;
    }

    const std::map<std::string, Judgments, std::less<>>& queries() const noexcept { return by_query_; }
    std::size_t size() const noexcept { return size_; }
    bool empty() const noexcept { return size_ == 0; }

    bool operator==(const Qrels&) const = default;

private:
    std::map<std::string, Judgments, std::less<>> by_query_;
    std::size_t size_ = 0;
};

struct RunEntry {
    std::string query_id;
    std::string doc_id;
    std::uint32_t rank = 0;
    double score = 0.0;
    std::string tag;

    bool operator==(const RunEntry&) const = default;
};

namespace detail {

inline std::string_view strip_cr(std::string_view line) {
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    return line;
}

inline bool is_blank(std::string_view line) {
    return line.find_first_not_of(" \t") == std::string_view::npos;
}

inline Error malformed(std::size_t line_no, const std::string& what) {
    return Error(ErrorKind::malformed_line, "line " + std::to_string(line_no) + ": " + what);
}

template <typename T>
bool parse_number(std::string_view text, T& value) {
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    return ec == std::errc{} && ptr == text.data() + text.size();
}

inline std::vector<std::string_view> split_whitespace(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t pos = 0;
    while (pos < line.size()) {
        pos = line.find_first_not_of(" \t", pos);
        if (pos == std::string_view::npos) break;
        auto end = line.find_first_of(" \t", pos);
        if (end == std::string_view::npos) end = line.size();
        fields.push_back(line.substr(pos, end - pos));
        pos = end;
    }
    return fields;
}

}  // namespace detail

/// Shortest decimal text that parses back to exactly `value`.
inline std::string format_double(double value) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, ptr);
}

/// Parses "query_id<TAB>doc_id<TAB>relevance" lines. Blank lines are ignored.
inline Qrels read_qrels(std::istream& in) {
    Qrels qrels;
    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        std::string_view line = detail::strip_cr(raw);
        if (detail::is_blank(line)) continue;
        auto t1 = line.find('\t');
        auto t2 = t1 == std::string_view::npos ? t1 : line.find('\t', t1 + 1);
        if (t2 == std::string_view::npos || line.find('\t', t2 + 1) != std::string_view::npos) {
            throw detail::malformed(line_no, "expected 3 tab-separated fields");
        }
        auto query_id = line.substr(0, t1);
        auto doc_id = line.substr(t1 + 1, t2 - t1 - 1);
        int relevance = 0;
        if (query_id.empty() || doc_id.empty()) throw detail::malformed(line_no, "empty identifier");
        if (!detail::parse_number(line.substr(t2 + 1), relevance) || relevance < 0) {
            throw detail::malformed(line_no, "relevance must be a non-negative integer");
        }
        try {
            qrels.add(std::string(query_id), std::string(doc_id), relevance);
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::duplicate_entry) throw;
            throw Error(ErrorKind::duplicate_entry,
                        "line " + std::to_string(line_no) + ": (" + std::string(query_id) + ", " +
                            std::string(doc_id) + ")");
        }
    }
    return qrels;
}

inline void write_qrels(const Qrels& qrels, std::ostream& out) {
    for (const auto& [query_id, judgments] : qrels.queries()) {
        for (const auto& [doc_id, rel] : judgments) out << query_id << '\t' << doc_id << '\t' << rel << '\n';
    }
}

/// Writes "query_id Q0 doc_id rank score tag" lines in the order given.
inline void write_run(const std::vector<RunEntry>& entries, std::ostream& out) {
    for (const auto& e : entries) {
        out << e.query_id << " Q0 " << e.doc_id << ' ' << e.rank << ' ' << format_double(e.score) << ' ' << e.tag
            << '\n';
    }
}

inline std::vector<RunEntry> read_run(std::istream& in) {
    std::vector<RunEntry> entries;
    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        std::string_view line = detail::strip_cr(raw);
        if (detail::is_blank(line)) continue;
        auto fields = detail::split_whitespace(line);
        if (fields.size() != 6) throw detail::malformed(line_no, "expected 6 whitespace-separated fields");
        RunEntry e;
        e.query_id = fields[0];
        e.doc_id = fields[2];
        if (!detail::parse_number(fields[3], e.rank) || e.rank == 0) {
            throw detail::malformed(line_no, "rank must be a positive integer");
        }
        if (!detail::parse_number(fields[4], e.score)) throw detail::malformed(line_no, "score is not a number");
        e.tag = fields[5];
        entries.push_back(std::move(e));
    }
    return entries;
}

/// Checks per-query run ordering: ranks 1..k in sequence, scores non-increasing, ties by ascending doc_id.
/// Entries of one query must be contiguous.
inline void validate_run(const std::vector<RunEntry>& entries) {
    std::map<std::string, bool, std::less<>> seen;
    for (std::size_t i = 0; i < entries.size(); ++i) {
        const auto& e = entries[i];
        const bool continues = i > 0 && entries[i - 1].query_id == e.query_id;
        if (!continues) {
            if (seen.contains(e.query_id)) {
                throw Error(ErrorKind::invalid_argument, "entries of query '" + e.query_id + "' are not contiguous");
            }
            seen.emplace(e.query_id, true);
            if (e.rank != 1) throw Error(ErrorKind::invalid_argument, "query '" + e.query_id + "' does not start at rank 1");
            continue;
        }
        const auto& prev = entries[i - 1];
        if (e.rank != prev.rank + 1) {
            throw Error(ErrorKind::invalid_argument, "query '" + e.query_id + "' ranks are not consecutive");
        }
        if (e.score > prev.score || (e.score == prev.score && e.doc_id <= prev.doc_id)) {
            throw Error(ErrorKind::invalid_argument, "query '" + e.query_id + "' violates score/tie ordering at rank " +
                                                         std::to_string(e.rank));
        }
    }
}

inline Qrels read_qrels_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::io, "cannot open " + path.string());
    return read_qrels(in);
}

inline std::vector<RunEntry> read_run_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::io, "cannot open " + path.string());
    return read_run(in);
}

}  // namespace latte
