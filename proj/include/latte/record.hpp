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

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "latte/error.hpp"

namespace latte {

enum class Role : std::uint8_t { query = 0, document = 1 };

inline const char* to_string(Role role) { return role == Role::query ? "query" : "document"; }

/// Token budgets. Queries are padded to 32 slots and documents truncated at 300.
struct RecordLimits {
    std::uint32_t max_query_tokens = 32;
    std::uint32_t max_document_tokens = 300;
};

/// Tolerance on row norms once a record has been ingested.
inline constexpr double kUnitNormTolerance = 1e-4;
/// Rows further than this from unit norm before normalization indicate a corrupt export.
inline constexpr double kIngestNormGate = 1e-2;

/// One encoded query or document: m token embeddings of width dim (row-major), one attention
/// weight per token, and the number of content tokens (padding excluded).
struct EmbeddedRecord {
    std::string id;
    Role role = Role::document;
    std::uint32_t dim = 0;
    std::vector<float> embeddings;
    std::vector<float> attention;
    std::uint32_t content_len = 0;
    /// Absent means every token participates. Stored as bytes (0/1), matching the file layout.
    std::optional<std::vector<std::uint8_t>> keep_mask;

    std::size_t token_count() const noexcept { return attention.size(); }

    std::span<const float> row(std::size_t token) const {
        return {embeddings.data() + token * dim, dim};
    }
    std::span<float> row(std::size_t token) { return {embeddings.data() + token * dim, dim}; }

    bool kept(std::size_t token) const noexcept { return !keep_mask || (*keep_mask)[token] != 0; }

    std::size_t kept_count() const noexcept {
        if (!keep_mask) return token_count();
        std::size_t n = 0;
        for (auto flag : *keep_mask) n += flag != 0;
        return n;
    }

    bool operator==(const EmbeddedRecord&) const = default;
};

inline double row_norm(std::span<const float> row) {
    double sum = 0.0;
    for (float x : row) sum += static_cast<double>(x) * static_cast<double>(x);
    return std::sqrt(sum);
}

/// Rescales every embedding row to unit norm. Attention and content_len are left untouched.
inline EmbeddedRecord normalize_embeddings(EmbeddedRecord record) {
    for (std::size_t t = 0; t < record.token_count(); ++t) {
        auto row = record.row(t);
        double norm = row_norm(row);
        if (norm == 0.0) {
            throw Error(ErrorKind::zero_norm, "record '" + record.id + "' row " + std::to_string(t));
        }
        for (float& x : row) x = static_cast<float>(static_cast<double>(x) / norm);
    }
    return record;
}

namespace detail {

inline std::string record_label(const EmbeddedRecord& record) { return "record '" + record.id + "'"; }

}  // namespace detail

/// Checks every structural and numeric invariant except row norms, which callers gate
/// differently before and after normalization.
inline void validate_structure(const EmbeddedRecord& record, const RecordLimits& limits = {}) {
    const auto label = detail::record_label(record);
    if (record.id.empty()) throw Error(ErrorKind::invalid_record, "empty record id");
    if (record.id.size() > 0xFFFF) throw Error(ErrorKind::invalid_record, label + ": id longer than 65535 bytes");
    if (record.dim == 0) throw Error(ErrorKind::invalid_record, label + ": dim must be positive");
    const std::size_t m = record.token_count();
    if (m == 0) throw Error(ErrorKind::invalid_record, label + ": no tokens");
    if (record.embeddings.size() != m * record.dim) {
        throw Error(ErrorKind::invalid_record, label + ": embedding matrix is not m x dim");
    }
    if (record.keep_mask && record.keep_mask->size() != m) {
        throw Error(ErrorKind::invalid_record, label + ": keep_mask length differs from token count");
    }
    if (record.keep_mask) {
        for (auto flag : *record.keep_mask) {
            if (flag > 1) throw Error(ErrorKind::invalid_record, label + ": keep_mask entries must be 0 or 1");
        }
    }
    if (record.content_len < 1 || record.content_len > m) {
        throw Error(ErrorKind::invalid_record, label + ": content_len must lie in [1, token count]");
    }
    const std::uint32_t cap = record.role == Role::query ? limits.max_query_tokens : limits.max_document_tokens;
    if (m > cap) {
        throw Error(ErrorKind::invalid_record,
                    label + ": " + std::to_string(m) + " tokens exceeds the " + to_string(record.role) + " cap of " +
                        std::to_string(cap));
    }
    for (float x : record.embeddings) {
        if (!std::isfinite(x)) throw Error(ErrorKind::non_finite, label + ": embedding value");
    }
    for (float a : record.attention) {
        if (!std::isfinite(a)) throw Error(ErrorKind::non_finite, label + ": attention value");
        if (a < 0.0f) throw Error(ErrorKind::invalid_record, label + ": negative attention weight");
    }
}

/// Throws norm_out_of_tolerance when any row deviates from unit norm by more than `tolerance`.
inline void check_row_norms(const EmbeddedRecord& record, double tolerance) {
    for (std::size_t t = 0; t < record.token_count(); ++t) {
        double norm = row_norm(record.row(t));
        if (norm == 0.0) {
            throw Error(ErrorKind::zero_norm, detail::record_label(record) + " row " + std::to_string(t));
        }
        if (std::abs(norm - 1.0) > tolerance) {
            throw Error(ErrorKind::norm_out_of_tolerance, detail::record_label(record) + " row " + std::to_string(t) +
                                                              " has norm " + std::to_string(norm));
        }
    }
}

/// Full invariant check for an ingested record.
inline void validate_record(const EmbeddedRecord& record, const RecordLimits& limits = {}) {
    validate_structure(record, limits);
    check_row_norms(record, kUnitNormTolerance);
}

}  // namespace latte
