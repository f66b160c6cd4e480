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

// Token-level spherical k-means used for candidate pruning, and its "LIC1" sidecar file:
//   "LIC1" | K u32 | dim u32 | K*dim f32 | per document: token_count u32, token_count x u32 assignment

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "latte/error.hpp"
#include "latte/lire.hpp"
#include "latte/random.hpp"
#include "latte/record.hpp"

namespace latte {

inline constexpr std::array<char, 4> kCentroidMagic{'L', 'I', 'C', '1'};
inline constexpr int kKMeansMaxIterations = 25;

struct CentroidTable {
    std::uint32_t dim = 0;
    /// K unit vectors, row-major.
    std::vector<float> centroids;
    /// assignments[doc][token] = index of the nearest centroid by cosine.
    std::vector<std::vector<std::uint32_t>> assignments;

    std::size_t size() const noexcept { return dim == 0 ? 0 : centroids.size() / dim; }
    std::span<const float> centroid(std::size_t c) const { return {centroids.data() + c * dim, dim}; }

    bool operator==(const CentroidTable&) const = default;
};

namespace detail {

inline double dot(std::span<const float> a, std::span<const float> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += static_cast<double>(a[i]) * static_cast<double>(b[i]);
    return s;
}

/// Nearest centroid by dot product; ties go to the smallest centroid index.
inline std::uint32_t nearest_centroid(std::span<const float> v, const std::vector<float>& centroids, std::size_t k,
                                      std::uint32_t dim, double* best_out = nullptr) {
    std::uint32_t best = 0;
    double best_dot = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < k; ++c) {
        double d = dot(v, {centroids.data() + c * dim, dim});
        if (d > best_dot) {
            best_dot = d;
            best = static_cast<std::uint32_t>(c);
        }
    }
    if (best_out) *best_out = best_dot;
    return best;
}

}  // namespace detail

/// Spherical k-means over every token of `docs`.
///
/// Initialization draws K distinct tokens with a partial Fisher-Yates shuffle. Each of at most 25
/// rounds assigns tokens to their nearest centroid, then replaces each centroid by its normalized
/// member mean. A cluster left empty (or with a zero mean) is re-seeded from the token farthest from
/// its own centroid, lowest cosine first and smallest token index on ties, skipping tokens already
/// used as re-seeds in that round. Iteration stops early once assignments stop changing.
inline CentroidTable train_centroids(std::span<const EmbeddedRecord> docs, std::uint32_t k, std::uint64_t seed) {
    if (docs.empty()) throw Error(ErrorKind::invalid_argument, "k-means needs at least one document");
    const std::uint32_t dim = docs.front().dim;

    std::vector<std::span<const float>> tokens;
    for (const auto& doc : docs) {
        for (std::size_t t = 0; t < doc.token_count(); ++t) tokens.push_back(doc.row(t));
    }
    const std::size_t n = tokens.size();
    if (k == 0) throw Error(ErrorKind::invalid_argument, "centroid count must be positive");
    if (k > n) {
        throw Error(ErrorKind::invalid_argument, "centroid count " + std::to_string(k) + " exceeds total token count " +
                                                     std::to_string(n));
    }

    Rng rng(seed);
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::vector<float> centroids(static_cast<std::size_t>(k) * dim);
    for (std::size_t c = 0; c < k; ++c) {
        std::size_t j = c + rng.below(n - c);
        std::swap(order[c], order[j]);
        std::copy(tokens[order[c]].begin(), tokens[order[c]].end(), centroids.begin() + c * dim);
    }

    std::vector<std::uint32_t> assign(n, std::numeric_limits<std::uint32_t>::max());
    std::vector<double> similarity(n);
    for (int iter = 0; iter < kKMeansMaxIterations; ++iter) {
        bool changed = false;
        for (std::size_t t = 0; t < n; ++t) {
            auto c = detail::nearest_centroid(tokens[t], centroids, k, dim, &similarity[t]);
            changed |= c != assign[t];
            assign[t] = c;
        }
        if (!changed) break;

        std::vector<double> sums(static_cast<std::size_t>(k) * dim, 0.0);
        std::vector<std::size_t> counts(k, 0);
        for (std::size_t t = 0; t < n; ++t) {
            ++counts[assign[t]];
            for (std::uint32_t d = 0; d < dim; ++d) sums[assign[t] * dim + d] += tokens[t][d];
        }
        std::vector<bool> reseeded(n, false);
        for (std::size_t c = 0; c < k; ++c) {
            double norm = 0.0;
            for (std::uint32_t d = 0; d < dim; ++d) norm += sums[c * dim + d] * sums[c * dim + d];
            norm = std::sqrt(norm);
            if (counts[c] > 0 && norm > 0.0) {
                for (std::uint32_t d = 0; d < dim; ++d) {
                    centroids[c * dim + d] = static_cast<float>(sums[c * dim + d] / norm);
                }
                continue;
            }
            std::size_t farthest = n;
            for (std::size_t t = 0; t < n; ++t) {
                if (reseeded[t]) continue;
                if (farthest == n || similarity[t] < similarity[farthest]) farthest = t;
            }
            reseeded[farthest] = true;
            std::copy(tokens[farthest].begin(), tokens[farthest].end(), centroids.begin() + c * dim);
        }
    }

    CentroidTable table;
    table.dim = dim;
    table.centroids = std::move(centroids);
    table.assignments.reserve(docs.size());
    for (const auto& doc : docs) {
        std::vector<std::uint32_t> doc_assign(doc.token_count());
        for (std::size_t t = 0; t < doc.token_count(); ++t) {
            doc_assign[t] = detail::nearest_centroid(doc.row(t), table.centroids, k, dim);
        }
        table.assignments.push_back(std::move(doc_assign));
    }
    return table;
}

inline void write_centroids(const CentroidTable& table, std::ostream& out) {
    out.write(kCentroidMagic.data(), kCentroidMagic.size());
    detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(table.size()));
    detail::put_le<std::uint32_t>(out, table.dim);
    detail::put_f32s(out, table.centroids);
    for (const auto& doc : table.assignments) {
        detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(doc.size()));
        for (auto a : doc) detail::put_le<std::uint32_t>(out, a);
    }
    if (!out) throw Error(ErrorKind::io, "failed writing centroid table");
}

/// Reads a sidecar written for `docs`; token counts and dim must agree with them.
inline CentroidTable read_centroids(std::istream& in, std::span<const EmbeddedRecord> docs) {
    detail::ByteReader reader(in);
    std::array<char, 4> magic{};
    reader.read_exact(magic.data(), magic.size(), "centroid header");
    if (magic != kCentroidMagic) throw Error(ErrorKind::bad_magic, "stream does not start with LIC1");
    const auto k = reader.get<std::uint32_t>("centroid header");
    CentroidTable table;
    table.dim = reader.get<std::uint32_t>("centroid header");
    if (k == 0 || table.dim == 0) throw Error(ErrorKind::invalid_record, "centroid table with K or dim of 0");
    if (!docs.empty() && docs.front().dim != table.dim) {
        throw Error(ErrorKind::dim_mismatch, "centroid dim " + std::to_string(table.dim) + " vs document dim " +
                                                 std::to_string(docs.front().dim));
    }
    table.centroids.resize(static_cast<std::size_t>(k) * table.dim);
    reader.get_f32s(table.centroids, "centroid vectors");
    for (std::size_t c = 0; c < k; ++c) {
        double norm = row_norm(table.centroid(c));
        if (!std::isfinite(norm) || std::abs(norm - 1.0) > kUnitNormTolerance) {
            throw Error(ErrorKind::norm_out_of_tolerance, "centroid " + std::to_string(c));
        }
    }
    for (std::size_t d = 0; d < docs.size(); ++d) {
        const std::string context = "centroid assignments of document " + std::to_string(d);
        const auto count = reader.get<std::uint32_t>(context);
        if (count != docs[d].token_count()) {
            throw Error(ErrorKind::invalid_record, context + ": token count " + std::to_string(count) +
                                                       " differs from the document's " +
                                                       std::to_string(docs[d].token_count()));
        }
        std::vector<std::uint32_t> assign(count);
        for (auto& a : assign) {
            a = reader.get<std::uint32_t>(context);
            if (a >= k) throw Error(ErrorKind::invalid_record, context + ": assignment out of range");
        }
        table.assignments.push_back(std::move(assign));
    }
    return table;
}

}  // namespace latte
