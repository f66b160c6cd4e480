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
#include <atomic>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include "latte/centroids.hpp"
#include "latte/error.hpp"
#include "latte/lire.hpp"
#include "latte/record.hpp"
#include "latte/scoring.hpp"

namespace latte {

struct IndexOptions {
    /// Number of k-means centroids for pruned search; no table is built when unset.
    std::optional<std::uint32_t> centroids;
    std::uint64_t kmeans_seed = 0;
    RecordLimits limits;
};

/// Immutable collection of document records, with an optional centroid table.
class RetrievalIndex {
public:
    RetrievalIndex() = default;

    static RetrievalIndex build(std::vector<EmbeddedRecord> docs, const IndexOptions& options = {}) {
        RetrievalIndex index = from_parts(std::move(docs), std::nullopt, options.limits);
        if (options.centroids) index.centroids_ = train_centroids(index.docs_, *options.centroids, options.kmeans_seed);
        return index;
    }

    /// Assembles an index from already-built parts, e.g. when loading from disk.
    static RetrievalIndex from_parts(std::vector<EmbeddedRecord> docs, std::optional<CentroidTable> centroids,
                                     const RecordLimits& limits = {}) {
        if (docs.empty()) throw Error(ErrorKind::invalid_argument, "cannot build an index from zero documents");
        RetrievalIndex index;
        index.dim_ = docs.front().dim;
        for (std::size_t i = 0; i < docs.size(); ++i) {
            const auto& doc = docs[i];
            if (doc.role != Role::document) {
                throw Error(ErrorKind::invalid_argument, "record '" + doc.id + "' is not a document");
            }
            if (doc.dim != index.dim_) {
                throw Error(ErrorKind::mixed_dim, "document '" + doc.id + "' has dim " + std::to_string(doc.dim) +
                                                      ", expected " + std::to_string(index.dim_));
            }
            validate_record(doc, limits);
            if (!index.ordinals_.emplace(doc.id, i).second) {
                throw Error(ErrorKind::duplicate_entry, "document id '" + doc.id + "'");
            }
        }
        index.docs_ = std::move(docs);
        if (centroids) {
            if (centroids->dim != index.dim_ || centroids->assignments.size() != index.docs_.size()) {
                throw Error(ErrorKind::invalid_argument, "centroid table does not match the documents");
            }
            index.centroids_ = std::move(centroids);
        }
        return index;
    }

    std::uint32_t dim() const noexcept { return dim_; }
    std::size_t size() const noexcept { return docs_.size(); }
    bool empty() const noexcept { return docs_.empty(); }
    std::span<const EmbeddedRecord> documents() const noexcept { return docs_; }
    const EmbeddedRecord& document(std::size_t ordinal) const { return docs_.at(ordinal); }

    std::optional<std::size_t> find(const std::string& doc_id) const {
        auto it = ordinals_.find(doc_id);
        if (it == ordinals_.end()) return std::nullopt;
        return it->second;
    }

    const CentroidTable* centroids() const noexcept { return centroids_ ? &*centroids_ : nullptr; }

private:
    std::uint32_t dim_ = 0;
    std::vector<EmbeddedRecord> docs_;
    std::unordered_map<std::string, std::size_t> ordinals_;
    std::optional<CentroidTable> centroids_;
};

struct Hit {
    std::string doc_id;
    double score = 0.0;

    bool operator==(const Hit&) const = default;
};

struct SearchResult {
    std::string query_id;
    std::vector<Hit> hits;
    ScoringConfig config;
};

namespace detail {

inline void check_query(const RetrievalIndex& index, const EmbeddedRecord& query, std::size_t k) {
    if (index.empty()) throw Error(ErrorKind::empty_index, "no documents to search");
    if (k < 1) throw Error(ErrorKind::invalid_argument, "k must be >= 1");
    if (query.role != Role::query) throw Error(ErrorKind::invalid_argument, "'" + query.id + "' is not a query");
    if (query.dim != index.dim()) {
        throw Error(ErrorKind::dim_mismatch, "query '" + query.id + "' dim " + std::to_string(query.dim) +
                                                 " vs index dim " + std::to_string(index.dim()));
    }
}

/// Orders ordinals by descending score, ascending doc id on ties, and keeps the first `keep`.
inline std::vector<std::size_t> top_ordinals(const RetrievalIndex& index, const std::vector<double>& scores,
                                             std::vector<std::size_t> ordinals, std::size_t keep) {
    keep = std::min(keep, ordinals.size());
    auto better = [&](std::size_t a, std::size_t b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        return index.document(a).id < index.document(b).id;
    };
    std::partial_sort(ordinals.begin(), ordinals.begin() + static_cast<std::ptrdiff_t>(keep), ordinals.end(),
                      better);
    ordinals.resize(keep);
    return ordinals;
}

inline SearchResult make_result(const RetrievalIndex& index, const EmbeddedRecord& query, const ScoringConfig& config,
                                const std::vector<double>& scores, const std::vector<std::size_t>& ranked) {
    SearchResult result{query.id, {}, config};
    result.hits.reserve(ranked.size());
    for (auto ord : ranked) result.hits.push_back({index.document(ord).id, scores[ord]});
    return result;
}

}  // namespace detail

/// Top-k documents by score_pair over the whole index.
inline SearchResult search_exact(const RetrievalIndex& index, const EmbeddedRecord& query, std::size_t k,
                                 const ScoringConfig& config = {}) {
    detail::check_query(index, query, k);
    config.validate();
    std::vector<double> scores(index.size());
    std::vector<std::size_t> ordinals(index.size());
    for (std::size_t d = 0; d < index.size(); ++d) {
        scores[d] = score_pair(query, index.document(d), config);
        ordinals[d] = d;
    }
    return detail::make_result(index, query, config, scores, detail::top_ordinals(index, scores, ordinals, k));
}

/// Attention-free MaxSim of `query` against each document's centroid-quantized tokens.
inline std::vector<double> centroid_scores(const RetrievalIndex& index, const EmbeddedRecord& query) {
    const CentroidTable* table = index.centroids();
    if (!table) throw Error(ErrorKind::missing_centroids, "index was built without centroids");
    const std::size_t k = table->size();
    std::vector<std::size_t> kept_query;
    for (std::size_t i = 0; i < query.token_count(); ++i) {
        if (query.kept(i)) kept_query.push_back(i);
    }
    std::vector<double> sim(kept_query.size() * k);
    for (std::size_t qi = 0; qi < kept_query.size(); ++qi) {
        for (std::size_t c = 0; c < k; ++c) sim[qi * k + c] = cosine(query.row(kept_query[qi]), table->centroid(c));
    }
    std::vector<double> scores(index.size(), 0.0);
    for (std::size_t d = 0; d < index.size(); ++d) {
        const auto& doc = index.document(d);
        const auto& assign = table->assignments[d];
        double total = 0.0;
        for (std::size_t qi = 0; qi < kept_query.size(); ++qi) {
            double best = -2.0;
            for (std::size_t t = 0; t < doc.token_count(); ++t) {
                if (doc.kept(t)) best = std::max(best, sim[qi * k + assign[t]]);
            }
            total += best;
        }
        scores[d] = total;
    }
    return scores;
}

/// Two-stage search: rank every document by centroid MaxSim, rescore the best `candidates` exactly
/// with score_pair, return the top k of those.
inline SearchResult search_pruned(const RetrievalIndex& index, const EmbeddedRecord& query, std::size_t k,
                                  const ScoringConfig& config, std::size_t candidates) {
    detail::check_query(index, query, k);
    config.validate();
    if (candidates < k) throw Error(ErrorKind::invalid_argument, "candidate count must be >= k");
    const auto coarse = centroid_scores(index, query);
    std::vector<std::size_t> all(index.size());
    for (std::size_t d = 0; d < all.size(); ++d) all[d] = d;
    auto shortlist = detail::top_ordinals(index, coarse, std::move(all), candidates);

    std::vector<double> scores(index.size(), 0.0);
    for (auto d : shortlist) scores[d] = score_pair(query, index.document(d), config);
    return detail::make_result(index, query, config, scores, detail::top_ordinals(index, scores, shortlist, k));
}

/// Runs `search` over every query on up to `workers` threads (0 = hardware concurrency). Results come
/// back in input order; each query is scored independently so output does not depend on `workers`.
inline std::vector<SearchResult> parallel_search(
    std::span<const EmbeddedRecord> queries, unsigned workers,
    const std::function<SearchResult(const EmbeddedRecord&)>& search) {
    std::vector<SearchResult> results(queries.size());
    std::vector<std::exception_ptr> errors(queries.size());
    if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
    workers = static_cast<unsigned>(std::min<std::size_t>(workers, queries.size()));

    std::atomic<std::size_t> next{0};
    auto drain = [&] {
        for (std::size_t i = next++; i < queries.size(); i = next++) {
            try {
                results[i] = search(queries[i]);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    if (workers <= 1) {
        drain();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(drain);
    }

    for (std::size_t i = 0; i < queries.size(); ++i) {
        if (!errors[i]) continue;
        try {
            std::rethrow_exception(errors[i]);
        } catch (const Error& e) {
            throw Error(e.kind(), "query '" + queries[i].id + "': " + e.what());
        }
    }
    return results;
}

inline std::vector<SearchResult> batch_search(const RetrievalIndex& index, std::span<const EmbeddedRecord> queries,
                                              std::size_t k, const ScoringConfig& config = {}, unsigned workers = 0) {
    return parallel_search(queries, workers,
                           [&](const EmbeddedRecord& q) { return search_exact(index, q, k, config); });
}

inline std::vector<SearchResult> batch_search_pruned(const RetrievalIndex& index,
                                                     std::span<const EmbeddedRecord> queries, std::size_t k,
                                                     const ScoringConfig& config, std::size_t candidates,
                                                     unsigned workers = 0) {
    return parallel_search(queries, workers, [&](const EmbeddedRecord& q) {
        return search_pruned(index, q, k, config, candidates);
    });
}

inline constexpr const char* kIndexDocsFile = "docs.lir";
inline constexpr const char* kIndexCentroidsFile = "centroids.bin";

/// Writes `docs.lir` and, when present, `centroids.bin` into `dir` (created if missing).
inline void save_index(const RetrievalIndex& index, const std::filesystem::path& dir,
                       const RecordLimits& limits = {}) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw Error(ErrorKind::io, "cannot create " + dir.string() + ": " + ec.message());
    write_records_file(dir / kIndexDocsFile, index.documents(), limits);
    const auto sidecar = dir / kIndexCentroidsFile;
    if (const auto* table = index.centroids()) {
        std::ofstream out(sidecar, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorKind::io, "cannot open " + sidecar.string() + " for writing");
        write_centroids(*table, out);
    } else {
        std::filesystem::remove(sidecar, ec);
    }
}

inline RetrievalIndex load_index(const std::filesystem::path& dir, const RecordLimits& limits = {}) {
    auto docs = read_records_file(dir / kIndexDocsFile, limits);
    std::optional<CentroidTable> table;
    const auto sidecar = dir / kIndexCentroidsFile;
    if (std::filesystem::exists(sidecar)) {
        std::ifstream in(sidecar, std::ios::binary);
        if (!in) throw Error(ErrorKind::io, "cannot open " + sidecar.string());
        table = read_centroids(in, docs);
    }
    return RetrievalIndex::from_parts(std::move(docs), std::move(table), limits);
}

}  // namespace latte
