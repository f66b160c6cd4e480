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

// LIRE: little-endian binary exchange format for per-token embeddings and attention weights.
//
//   header:  "LIR1" | format_version u32 | dim u32 | record_count u64
//   record:  role u8 | id_len u16 | id bytes | m u32 | content_len u32 | mask_present u8
//            | [m x u8 keep_mask] | m*dim f32 embeddings (row-major) | m f32 attention

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "latte/error.hpp"
#include "latte/record.hpp"

namespace latte {

inline constexpr std::array<char, 4> kLireMagic{'L', 'I', 'R', '1'};
inline constexpr std::uint32_t kLireVersion = 1;
inline constexpr std::size_t kLireHeaderBytes = 4 + 4 + 4 + 8;

namespace detail {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

template <typename T>
void put_le(std::ostream& out, T value) {
    static_assert(std::is_trivially_copyable_v<T>);
    std::array<char, sizeof(T)> bytes;
    std::memcpy(bytes.data(), &value, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
    out.write(bytes.data(), bytes.size());
}

inline void put_f32s(std::ostream& out, std::span<const float> values) {
    if constexpr (std::endian::native == std::endian::little) {
        out.write(reinterpret_cast<const char*>(values.data()),
                  static_cast<std::streamsize>(values.size_bytes()));
    } else {
        for (float v : values) put_le(out, v);
    }
}

/// Reads fixed-size little-endian fields, reporting truncation against a caller-supplied context.
class ByteReader {
public:
    explicit ByteReader(std::istream& in) : in_(in) {}

    void read_exact(char* dst, std::size_t n, const std::string& context) {
        in_.read(dst, static_cast<std::streamsize>(n));
        if (static_cast<std::size_t>(in_.gcount()) != n) {
            throw Error(ErrorKind::truncated, context);
        }
    }

    template <typename T>
    T get(const std::string& context) {
        std::array<char, sizeof(T)> bytes;
        read_exact(bytes.data(), bytes.size(), context);
        if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
        T value;
        std::memcpy(&value, bytes.data(), sizeof(T));
        return value;
    }

    void get_f32s(std::span<float> dst, const std::string& context) {
        read_exact(reinterpret_cast<char*>(dst.data()), dst.size_bytes(), context);
        if constexpr (std::endian::native == std::endian::big) {
            for (float& v : dst) {
                auto* bytes = reinterpret_cast<char*>(&v);
                std::reverse(bytes, bytes + sizeof(float));
            }
        }
    }

private:
    std::istream& in_;
};

inline void write_one(std::ostream& out, const EmbeddedRecord& r) {
    put_le<std::uint8_t>(out, static_cast<std::uint8_t>(r.role));
    put_le<std::uint16_t>(out, static_cast<std::uint16_t>(r.id.size()));
    out.write(r.id.data(), static_cast<std::streamsize>(r.id.size()));
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(r.token_count()));
    put_le<std::uint32_t>(out, r.content_len);
    put_le<std::uint8_t>(out, r.keep_mask ? 1 : 0);
    if (r.keep_mask) {
        out.write(reinterpret_cast<const char*>(r.keep_mask->data()),
                  static_cast<std::streamsize>(r.keep_mask->size()));
    }
    put_f32s(out, r.embeddings);
    put_f32s(out, r.attention);
}

inline std::size_t encoded_size(const EmbeddedRecord& r) {
    const std::size_t m = r.token_count();
    return 1 + 2 + r.id.size() + 4 + 4 + 1 + (r.keep_mask ? m : 0) + 4 * m * r.dim + 4 * m;
}

}  // namespace detail

/// Serializes `records` as one LIRE stream and returns the number of bytes written.
/// Output is a pure function of the input. Every record must already satisfy validate_record
/// under `limits`, and all records must share one dim.
inline std::size_t write_records(std::span<const EmbeddedRecord> records, std::ostream& out,
                                 const RecordLimits& limits = {}) {
    const std::uint32_t dim = records.empty() ? 0 : records.front().dim;
    std::size_t total = kLireHeaderBytes;
    for (const auto& r : records) {
        if (r.dim != dim) {
            throw Error(ErrorKind::mixed_dim, "record '" + r.id + "' has dim " + std::to_string(r.dim) +
                                                  ", expected " + std::to_string(dim));
        }
        validate_record(r, limits);
        total += detail::encoded_size(r);
    }

    out.write(kLireMagic.data(), kLireMagic.size());
    detail::put_le<std::uint32_t>(out, kLireVersion);
    detail::put_le<std::uint32_t>(out, dim);
    detail::put_le<std::uint64_t>(out, records.size());
    for (const auto& r : records) detail::write_one(out, r);
    if (!out) throw Error(ErrorKind::io, "failed writing LIRE stream");
    return total;
}

inline std::string write_records_to_bytes(std::span<const EmbeddedRecord> records, const RecordLimits& limits = {}) {
    std::ostringstream out(std::ios::binary);
    write_records(records, out, limits);
    return std::move(out).str();
}

/// Parses a LIRE stream and ingests each record: structural validation, a pre-normalization norm
/// gate of 1e-2, then rescaling of any row not already within 1e-4 of unit norm. Rows already
/// inside the tolerance are kept bit-for-bit so write/read round-trips exactly.
inline std::vector<EmbeddedRecord> read_records(std::istream& in, const RecordLimits& limits = {}) {
    detail::ByteReader reader(in);
    std::array<char, 4> magic{};
    reader.read_exact(magic.data(), magic.size(), "header");
    if (magic != kLireMagic) throw Error(ErrorKind::bad_magic, "stream does not start with LIR1");
    const auto version = reader.get<std::uint32_t>("header");
    if (version != kLireVersion) {
        throw Error(ErrorKind::unsupported_version, "format_version " + std::to_string(version));
    }
    const auto dim = reader.get<std::uint32_t>("header");
    const auto count = reader.get<std::uint64_t>("header");
    if (count > 0 && dim == 0) throw Error(ErrorKind::invalid_record, "header declares dim 0 with records present");

    std::vector<EmbeddedRecord> records;
    for (std::uint64_t i = 0; i < count; ++i) {
        const std::string context = "record " + std::to_string(i);
        EmbeddedRecord r;
        r.dim = dim;
        const auto role = reader.get<std::uint8_t>(context);
        if (role > 1) throw Error(ErrorKind::invalid_record, context + ": role byte " + std::to_string(role));
        r.role = static_cast<Role>(role);
        const auto id_len = reader.get<std::uint16_t>(context);
        r.id.resize(id_len);
        reader.read_exact(r.id.data(), id_len, context);
        const auto m = reader.get<std::uint32_t>(context);
        r.content_len = reader.get<std::uint32_t>(context);
        const auto mask_present = reader.get<std::uint8_t>(context);
        if (mask_present > 1) {
            throw Error(ErrorKind::invalid_record, context + ": mask_present byte " + std::to_string(mask_present));
        }
        const std::uint32_t cap = r.role == Role::query ? limits.max_query_tokens : limits.max_document_tokens;
        if (m > cap) {
            throw Error(ErrorKind::invalid_record, context + " ('" + r.id + "'): " + std::to_string(m) +
                                                       " tokens exceeds the " + to_string(r.role) + " cap");
        }
        if (mask_present) {
            std::vector<std::uint8_t> mask(m);
            reader.read_exact(reinterpret_cast<char*>(mask.data()), m, context);
            r.keep_mask = std::move(mask);
        }
        r.embeddings.resize(static_cast<std::size_t>(m) * dim);
        reader.get_f32s(r.embeddings, context);
        r.attention.resize(m);
        reader.get_f32s(r.attention, context);

        validate_structure(r, limits);
        check_row_norms(r, kIngestNormGate);
        for (std::size_t t = 0; t < m; ++t) {
            auto row = r.row(t);
            double norm = row_norm(row);
            if (std::abs(norm - 1.0) > kUnitNormTolerance) {
                for (float& x : row) x = static_cast<float>(static_cast<double>(x) / norm);
            }
        }
        records.push_back(std::move(r));
    }
    return records;
}

inline std::vector<EmbeddedRecord> read_records_from_bytes(const std::string& bytes, const RecordLimits& limits = {}) {
    std::istringstream in(bytes, std::ios::binary);
    return read_records(in, limits);
}

inline std::size_t write_records_file(const std::filesystem::path& path, std::span<const EmbeddedRecord> records,
                                      const RecordLimits& limits = {}) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::io, "cannot open " + path.string() + " for writing");
    return write_records(records, out, limits);
}

inline std::vector<EmbeddedRecord> read_records_file(const std::filesystem::path& path,
                                                     const RecordLimits& limits = {}) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::io, "cannot open " + path.string());
    return read_records(in, limits);
}

}  // namespace latte
