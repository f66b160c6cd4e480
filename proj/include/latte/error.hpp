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

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace latte {

/// Broad failure categories. The CLI maps each kind onto its own exit code.
enum class ErrorKind : std::uint8_t {
    invalid_argument,
    io,
    bad_magic,
    unsupported_version,
    truncated,
    non_finite,
    norm_out_of_tolerance,
    zero_norm,
    invalid_record,
    mixed_dim,
    dim_mismatch,
    duplicate_entry,
    malformed_line,
    empty_index,
    missing_centroids,
    no_kept_tokens,
    unknown_id,
};

inline std::string_view to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::invalid_argument: return "invalid argument";
        case ErrorKind::io: return "i/o error";
        case ErrorKind::bad_magic: return "bad magic";
        case ErrorKind::unsupported_version: return "unsupported format version";
        case ErrorKind::truncated: return "truncated payload";
        case ErrorKind::non_finite: return "non-finite value";
        case ErrorKind::norm_out_of_tolerance: return "embedding norm out of tolerance";
        case ErrorKind::zero_norm: return "zero-norm embedding row";
        case ErrorKind::invalid_record: return "invalid record";
        case ErrorKind::mixed_dim: return "mixed embedding dimensions";
        case ErrorKind::dim_mismatch: return "dimension mismatch";
        case ErrorKind::duplicate_entry: return "duplicate entry";
        case ErrorKind::malformed_line: return "malformed line";
        case ErrorKind::empty_index: return "empty index";
        case ErrorKind::missing_centroids: return "missing centroid table";
        case ErrorKind::no_kept_tokens: return "no kept document tokens";
        case ErrorKind::unknown_id: return "unknown id";
    }
    return "unknown error";
}

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

}  // namespace latte
