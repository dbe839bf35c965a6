// Copyright (c) 2026, The reindsplit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "reindsplit/core/matrix.hpp"

namespace rds::proto {

// Frame = 18-byte header + payload. All integers little-endian.
//   magic "RDSP" | version u16 | msg_type u8 | round u32 | device_id u16 |
//   cut_index u8 | payload_len u32
// The payload is a type-dependent number of tensor blocks:
//   ndims u8 | dims u32 x ndims | f32 data (row-major) | crc32 u32
// with the CRC covering the block's preceding bytes. See docs/PROTOCOL.md.

inline constexpr std::array<std::uint8_t, 4> kMagic = {'R', 'D', 'S', 'P'};
inline constexpr std::uint16_t kVersion = 1;
inline constexpr std::size_t kHeaderSize = 18;
inline constexpr std::size_t kDefaultMaxPayload = std::size_t{64} << 20;
inline constexpr std::size_t kMaxDims = 8;

enum class MsgType : std::uint8_t {
    smashed = 1,
    grad_at_cut = 2,
    param_pull_request = 3,
    param_segment = 4,
    param_push = 5,
};

const char* to_string(MsgType t);

struct Tensor {
    std::vector<std::uint32_t> dims;
    std::vector<float> data;

    std::size_t element_count() const;
    /// Bitwise comparison of the float payload.
    bool operator==(const Tensor& other) const;
};

struct Message {
    MsgType type = MsgType::param_pull_request;
    std::uint32_t round = 0;
    std::uint16_t device = 0;
    std::uint8_t cut = 0;
    std::vector<Tensor> tensors;

    bool operator==(const Message&) const = default;
};

struct Header {
    MsgType type;
    std::uint32_t round;
    std::uint16_t device;
    std::uint8_t cut;
    std::uint32_t payload_len;
};

enum class DecodeErrc {
    truncated,
    bad_magic,
    bad_version,
    unknown_type,
    oversized,
    length_mismatch,
    bad_tensor,
    bad_crc,
    tensor_count,
};

const char* to_string(DecodeErrc e);

class DecodeError : public std::runtime_error {
public:
    DecodeError(DecodeErrc code, const std::string& what, std::size_t expected = 0, std::size_t actual = 0)
        : std::runtime_error(what), code_(code), expected_(expected), actual_(actual) {}
    DecodeErrc code() const noexcept { return code_; }
    std::size_t expected() const noexcept { return expected_; }
    std::size_t actual() const noexcept { return actual_; }

private:
    DecodeErrc code_;
    std::size_t expected_;
    std::size_t actual_;
};

class EncodeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

std::vector<std::uint8_t> encode(const Message& msg, std::size_t max_payload = kDefaultMaxPayload);

/// Validates only the fixed header. Rejects an oversized payload_len before
/// the caller allocates anything for the payload.
Header decode_header(std::span<const std::uint8_t> bytes, std::size_t max_payload = kDefaultMaxPayload);

Message decode(std::span<const std::uint8_t> bytes, std::size_t max_payload = kDefaultMaxPayload);

Tensor to_tensor(const Matrix& m);
Tensor to_tensor(std::span<const double> v);
/// Requires a rank-2 tensor.
Matrix to_matrix(const Tensor& t);
std::vector<double> to_vector(const Tensor& t);

}  // namespace rds::proto
