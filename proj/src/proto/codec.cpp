// Copyright (c) 2026, The reindsplit Authors
// SPDX-License-Identifier: Apache-2.0

#include "reindsplit/proto/codec.hpp"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>

namespace rds::proto {

const char* to_string(MsgType t) {
    switch (t) {
        case MsgType::smashed: return "smashed";
        case MsgType::grad_at_cut: return "grad_at_cut";
        case MsgType::param_pull_request: return "param_pull_request";
        case MsgType::param_segment: return "param_segment";
        case MsgType::param_push: return "param_push";
    }
    return "unknown";
}

const char* to_string(DecodeErrc e) {
    switch (e) {
        case DecodeErrc::truncated: return "truncated";
        case DecodeErrc::bad_magic: return "bad_magic";
        case DecodeErrc::bad_version: return "bad_version";
        case DecodeErrc::unknown_type: return "unknown_type";
        case DecodeErrc::oversized: return "oversized";
        case DecodeErrc::length_mismatch: return "length_mismatch";
        case DecodeErrc::bad_tensor: return "bad_tensor";
        case DecodeErrc::bad_crc: return "bad_crc";
        case DecodeErrc::tensor_count: return "tensor_count";
    }
    return "unknown";
}

std::size_t Tensor::element_count() const {
    std::size_t n = 1;
    for (auto d : dims) n *= d;
    return n;
}

bool Tensor::operator==(const Tensor& other) const {
    return dims == other.dims && data.size() == other.data.size() &&
           (data.empty() || std::memcmp(data.data(), other.data.data(), data.size() * sizeof(float)) == 0);
}

namespace {

static_assert(std::numeric_limits<float>::is_iec559);

bool valid_type(std::uint8_t t) { return t >= 1 && t <= 5; }

// Allowed tensor counts: {min, max}.
std::pair<std::size_t, std::size_t> tensor_count_range(MsgType t) {
    switch (t) {
        case MsgType::smashed: return {2, 2};
        case MsgType::grad_at_cut: return {2, 2};
        case MsgType::param_pull_request: return {0, 0};
        case MsgType::param_segment: return {1, 1};
        case MsgType::param_push: return {0, 1};
    }
    return {0, 0};
}

class Writer {
public:
    explicit Writer(std::vector<std::uint8_t>& out) : out_(out) {}
    void u8(std::uint8_t v) { out_.push_back(v); }
    void u16(std::uint16_t v) {
        for (int i = 0; i < 2; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void f32(float f) {
        std::uint32_t bits;
        std::memcpy(&bits, &f, sizeof bits);
        u32(bits);
    }

private:
    std::vector<std::uint8_t>& out_;
};

std::uint16_t read_u16(const std::uint8_t* p) { return static_cast<std::uint16_t>(p[0] | (p[1] << 8)); }

std::uint32_t read_u32(const std::uint8_t* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint32_t crc_of(const std::uint8_t* p, std::size_t n) {
    uLong crc = crc32(0L, Z_NULL, 0);
    while (n > 0) {
        const auto chunk = static_cast<uInt>(std::min<std::size_t>(n, 1u << 30));
        crc = crc32(crc, p, chunk);
        p += chunk;
        n -= chunk;
    }
    return static_cast<std::uint32_t>(crc);
}

std::size_t tensor_wire_size(const Tensor& t) { return 1 + 4 * t.dims.size() + 4 * t.data.size() + 4; }

}  // namespace

std::vector<std::uint8_t> encode(const Message& msg, std::size_t max_payload) {
    const auto [lo, hi] = tensor_count_range(msg.type);
    if (msg.tensors.size() < lo || msg.tensors.size() > hi) {
        throw EncodeError(std::string(to_string(msg.type)) + " carries " + std::to_string(lo) +
                          (lo == hi ? "" : "-" + std::to_string(hi)) + " tensors, got " +
                          std::to_string(msg.tensors.size()));
    }
    std::size_t payload = 0;
    for (const auto& t : msg.tensors) {
        if (t.dims.size() > kMaxDims) throw EncodeError("tensor rank " + std::to_string(t.dims.size()) + " exceeds 8");
        if (t.element_count() != t.data.size()) {
            throw EncodeError("tensor dims describe " + std::to_string(t.element_count()) + " elements but data has " +
                              std::to_string(t.data.size()));
        }
        for (std::size_t i = 0; i < t.data.size(); ++i) {
            if (!std::isfinite(t.data[i])) throw EncodeError("non-finite value at tensor element " + std::to_string(i));
        }
        payload += tensor_wire_size(t);
    }
    if (payload > max_payload || payload > std::numeric_limits<std::uint32_t>::max()) {
        throw EncodeError("payload of " + std::to_string(payload) + " bytes exceeds limit");
    }

    std::vector<std::uint8_t> out;
    out.reserve(kHeaderSize + payload);
    Writer w(out);
    for (auto b : kMagic) w.u8(b);
    w.u16(kVersion);
    w.u8(static_cast<std::uint8_t>(msg.type));
    w.u32(msg.round);
    w.u16(msg.device);
    w.u8(msg.cut);
    w.u32(static_cast<std::uint32_t>(payload));
    for (const auto& t : msg.tensors) {
        const std::size_t start = out.size();
        w.u8(static_cast<std::uint8_t>(t.dims.size()));
        for (auto d : t.dims) w.u32(d);
        for (float f : t.data) w.f32(f);
        w.u32(crc_of(out.data() + start, out.size() - start));
    }
    return out;
}

Header decode_header(std::span<const std::uint8_t> bytes, std::size_t max_payload) {
    if (bytes.size() < kHeaderSize) {
        throw DecodeError(DecodeErrc::truncated,
                          "truncated header: expected " + std::to_string(kHeaderSize) + " bytes, got " +
                              std::to_string(bytes.size()),
                          kHeaderSize, bytes.size());
    }
    const std::uint8_t* p = bytes.data();
    if (std::memcmp(p, kMagic.data(), kMagic.size()) != 0) throw DecodeError(DecodeErrc::bad_magic, "bad magic");
    const std::uint16_t version = read_u16(p + 4);
    if (version != kVersion) {
        throw DecodeError(DecodeErrc::bad_version, "unsupported version " + std::to_string(version), kVersion, version);
    }
    if (!valid_type(p[6])) {
        throw DecodeError(DecodeErrc::unknown_type, "unknown message type " + std::to_string(p[6]));
    }
    Header h{static_cast<MsgType>(p[6]), read_u32(p + 7), read_u16(p + 11), p[13], read_u32(p + 14)};
    if (h.payload_len > max_payload) {
        throw DecodeError(DecodeErrc::oversized,
                          "payload_len " + std::to_string(h.payload_len) + " exceeds limit " + std::to_string(max_payload),
                          max_payload, h.payload_len);
    }
    return h;
}

Message decode(std::span<const std::uint8_t> bytes, std::size_t max_payload) {
    const Header h = decode_header(bytes, max_payload);
    const std::size_t expected = kHeaderSize + h.payload_len;
    if (bytes.size() < expected) {
        throw DecodeError(DecodeErrc::truncated,
                          "truncated frame: expected " + std::to_string(expected) + " bytes, got " +
                              std::to_string(bytes.size()),
                          expected, bytes.size());
    }
    if (bytes.size() > expected) {
        throw DecodeError(DecodeErrc::length_mismatch,
                          "frame has " + std::to_string(bytes.size() - expected) + " trailing bytes", expected,
                          bytes.size());
    }

    Message msg{h.type, h.round, h.device, h.cut, {}};
    const auto [lo, hi] = tensor_count_range(h.type);
    const std::uint8_t* base = bytes.data() + kHeaderSize;
    std::size_t pos = 0;
    const std::size_t end = h.payload_len;
    auto need = [&](std::size_t n, const char* what) {
        if (end - pos < n) {
            throw DecodeError(DecodeErrc::bad_tensor,
                              std::string("tensor ") + what + " overruns payload: needs " + std::to_string(n) +
                                  " bytes, " + std::to_string(end - pos) + " left",
                              n, end - pos);
        }
    };
    while (pos < end) {
        if (msg.tensors.size() == hi) {
            throw DecodeError(DecodeErrc::tensor_count,
                              std::string(to_string(h.type)) + " carries at most " + std::to_string(hi) + " tensors",
                              hi, hi + 1);
        }
        const std::size_t start = pos;
        need(1, "rank");
        const std::size_t ndims = base[pos++];
        if (ndims > kMaxDims) {
            throw DecodeError(DecodeErrc::bad_tensor, "tensor rank " + std::to_string(ndims) + " exceeds 8", kMaxDims,
                              ndims);
        }
        need(4 * ndims, "dims");
        Tensor t;
        t.dims.resize(ndims);
        for (std::size_t d = 0; d < ndims; ++d) {
            t.dims[d] = read_u32(base + pos);
            pos += 4;
        }
        const bool empty = std::find(t.dims.begin(), t.dims.end(), 0u) != t.dims.end();
        std::size_t count = empty ? 0 : 1;
        for (std::size_t d = 0; d < ndims && !empty; ++d) {
            if (count > (end / 4) / t.dims[d]) {
                throw DecodeError(DecodeErrc::bad_tensor, "tensor dims exceed payload size");
            }
            count *= t.dims[d];
        }
        need(4 * count + 4, "data");
        t.data.resize(count);
        for (std::size_t i = 0; i < count; ++i) {
            const std::uint32_t bits = read_u32(base + pos);
            std::memcpy(&t.data[i], &bits, sizeof bits);
            pos += 4;
        }
        const std::uint32_t want = crc_of(base + start, pos - start);
        const std::uint32_t got = read_u32(base + pos);
        pos += 4;
        if (want != got) {
            throw DecodeError(DecodeErrc::bad_crc, "crc mismatch in tensor " + std::to_string(msg.tensors.size()), want,
                              got);
        }
        msg.tensors.push_back(std::move(t));
    }
    if (msg.tensors.size() < lo) {
        throw DecodeError(DecodeErrc::tensor_count,
                          std::string(to_string(h.type)) + " carries " + std::to_string(lo) + " tensors, got " +
                              std::to_string(msg.tensors.size()),
                          lo, msg.tensors.size());
    }
    return msg;
}

Tensor to_tensor(const Matrix& m) {
    Tensor t;
    t.dims = {static_cast<std::uint32_t>(m.rows), static_cast<std::uint32_t>(m.cols)};
    t.data.assign(m.data.begin(), m.data.end());
    return t;
}

Tensor to_tensor(std::span<const double> v) {
    Tensor t;
    t.dims = {static_cast<std::uint32_t>(v.size())};
    t.data.assign(v.begin(), v.end());
    return t;
}

Matrix to_matrix(const Tensor& t) {
    if (t.dims.size() != 2) throw std::invalid_argument("expected a rank-2 tensor, got rank " + std::to_string(t.dims.size()));
    Matrix m(t.dims[0], t.dims[1]);
    std::copy(t.data.begin(), t.data.end(), m.data.begin());
    return m;
}

std::vector<double> to_vector(const Tensor& t) { return {t.data.begin(), t.data.end()}; }

}  // namespace rds::proto
