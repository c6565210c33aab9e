#pragma once

#include <vector>

#include <Eigen/Dense>

#include "vizsteg/common.hpp"

namespace vizsteg::qr {

// Fixed symbol geometry: Version 40, ECC level H.
constexpr int kModules = 177;
constexpr int kByteCapacity = 1273;
constexpr int kDataCodewords = 1276;
constexpr int kTotalCodewords = 3706;
constexpr int kEccPerBlock = 30;

// 0/1 module matrix, 1 = dark.
using ModuleMatrix = Eigen::Matrix<uint8_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Renders one symbol. payload.size() must be <= kByteCapacity.
ModuleMatrix encode_symbol(const std::vector<uint8_t>& payload);

// Recovers the payload of one symbol; throws DecodeError when the error
// correction budget is exceeded or the structure is unreadable.
std::vector<uint8_t> decode_symbol(const ModuleMatrix& modules);

// Cheap presence test: do the three finder patterns roughly match?
bool looks_like_symbol(const ModuleMatrix& modules);

// Reed-Solomon over GF(256) with polynomial 0x11D, generator roots
// alpha^0..alpha^{nsym-1} (the QR convention). Exposed for the ECC tests.
namespace rs {

// Returns data + nsym parity bytes.
std::vector<uint8_t> encode(const std::vector<uint8_t>& data, int nsym);

// Corrects up to nsym/2 byte errors in place; false when uncorrectable.
bool decode(std::vector<uint8_t>& block, int nsym);

}  // namespace rs

}  // namespace vizsteg::qr
