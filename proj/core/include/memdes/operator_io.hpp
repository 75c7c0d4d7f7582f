#pragma once

#include "memdes/types.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace memdes {

/// OPB1 container.
///
///   "OPB1" | u32 version (=1) | u32 N | u32 section count | sections...
///   section: 8-byte ASCII tag (NUL padded) | u64 payload bytes | payload
///
/// Matrices are row-major complex128 as interleaved little-endian float64
/// (re, im). Masks hold one byte per DOF. META holds three float64 (f, k, a).
/// Fmat, Vexc and TMPR store one row per far-field projection, excitation
/// or TM mode; their row count follows from the payload length.
inline constexpr std::uint32_t kOpbVersion = 1;

std::vector<std::uint8_t> serialize_bundle(const OperatorBundle& bundle);

/// Parses and validates. Unknown tags are skipped and reported in `warnings`
/// (or on std::clog when no sink is given).
OperatorBundle deserialize_bundle(std::span<const std::uint8_t> bytes, std::vector<std::string>* warnings = nullptr);

void write_bundle(const OperatorBundle& bundle, const std::filesystem::path& path);
OperatorBundle read_bundle(const std::filesystem::path& path, std::vector<std::string>* warnings = nullptr);

std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes);

/// FNV-1a over the serialized OPB1 byte stream.
std::uint64_t bundle_hash(const OperatorBundle& bundle);

/// "0x" followed by 16 lowercase hex digits.
std::string hash_hex(std::uint64_t hash);

}  // namespace memdes
