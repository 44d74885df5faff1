#pragma once

#include <filesystem>
#include <iosfwd>

#include "hashednets/network.hpp"

// Checkpoint format:
//
//   8 bytes   magic "HSHNET01"
//   u64 LE    length of the JSON header in bytes
//   ...       JSON header: activation and, per layer, kind, widths and the
//             seeds/sizes needed to rebuild its structure
//   ...       per layer: parameters as f64 LE, then for an explicit bucket
//             table the u32 LE buckets and i8 signs
//
// Hash functions, edge masks and low-rank fixed factors are rebuilt from their
// seeds, so a reloaded model has bit-identical effective matrices.

namespace hashednets {

void save_model(const Network& net, std::ostream& out);
void save_model(const Network& net, const std::filesystem::path& path);

/// Throws FormatError on a bad magic, malformed header or short payload.
Network load_model(std::istream& in);
Network load_model(const std::filesystem::path& path);

}  // namespace hashednets
