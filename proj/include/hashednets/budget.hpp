#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

// Parameter counting for hashed and standard networks, and the shrinkage
// factor r that sizes a standard network to match a hashed one.
//
// Counting conventions: every layer except the last carries n^l + 1 inputs
// (bias included) and is compressed as a whole; the last layer's weights are
// compressed but its n^L biases are stored uncompressed. Real-valued per-layer
// counts are rounded half-up.

namespace hashednets {

/// Widths n^1..n^L of the full-size (virtual) network and compression factor c
/// (c <= 1 compresses, c > 1 expands).
struct Architecture {
  std::vector<std::size_t> widths;
  double compression = 1.0;
};

std::int64_t round_half_up(double x) noexcept;

/// Stored weights of layer l (0-based, mapping widths[l] -> widths[l + 1])
/// under compression c. The output layer's biases are not included.
std::size_t hashed_layer_budget(const std::vector<std::size_t>& widths, std::size_t layer, double c);

/// N_hash = sum_{l < L-1} round(c (n^l + 1) n^{l+1}) + round(c n^{L-1} n^L) + n^L.
std::size_t param_count_hashed(const Architecture& arch);

/// Widths m^l of the standard network shrunk by r: input and output unchanged,
/// hidden widths round(r n^l). Throws DegenerateArchitecture if a hidden width
/// rounds to 0.
std::vector<std::size_t> shrunk_widths(const std::vector<std::size_t>& widths, double r);

/// Parameter count of a plain fully connected network, biases included.
std::size_t param_count_dense(const std::vector<std::size_t>& widths);

/// N_standard(r) = parameter count of the network with shrunk_widths(r).
std::size_t param_count_standard(const Architecture& arch, double r);

/// Coefficients of a r^2 + b r - C = 0 obtained by equating the real-valued
/// N_standard(r) and N_hash.
struct ShrinkageQuadratic {
  double quadratic = 0.0;
  double linear = 0.0;
  double constant = 0.0;  // C = c * full_size
  double full_size = 0.0;  // uncompressed count without output biases
};

ShrinkageQuadratic shrinkage_quadratic(const Architecture& arch);

struct ShrinkageResult {
  double r = 0.0;
  std::size_t n_hash = 0;
  std::size_t n_standard = 0;
  std::vector<std::size_t> widths;  // m^1..m^L
  /// |n_standard - n_hash| <= L * max(n^l)
  bool within_slack = false;
};

/// Positive root of the shrinkage quadratic (the linear solution when the
/// quadratic coefficient vanishes, which gives r = c exactly for L = 3).
/// Requires L >= 3 and c > 0.
ShrinkageResult solve_shrinkage(const Architecture& arch);

}  // namespace hashednets
