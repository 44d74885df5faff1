#include "hashednets/budget.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <string>

#include "hashednets/error.hpp"

namespace hashednets {
namespace {

void validate(const Architecture& arch, std::size_t min_depth) {
  if (arch.widths.size() < min_depth) {
    throw DegenerateArchitecture("architecture needs at least " + std::to_string(min_depth) + " layers");
  }
  for (std::size_t w : arch.widths) {
    if (w == 0) throw DegenerateArchitecture("layer widths must be at least 1");
  }
  if (!(arch.compression > 0.0) || !std::isfinite(arch.compression)) {
    throw ConfigError("compression factor must be positive and finite");
  }
}

}  // namespace

std::int64_t round_half_up(double x) noexcept { return static_cast<std::int64_t>(std::floor(x + 0.5)); }

std::size_t hashed_layer_budget(const std::vector<std::size_t>& widths, std::size_t layer, double c) {
  if (layer + 1 >= widths.size()) throw DimensionError("hashed_layer_budget: layer index out of range");
  const bool output = layer + 2 == widths.size();
  const double full = static_cast<double>((widths[layer] + (output ? 0 : 1)) * widths[layer + 1]);
  return static_cast<std::size_t>(round_half_up(c * full));
}

std::size_t param_count_hashed(const Architecture& arch) {
  validate(arch, 2);
  std::size_t total = arch.widths.back();
  for (std::size_t l = 0; l + 1 < arch.widths.size(); ++l) {
    total += hashed_layer_budget(arch.widths, l, arch.compression);
  }
  return total;
}

std::vector<std::size_t> shrunk_widths(const std::vector<std::size_t>& widths, double r) {
  if (!(r > 0.0) || !std::isfinite(r)) throw DegenerateArchitecture("shrinkage factor must be positive");
  std::vector<std::size_t> m = widths;
  for (std::size_t l = 1; l + 1 < m.size(); ++l) {
    const auto w = round_half_up(r * static_cast<double>(widths[l]));
    if (w < 1) {
      throw DegenerateArchitecture("shrinkage factor " + std::to_string(r) + " leaves hidden layer " +
                                   std::to_string(l) + " with zero units");
    }
    m[l] = static_cast<std::size_t>(w);
  }
  return m;
}

std::size_t param_count_dense(const std::vector<std::size_t>& widths) {
  std::size_t total = 0;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) total += (widths[l] + 1) * widths[l + 1];
  return total;
}

std::size_t param_count_standard(const Architecture& arch, double r) {
  validate(arch, 2);
  return param_count_dense(shrunk_widths(arch.widths, r));
}

ShrinkageQuadratic shrinkage_quadratic(const Architecture& arch) {
  validate(arch, 3);
  const auto& n = arch.widths;
  const std::size_t depth = n.size();
  auto d = [&](std::size_t l) { return static_cast<double>(n[l]); };

  ShrinkageQuadratic q;
  // Hidden-to-hidden products scale with r^2.
  for (std::size_t l = 1; l + 2 < depth; ++l) q.quadratic += d(l) * d(l + 1);
  // Hidden biases, first and last weight blocks scale with r.
  for (std::size_t l = 1; l + 1 < depth; ++l) q.linear += d(l);
  q.linear += d(0) * d(1) + d(depth - 2) * d(depth - 1);
  double full = 0.0;
  for (std::size_t l = 0; l + 2 < depth; ++l) full += (d(l) + 1.0) * d(l + 1);
  full += d(depth - 2) * d(depth - 1);
  q.full_size = full;
  q.constant = arch.compression * full;
  return q;
}

ShrinkageResult solve_shrinkage(const Architecture& arch) {
  const ShrinkageQuadratic q = shrinkage_quadratic(arch);

  ShrinkageResult result;
  if (q.quadratic == 0.0) {
    // L = 3: the linear coefficient equals the uncompressed count, so r = c.
    result.r = arch.compression * (q.full_size / q.linear);
  } else {
    // Cancellation-free form of (-b + sqrt(b^2 + 4aC)) / 2a.
    const double disc = q.linear * q.linear + 4.0 * q.quadratic * q.constant;
    result.r = 2.0 * q.constant / (q.linear + std::sqrt(disc));
  }
  if (!(result.r > 0.0) || !std::isfinite(result.r)) {
    throw InfeasibleBudget("no positive shrinkage factor for compression " + std::to_string(arch.compression));
  }

  result.widths = shrunk_widths(arch.widths, result.r);
  result.n_standard = param_count_dense(result.widths);
  result.n_hash = param_count_hashed(arch);
  const std::size_t slack = arch.widths.size() * *std::max_element(arch.widths.begin(), arch.widths.end());
  const auto gap = std::llabs(static_cast<long long>(result.n_standard) - static_cast<long long>(result.n_hash));
  result.within_slack = static_cast<std::size_t>(gap) <= slack;
  return result;
}

}  // namespace hashednets
