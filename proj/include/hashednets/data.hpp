#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "hashednets/core_math.hpp"

namespace hashednets {

/// Row-major samples with integer class labels. Features live in [0, 1].
struct Dataset {
  Matrix samples;
  std::vector<std::uint32_t> labels;
  std::size_t class_count = 0;
  /// Optional per-sample soft targets (rows sum to 1) for distillation.
  std::optional<Matrix> soft_targets;

  std::size_t size() const noexcept { return labels.size(); }
  std::size_t dim() const noexcept { return samples.cols(); }

  /// First n samples (all if n exceeds the size).
  Dataset head(std::size_t n) const;
  /// Rows in `indices` order.
  Dataset select(const std::vector<std::size_t>& indices) const;
};

/// Reads an IDX image file (magic 0x00000803, big-endian dimensions) and label
/// file (magic 0x00000801). Pixels are divided by 255 and each image is
/// flattened row-major. Throws FormatError on bad magic, truncation (naming the
/// byte offset) or an image/label count mismatch.
Dataset load_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path);

/// Writes samples as IDX3 (rows x height x width bytes, value round(255 x))
/// and labels as IDX1. `height * width` must equal the sample dimension.
void write_idx(const Dataset& data, const std::filesystem::path& images_path,
               const std::filesystem::path& labels_path, std::size_t height, std::size_t width);

/// Gaussian blobs around seeded random centres in [0.25, 0.75]^dim, clamped
/// to [0, 1]; classes are interleaved. noise = 0 reproduces the centres.
Dataset synth_blobs(std::size_t n_per_class, std::size_t classes, std::size_t dim, std::uint64_t seed,
                    double noise);

/// Per-feature min-max rescaling to [0, 1]; constant features map to 0.
void scale_features(Matrix& samples);

/// MNIST train/test files under `dir` with the standard file names.
struct MnistFiles {
  std::filesystem::path train_images, train_labels, test_images, test_labels;
};
MnistFiles mnist_files(const std::filesystem::path& dir);

}  // namespace hashednets
