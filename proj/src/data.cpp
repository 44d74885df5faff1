#include "hashednets/data.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <iterator>
#include <string>

#include "hashednets/error.hpp"
#include "hashednets/random.hpp"

namespace hashednets {
namespace {

constexpr std::uint32_t kImageMagic = 0x00000803;
constexpr std::uint32_t kLabelMagic = 0x00000801;

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

class ByteReader {
 public:
  ByteReader(const std::vector<std::uint8_t>& bytes, std::string name)
      : bytes_(bytes), name_(std::move(name)) {}

  std::uint32_t be32() {
    need(4);
    const std::uint32_t v = (std::uint32_t{bytes_[pos_]} << 24) | (std::uint32_t{bytes_[pos_ + 1]} << 16) |
                            (std::uint32_t{bytes_[pos_ + 2]} << 8) | std::uint32_t{bytes_[pos_ + 3]};
    pos_ += 4;
    return v;
  }

  const std::uint8_t* take(std::size_t n) {
    need(n);
    const std::uint8_t* p = bytes_.data() + pos_;
    pos_ += n;
    return p;
  }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) {
      throw FormatError(name_ + ": truncated at byte offset " + std::to_string(bytes_.size()) +
                        " (needed " + std::to_string(n) + " bytes at offset " + std::to_string(pos_) + ")");
    }
  }

  const std::vector<std::uint8_t>& bytes_;
  std::string name_;
  std::size_t pos_ = 0;
};

void put_be32(std::ofstream& out, std::uint32_t v) {
  const std::array<char, 4> b{static_cast<char>(v >> 24), static_cast<char>(v >> 16), static_cast<char>(v >> 8),
                              static_cast<char>(v)};
  out.write(b.data(), b.size());
}

std::string hex32(std::uint32_t v) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string s = "0x";
  for (int shift = 28; shift >= 0; shift -= 4) s += digits[(v >> shift) & 0xF];
  return s;
}

}  // namespace

Dataset Dataset::head(std::size_t n) const {
  std::vector<std::size_t> idx(std::min(n, size()));
  for (std::size_t k = 0; k < idx.size(); ++k) idx[k] = k;
  return select(idx);
}

Dataset Dataset::select(const std::vector<std::size_t>& indices) const {
  Dataset out;
  out.class_count = class_count;
  out.samples.assign(indices.size(), dim());
  out.labels.resize(indices.size());
  if (soft_targets) out.soft_targets = Matrix(indices.size(), soft_targets->cols());
  for (std::size_t r = 0; r < indices.size(); ++r) {
    const std::size_t src = indices[r];
    if (src >= size()) throw DimensionError("Dataset::select: index out of range");
    std::copy_n(samples.row(src).begin(), dim(), out.samples.row(r).begin());
    out.labels[r] = labels[src];
    if (soft_targets) {
      std::copy_n(soft_targets->row(src).begin(), soft_targets->cols(), out.soft_targets->row(r).begin());
    }
  }
  return out;
}

Dataset load_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path) {
  const auto image_bytes = read_file(images_path);
  const auto label_bytes = read_file(labels_path);

  ByteReader images(image_bytes, images_path.string());
  const std::uint32_t image_magic = images.be32();
  if (image_magic != kImageMagic) {
    throw FormatError(images_path.string() + ": bad image magic " + hex32(image_magic));
  }
  const std::uint32_t count = images.be32();
  const std::uint32_t rows = images.be32();
  const std::uint32_t cols = images.be32();

  ByteReader labels(label_bytes, labels_path.string());
  const std::uint32_t label_magic = labels.be32();
  if (label_magic != kLabelMagic) {
    throw FormatError(labels_path.string() + ": bad label magic " + hex32(label_magic));
  }
  const std::uint32_t label_count = labels.be32();
  if (label_count != count) {
    throw FormatError("image count " + std::to_string(count) + " differs from label count " +
                      std::to_string(label_count));
  }

  const std::size_t dim = std::size_t{rows} * cols;
  Dataset data;
  data.samples.assign(count, dim);
  const std::uint8_t* pixels = images.take(std::size_t{count} * dim);
  auto flat = data.samples.data();
  for (std::size_t k = 0; k < flat.size(); ++k) flat[k] = pixels[k] / 255.0;

  const std::uint8_t* raw_labels = labels.take(count);
  data.labels.assign(raw_labels, raw_labels + count);
  std::uint32_t top = 0;
  for (auto l : data.labels) top = std::max(top, l);
  data.class_count = count == 0 ? 0 : std::size_t{top} + 1;
  return data;
}

void write_idx(const Dataset& data, const std::filesystem::path& images_path,
               const std::filesystem::path& labels_path, std::size_t height, std::size_t width) {
  if (height * width != data.dim()) throw DimensionError("write_idx: height * width differs from sample size");
  std::ofstream images(images_path, std::ios::binary);
  if (!images) throw FormatError("cannot write " + images_path.string());
  put_be32(images, kImageMagic);
  put_be32(images, static_cast<std::uint32_t>(data.size()));
  put_be32(images, static_cast<std::uint32_t>(height));
  put_be32(images, static_cast<std::uint32_t>(width));
  std::vector<char> pixels(data.samples.size());
  const auto flat = data.samples.data();
  for (std::size_t k = 0; k < flat.size(); ++k) {
    const double v = std::clamp(flat[k], 0.0, 1.0);
    pixels[k] = static_cast<char>(static_cast<std::uint8_t>(std::lround(v * 255.0)));
  }
  images.write(pixels.data(), static_cast<std::streamsize>(pixels.size()));

  std::ofstream labels(labels_path, std::ios::binary);
  if (!labels) throw FormatError("cannot write " + labels_path.string());
  put_be32(labels, kLabelMagic);
  put_be32(labels, static_cast<std::uint32_t>(data.size()));
  for (auto l : data.labels) labels.put(static_cast<char>(l));
}

Dataset synth_blobs(std::size_t n_per_class, std::size_t classes, std::size_t dim, std::uint64_t seed,
                    double noise) {
  if (n_per_class == 0 || classes == 0 || dim == 0) throw ConfigError("synth_blobs: sizes must be positive");
  if (noise < 0.0) throw ConfigError("synth_blobs: noise must be non-negative");
  Rng rng(seed);
  Matrix centers(classes, dim);
  for (double& c : centers.data()) c = rng.uniform(0.25, 0.75);

  Dataset data;
  data.class_count = classes;
  data.samples.assign(n_per_class * classes, dim);
  data.labels.resize(n_per_class * classes);
  for (std::size_t n = 0; n < n_per_class; ++n) {
    for (std::size_t c = 0; c < classes; ++c) {
      const std::size_t r = n * classes + c;
      data.labels[r] = static_cast<std::uint32_t>(c);
      for (std::size_t d = 0; d < dim; ++d) {
        const double v = noise == 0.0 ? centers(c, d) : centers(c, d) + noise * rng.normal();
        data.samples(r, d) = std::clamp(v, 0.0, 1.0);
      }
    }
  }
  return data;
}

void scale_features(Matrix& samples) {
  for (std::size_t d = 0; d < samples.cols(); ++d) {
    double lo = 0.0, hi = 0.0;
    for (std::size_t r = 0; r < samples.rows(); ++r) {
      const double v = samples(r, d);
      if (r == 0 || v < lo) lo = v;
      if (r == 0 || v > hi) hi = v;
    }
    const double span = hi - lo;
    for (std::size_t r = 0; r < samples.rows(); ++r) {
      samples(r, d) = span > 0.0 ? (samples(r, d) - lo) / span : 0.0;
    }
  }
}

MnistFiles mnist_files(const std::filesystem::path& dir) {
  return MnistFiles{dir / "train-images-idx3-ubyte", dir / "train-labels-idx1-ubyte",
                    dir / "t10k-images-idx3-ubyte", dir / "t10k-labels-idx1-ubyte"};
}

}  // namespace hashednets
