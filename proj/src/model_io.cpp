#include "hashednets/model_io.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include <nlohmann/json.hpp>

#include "hashednets/error.hpp"

namespace hashednets {
namespace {

using nlohmann::json;

constexpr std::array<char, 8> kMagic{'H', 'S', 'H', 'N', 'E', 'T', '0', '1'};
constexpr int kFormatVersion = 1;

void put_u64(std::ostream& out, std::uint64_t v) {
  std::array<char, 8> b{};
  for (int k = 0; k < 8; ++k) b[k] = static_cast<char>(v >> (8 * k));
  out.write(b.data(), b.size());
}

void put_u32(std::ostream& out, std::uint32_t v) {
  std::array<char, 4> b{};
  for (int k = 0; k < 4; ++k) b[k] = static_cast<char>(v >> (8 * k));
  out.write(b.data(), b.size());
}

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  void bytes(char* dst, std::size_t n, const char* what) {
    in_.read(dst, static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) {
      throw FormatError(std::string("model file truncated while reading ") + what + " at byte offset " +
                        std::to_string(offset_ + static_cast<std::size_t>(in_.gcount())));
    }
    offset_ += n;
  }

  std::uint64_t u64(const char* what) {
    std::array<unsigned char, 8> b{};
    bytes(reinterpret_cast<char*>(b.data()), b.size(), what);
    std::uint64_t v = 0;
    for (int k = 7; k >= 0; --k) v = (v << 8) | b[k];
    return v;
  }

  std::uint32_t u32(const char* what) {
    std::array<unsigned char, 4> b{};
    bytes(reinterpret_cast<char*>(b.data()), b.size(), what);
    std::uint32_t v = 0;
    for (int k = 3; k >= 0; --k) v = (v << 8) | b[k];
    return v;
  }

 private:
  std::istream& in_;
  std::size_t offset_ = 0;
};

json describe(const Layer& layer) {
  json j;
  j["kind"] = std::string(layer_kind_name(layer.kind()));
  j["n_in"] = layer.n_in();
  j["n_out"] = layer.n_out();
  j["param_count"] = layer.param_count();
  switch (layer.kind()) {
    case LayerKind::standard:
      break;
    case LayerKind::hashed: {
      const auto& h = static_cast<const HashedLayer&>(layer);
      const auto& a = h.assignment();
      j["bucket_count"] = h.bucket_count();
      j["sign_enabled"] = h.sign_enabled();
      j["hash_bias"] = h.hash_bias();
      j["index_mode"] = std::string(index_mode_name(h.index_mode()));
      if (a.is_seeded()) {
        j["assignment"] = "seeded";
        j["base_seed"] = a.spec().base_seed;
        j["layer_index"] = a.spec().layer_index;
      } else {
        j["assignment"] = "table";
      }
      break;
    }
    case LayerKind::edge_removed: {
      const auto& e = static_cast<const EdgeRemovedLayer&>(layer);
      j["kept"] = e.kept();
      j["mask_seed"] = e.mask_seed();
      j["mask_bias"] = e.mask_bias();
      break;
    }
    case LayerKind::low_rank: {
      const auto& r = static_cast<const LowRankLayer&>(layer);
      j["rank"] = r.rank();
      j["fixed_seed"] = r.fixed_seed();
      break;
    }
  }
  return j;
}

template <typename T>
T field(const json& j, const char* key) {
  if (!j.contains(key)) throw FormatError(std::string("model header: layer is missing \"") + key + "\"");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw FormatError(std::string("model header: bad value for \"") + key + "\": " + e.what());
  }
}

std::unique_ptr<Layer> rebuild(const json& j, Reader& reader) {
  const auto kind = parse_layer_kind(field<std::string>(j, "kind"));
  const auto n_in = field<std::size_t>(j, "n_in");
  const auto n_out = field<std::size_t>(j, "n_out");
  const auto param_count = field<std::size_t>(j, "param_count");

  std::unique_ptr<Layer> layer;
  std::unique_ptr<HashedLayer> table_layer;
  switch (kind) {
    case LayerKind::standard:
      layer = std::make_unique<StandardLayer>(n_in, n_out);
      break;
    case LayerKind::hashed: {
      const auto k = field<std::uint32_t>(j, "bucket_count");
      const bool sign_enabled = field<bool>(j, "sign_enabled");
      const bool hash_bias = field<bool>(j, "hash_bias");
      const auto mode = parse_index_mode(field<std::string>(j, "index_mode"));
      const auto assignment = field<std::string>(j, "assignment");
      if (assignment == "seeded") {
        HashSpec spec{field<std::uint64_t>(j, "base_seed"), field<std::uint32_t>(j, "layer_index"), k};
        layer = std::make_unique<HashedLayer>(n_in, n_out, spec, HashedLayerOptions{sign_enabled, hash_bias, mode});
      } else if (assignment == "table") {
        // Tables follow the parameters in the payload; read those first.
        Vector params(param_count);
        for (double& p : params) p = std::bit_cast<double>(reader.u64("parameters"));
        const std::size_t cells = n_out * (n_in + 1);
        std::vector<std::uint32_t> buckets(cells);
        for (auto& b : buckets) b = reader.u32("bucket table");
        std::vector<std::int8_t> signs;
        if (sign_enabled) {
          signs.resize(cells);
          reader.bytes(reinterpret_cast<char*>(signs.data()), cells, "sign table");
        }
        auto h = std::make_unique<HashedLayer>(
            n_in, n_out, BucketAssignment::table(k, n_in + 1, std::move(buckets), std::move(signs)), hash_bias,
            mode);
        if (h->param_count() != param_count) throw FormatError("model header: parameter count mismatch");
        std::copy(params.begin(), params.end(), h->params().begin());
        return h;
      } else {
        throw FormatError("model header: unknown assignment \"" + assignment + "\"");
      }
      break;
    }
    case LayerKind::edge_removed:
      layer = std::make_unique<EdgeRemovedLayer>(n_in, n_out, field<std::size_t>(j, "kept"),
                                                 field<std::uint64_t>(j, "mask_seed"), field<bool>(j, "mask_bias"));
      break;
    case LayerKind::low_rank:
      layer = std::make_unique<LowRankLayer>(n_in, n_out, field<std::size_t>(j, "rank"),
                                             field<std::uint64_t>(j, "fixed_seed"));
      break;
  }
  if (layer->param_count() != param_count) {
    throw FormatError("model header: layer declares " + std::to_string(param_count) + " parameters, structure has " +
                      std::to_string(layer->param_count()));
  }
  for (double& p : layer->params()) p = std::bit_cast<double>(reader.u64("parameters"));
  return layer;
}

}  // namespace

void save_model(const Network& net, std::ostream& out) {
  json header;
  header["format_version"] = kFormatVersion;
  header["activation"] = std::string(activation_name(net.hidden_activation()));
  header["layers"] = json::array();
  for (std::size_t l = 0; l < net.layer_count(); ++l) header["layers"].push_back(describe(net.layer(l)));
  const std::string text = header.dump();

  out.write(kMagic.data(), kMagic.size());
  put_u64(out, text.size());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    const Layer& layer = net.layer(l);
    for (double p : layer.params()) put_u64(out, std::bit_cast<std::uint64_t>(p));
    if (layer.kind() != LayerKind::hashed) continue;
    const auto& a = static_cast<const HashedLayer&>(layer).assignment();
    if (a.is_seeded()) continue;
    for (auto b : a.table_buckets()) put_u32(out, b);
    for (auto s : a.table_signs()) out.put(static_cast<char>(s));
  }
  if (!out) throw FormatError("failed to write model");
}

void save_model(const Network& net, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  save_model(net, out);
}

Network load_model(std::istream& in) {
  Reader reader(in);
  std::array<char, 8> magic{};
  reader.bytes(magic.data(), magic.size(), "magic");
  if (magic != kMagic) throw FormatError("not a model file (bad magic)");
  const std::uint64_t length = reader.u64("header length");
  if (length > (std::uint64_t{1} << 30)) throw FormatError("model header length is implausible");
  std::string text(length, '\0');
  reader.bytes(text.data(), text.size(), "header");

  json header;
  try {
    header = json::parse(text);
  } catch (const json::exception& e) {
    throw FormatError(std::string("model header is not valid JSON: ") + e.what());
  }
  if (!header.contains("format_version") || header["format_version"] != kFormatVersion) {
    throw FormatError("unsupported model format version");
  }
  if (!header.contains("layers") || !header["layers"].is_array() || header["layers"].empty()) {
    throw FormatError("model header has no layers");
  }
  std::vector<std::unique_ptr<Layer>> layers;
  for (const auto& j : header["layers"]) layers.push_back(rebuild(j, reader));
  return Network(std::move(layers), parse_activation(field<std::string>(header, "activation")));
}

Network load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  return load_model(in);
}

}  // namespace hashednets
