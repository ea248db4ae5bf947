#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <type_traits>

#include "ptzcalib/core/errors.hpp"
#include "ptzcalib/forest/pan_tilt_forest.hpp"

namespace ptzcalib {

namespace {

constexpr char kMagic[4] = {'P', 'T', 'Z', 'F'};

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

template <typename T>
T to_little(T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  if constexpr (std::endian::native == std::endian::big) {
    char buf[sizeof(T)];
    std::memcpy(buf, &value, sizeof(T));
    std::reverse(buf, buf + sizeof(T));
    std::memcpy(&value, buf, sizeof(T));
  }
  return value;
}

class Writer {
 public:
  template <typename T>
  void put(T value) {
    value = to_little(value);
    char buf[sizeof(T)];
    std::memcpy(buf, &value, sizeof(T));
    out_.append(buf, sizeof(T));
  }
  void raw(const char* data, std::size_t n) { out_.append(data, n); }
  std::string& str() { return out_; }

 private:
  std::string out_;
};

class Reader {
 public:
  explicit Reader(std::string_view in) : in_(in) {}

  template <typename T>
  T get() {
    if (in_.size() - pos_ < sizeof(T)) throw ParseError("forest stream truncated");
    T value;
    std::memcpy(&value, in_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return to_little(value);
  }
  std::string_view raw(std::size_t n) {
    if (in_.size() - pos_ < n) throw ParseError("forest stream truncated");
    const auto s = in_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::size_t remaining() const { return in_.size() - pos_; }

 private:
  std::string_view in_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string serialize_forest(const PanTiltForest& forest) {
  Writer w;
  w.raw(kMagic, 4);
  w.put<std::uint32_t>(kForestFormatVersion);
  const auto& c = forest.config;
  w.put<std::int32_t>(c.tree_count);
  w.put<std::int32_t>(c.max_depth);
  w.put<std::int32_t>(c.min_samples);
  w.put<std::int32_t>(c.candidates_per_node);
  w.put<std::uint8_t>(c.bootstrap ? 1 : 0);
  w.put<std::uint64_t>(c.seed);
  w.put<double>(c.threshold_quantile);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(forest.dimension));
  w.put<double>(forest.feature_distance_threshold);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(forest.trees.size()));
  for (const auto& tree : forest.trees) {
    w.put<std::uint32_t>(static_cast<std::uint32_t>(tree.nodes.size()));
    for (const auto& node : tree.nodes) {
      if (node.is_leaf()) {
        w.put<std::uint8_t>(1);
        w.put<std::int32_t>(node.sample_count);
        w.put<double>(node.mean_ray.pan);
        w.put<double>(node.mean_ray.tilt);
        for (Eigen::Index k = 0; k < node.mean_descriptor.size(); ++k) w.put<double>(node.mean_descriptor[k]);
      } else {
        w.put<std::uint8_t>(0);
        w.put<std::int32_t>(node.split.feature_index);
        w.put<double>(node.split.threshold);
        w.put<std::int32_t>(node.left);
        w.put<std::int32_t>(node.right);
      }
    }
  }
  w.put<std::uint64_t>(fnv1a(w.str()));
  return std::move(w.str());
}

PanTiltForest deserialize_forest(std::string_view bytes) {
  if (bytes.empty()) throw ParseError("empty forest stream");
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) throw ParseError("not a forest file (bad magic)");
  if (bytes.size() < 12) throw ParseError("forest stream truncated");
  {
    Reader tail(bytes.substr(bytes.size() - 8));
    if (tail.get<std::uint64_t>() != fnv1a(bytes.substr(0, bytes.size() - 8))) {
      // Report a version mismatch ahead of a checksum failure.
      Reader head(bytes.substr(4));
      if (bytes.size() >= 8 && head.get<std::uint32_t>() != kForestFormatVersion) {
        throw ParseError("unsupported forest format version");
      }
      throw ParseError("forest stream corrupted (checksum mismatch)");
    }
  }
  Reader r(bytes.substr(0, bytes.size() - 8));
  r.raw(4);
  if (r.get<std::uint32_t>() != kForestFormatVersion) throw ParseError("unsupported forest format version");

  PanTiltForest forest;
  auto& c = forest.config;
  c.tree_count = r.get<std::int32_t>();
  c.max_depth = r.get<std::int32_t>();
  c.min_samples = r.get<std::int32_t>();
  c.candidates_per_node = r.get<std::int32_t>();
  c.bootstrap = r.get<std::uint8_t>() != 0;
  c.seed = r.get<std::uint64_t>();
  c.threshold_quantile = r.get<double>();
  forest.dimension = static_cast<int>(r.get<std::uint32_t>());
  forest.feature_distance_threshold = r.get<double>();
  c.feature_distance_threshold = forest.feature_distance_threshold;
  const std::uint32_t tree_count = r.get<std::uint32_t>();
  if (tree_count == 0) throw ParseError("forest has no trees");
  if (forest.dimension <= 0) throw ParseError("invalid descriptor dimension");
  if (!(forest.feature_distance_threshold > 0.0)) throw ParseError("invalid feature distance threshold");

  for (std::uint32_t t = 0; t < tree_count; ++t) {
    PanTiltTree tree;
    const std::uint32_t node_count = r.get<std::uint32_t>();
    if (node_count == 0 || node_count > r.remaining()) throw ParseError("invalid node count");
    tree.nodes.resize(node_count);
    for (std::uint32_t i = 0; i < node_count; ++i) {
      TreeNode& node = tree.nodes[i];
      const auto kind = r.get<std::uint8_t>();
      if (kind == 1) {
        node.sample_count = r.get<std::int32_t>();
        node.mean_ray.pan = r.get<double>();
        node.mean_ray.tilt = r.get<double>();
        node.mean_descriptor.resize(forest.dimension);
        for (int k = 0; k < forest.dimension; ++k) node.mean_descriptor[k] = r.get<double>();
      } else if (kind == 0) {
        node.split.feature_index = r.get<std::int32_t>();
        node.split.threshold = r.get<double>();
        node.left = r.get<std::int32_t>();
        node.right = r.get<std::int32_t>();
        // Pre-order layout: children always follow their parent.
        const auto in_range = [&](int child) {
          return child > static_cast<int>(i) && child < static_cast<int>(node_count);
        };
        if (!in_range(node.left) || !in_range(node.right) || node.split.feature_index < 0 ||
            node.split.feature_index >= forest.dimension) {
          throw ParseError("invalid split node");
        }
      } else {
        throw ParseError("invalid node kind");
      }
    }
    // Depths from the pre-order layout.
    for (std::uint32_t i = 0; i < node_count; ++i) {
      const TreeNode& node = tree.nodes[i];
      if (!node.is_leaf()) {
        tree.nodes[node.left].depth = node.depth + 1;
        tree.nodes[node.right].depth = node.depth + 1;
      }
    }
    forest.trees.push_back(std::move(tree));
  }
  if (r.remaining() != 0) throw ParseError("trailing bytes in forest stream");
  return forest;
}

void save_forest(const std::string& path, const PanTiltForest& forest) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path + " for writing");
  const std::string bytes = serialize_forest(forest);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("failed writing " + path);
}

PanTiltForest load_forest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize_forest(bytes);
}

}  // namespace ptzcalib
