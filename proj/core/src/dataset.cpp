#include "dynaweight/dataset.hpp"

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <ostream>
#include <random>
#include <set>
#include <stdexcept>

#include "dynaweight/rng.hpp"

namespace dynaweight {

std::vector<int> Dataset::class_counts() const {
  std::vector<int> counts(num_classes, 0);
  for (int y : labels) ++counts[y];
  return counts;
}

Dataset generate_blobs(int num_classes, int dim, int per_class, double spread,
                       std::uint64_t seed) {
  if (num_classes < 2) throw std::invalid_argument("generate_blobs: need num_classes >= 2");
  if (dim < 2) throw std::invalid_argument("generate_blobs: need dim >= 2");
  if (per_class < 1) throw std::invalid_argument("generate_blobs: need per_class >= 1");
  if (!(spread > 0.0)) throw std::invalid_argument("generate_blobs: need spread > 0");

  auto rng = make_rng(seed);
  std::uniform_real_distribution<double> cube(-1.0, 1.0);
  std::normal_distribution<double> noise(0.0, spread);

  std::vector<double> means(static_cast<std::size_t>(num_classes) * dim);
  for (double& m : means) m = cube(rng);

  Dataset ds;
  ds.num_classes = num_classes;
  ds.dim = dim;
  ds.features.reserve(static_cast<std::size_t>(num_classes) * per_class * dim);
  ds.labels.reserve(static_cast<std::size_t>(num_classes) * per_class);
  for (int c = 0; c < num_classes; ++c) {
    for (int s = 0; s < per_class; ++s) {
      for (int d = 0; d < dim; ++d) {
        ds.features.push_back(means[static_cast<std::size_t>(c) * dim + d] + noise(rng));
      }
      ds.labels.push_back(c);
    }
  }
  return ds;
}

namespace {

constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;

std::uint32_t read_be32(std::ifstream& in, const std::string& path, const char* field) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) {
    throw std::runtime_error("load_idx: " + path + ": truncated while reading " + field);
  }
  return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) |
         (std::uint32_t(b[2]) << 8) | std::uint32_t(b[3]);
}

}  // namespace

Dataset load_idx(const std::string& images_path, const std::string& labels_path) {
  std::ifstream img(images_path, std::ios::binary);
  if (!img) throw std::runtime_error("load_idx: cannot open images file " + images_path);
  std::ifstream lab(labels_path, std::ios::binary);
  if (!lab) throw std::runtime_error("load_idx: cannot open labels file " + labels_path);

  std::uint32_t img_magic = read_be32(img, images_path, "images magic");
  if (img_magic != kIdxImagesMagic) {
    throw std::runtime_error("load_idx: " + images_path + ": bad images magic 0x" +
                             [&] {
                               char buf[16];
                               std::snprintf(buf, sizeof buf, "%08x", img_magic);
                               return std::string(buf);
                             }());
  }
  std::uint32_t n_images = read_be32(img, images_path, "image count");
  std::uint32_t rows = read_be32(img, images_path, "row count");
  std::uint32_t cols = read_be32(img, images_path, "column count");

  std::uint32_t lab_magic = read_be32(lab, labels_path, "labels magic");
  if (lab_magic != kIdxLabelsMagic) {
    throw std::runtime_error("load_idx: " + labels_path + ": bad labels magic 0x" +
                             [&] {
                               char buf[16];
                               std::snprintf(buf, sizeof buf, "%08x", lab_magic);
                               return std::string(buf);
                             }());
  }
  std::uint32_t n_labels = read_be32(lab, labels_path, "label count");
  if (n_images != n_labels) {
    throw std::runtime_error("load_idx: sample count mismatch: " + std::to_string(n_images) +
                             " images vs " + std::to_string(n_labels) + " labels");
  }

  const std::size_t dim = static_cast<std::size_t>(rows) * cols;
  std::vector<unsigned char> pixels(static_cast<std::size_t>(n_images) * dim);
  if (!img.read(reinterpret_cast<char*>(pixels.data()),
                static_cast<std::streamsize>(pixels.size()))) {
    throw std::runtime_error("load_idx: " + images_path + ": truncated pixel data (expected " +
                             std::to_string(pixels.size()) + " bytes)");
  }
  std::vector<unsigned char> raw_labels(n_labels);
  if (!lab.read(reinterpret_cast<char*>(raw_labels.data()),
                static_cast<std::streamsize>(raw_labels.size()))) {
    throw std::runtime_error("load_idx: " + labels_path + ": truncated label data (expected " +
                             std::to_string(raw_labels.size()) + " bytes)");
  }

  Dataset ds;
  ds.dim = static_cast<int>(dim);
  ds.features.resize(pixels.size());
  for (std::size_t i = 0; i < pixels.size(); ++i) ds.features[i] = pixels[i] / 255.0;
  ds.labels.resize(n_labels);
  int max_label = 0;
  for (std::size_t i = 0; i < raw_labels.size(); ++i) {
    ds.labels[i] = raw_labels[i];
    max_label = std::max(max_label, ds.labels[i]);
  }
  ds.num_classes = max_label + 1;
  return ds;
}

Dataset subset(const Dataset& ds, const std::vector<int>& indices) {
  Dataset out;
  out.num_classes = ds.num_classes;
  out.dim = ds.dim;
  out.features.reserve(indices.size() * static_cast<std::size_t>(ds.dim));
  out.labels.reserve(indices.size());
  for (int idx : indices) {
    const double* r = ds.row(idx);
    out.features.insert(out.features.end(), r, r + ds.dim);
    out.labels.push_back(ds.labels[idx]);
  }
  return out;
}

namespace {

bool is_balanced_server(int server) { return (server + 1) % 4 == 0; }  // 1-based multiples of 4

}  // namespace

Partition partition_heterogeneous(const Dataset& ds, int n_servers, int minor_lo, int minor_hi,
                                  int balanced_per_class, std::uint64_t seed) {
  const int K = ds.num_classes;
  if (n_servers < 1) throw std::invalid_argument("partition_heterogeneous: need n_servers >= 1");
  if (minor_lo < 1 || minor_hi < minor_lo || minor_hi > K) {
    throw std::invalid_argument("partition_heterogeneous: minor class range [" +
                                std::to_string(minor_lo) + ", " + std::to_string(minor_hi) +
                                "] invalid for " + std::to_string(K) + " classes");
  }
  if (balanced_per_class <= 0) balanced_per_class = ds.size() / (n_servers * K);
  if (balanced_per_class < 1) {
    throw std::invalid_argument("partition_heterogeneous: dataset too small for one sample "
                                "per class per balanced server");
  }

  auto rng = make_rng(derive_seed(seed, seed_stream::kPartition));

  // Per-class sample pools, each shuffled once.
  std::vector<std::vector<int>> pools(K);
  for (int i = 0; i < ds.size(); ++i) pools[ds.labels[i]].push_back(i);
  for (auto& pool : pools) std::shuffle(pool.begin(), pool.end(), rng);

  // Minor-class choices, drawn per server in id order.
  std::vector<std::vector<int>> minor_choices(n_servers);
  std::uniform_int_distribution<int> count_dist(minor_lo, minor_hi);
  for (int s = 0; s < n_servers; ++s) {
    if (is_balanced_server(s)) continue;
    int count = count_dist(rng);
    std::vector<int> classes(K);
    std::iota(classes.begin(), classes.end(), 0);
    std::shuffle(classes.begin(), classes.end(), rng);
    classes.resize(count);
    std::sort(classes.begin(), classes.end());
    minor_choices[s] = std::move(classes);
  }

  std::vector<std::size_t> cursor(K, 0);
  auto draw = [&](int cls, int count) {
    auto& pool = pools[cls];
    if (cursor[cls] + count > pool.size()) {
      throw std::runtime_error("partition_heterogeneous: class " + std::to_string(cls) +
                               " exhausted (need " + std::to_string(count) + ", have " +
                               std::to_string(pool.size() - cursor[cls]) + ")");
    }
    std::vector<int> taken(pool.begin() + cursor[cls], pool.begin() + cursor[cls] + count);
    cursor[cls] += count;
    return taken;
  };

  std::vector<std::vector<int>> assigned(n_servers);
  for (int s = 0; s < n_servers; ++s) {
    if (!is_balanced_server(s)) continue;
    for (int c = 0; c < K; ++c) {
      auto taken = draw(c, balanced_per_class);
      assigned[s].insert(assigned[s].end(), taken.begin(), taken.end());
    }
  }

  // Remaining pool of each class is split equally among the minor servers
  // that picked it.
  std::vector<std::vector<int>> pickers(K);
  for (int s = 0; s < n_servers; ++s) {
    for (int c : minor_choices[s]) pickers[c].push_back(s);
  }
  for (int c = 0; c < K; ++c) {
    if (pickers[c].empty()) continue;
    int share = static_cast<int>((pools[c].size() - cursor[c]) / pickers[c].size());
    for (int s : pickers[c]) {
      auto taken = draw(c, share);
      assigned[s].insert(assigned[s].end(), taken.begin(), taken.end());
    }
  }

  Partition part;
  part.seed = seed;
  part.shards.reserve(n_servers);
  for (int s = 0; s < n_servers; ++s) {
    if (assigned[s].empty()) {
      throw std::runtime_error("partition_heterogeneous: server " + std::to_string(s) +
                               " received no samples (class pools exhausted)");
    }
    std::sort(assigned[s].begin(), assigned[s].end());
    part.shards.push_back(subset(ds, assigned[s]));
  }
  return part;
}

Partition partition_iid(const Dataset& ds, int n_servers, std::uint64_t seed) {
  if (n_servers < 1) throw std::invalid_argument("partition_iid: need n_servers >= 1");
  if (n_servers > ds.size()) {
    throw std::invalid_argument("partition_iid: more servers (" + std::to_string(n_servers) +
                                ") than samples (" + std::to_string(ds.size()) + ")");
  }
  std::vector<int> order(ds.size());
  std::iota(order.begin(), order.end(), 0);
  auto rng = make_rng(derive_seed(seed, seed_stream::kPartition));
  std::shuffle(order.begin(), order.end(), rng);

  Partition part;
  part.seed = seed;
  const int base = ds.size() / n_servers;
  const int extra = ds.size() % n_servers;
  std::size_t pos = 0;
  for (int s = 0; s < n_servers; ++s) {
    int take = base + (s < extra ? 1 : 0);
    std::vector<int> idx(order.begin() + pos, order.begin() + pos + take);
    pos += take;
    part.shards.push_back(subset(ds, idx));
  }
  return part;
}

void write_partition_summary_csv(const Partition& p, std::ostream& out) {
  out << "server,class,count\n";
  for (std::size_t s = 0; s < p.shards.size(); ++s) {
    auto counts = p.shards[s].class_counts();
    for (std::size_t c = 0; c < counts.size(); ++c) {
      out << s << ',' << c << ',' << counts[c] << '\n';
    }
  }
}

}  // namespace dynaweight
