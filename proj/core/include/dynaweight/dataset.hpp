#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace dynaweight {

/// Dense classification dataset; features are row-major n_samples x dim,
/// labels are class ids in [0, num_classes).
struct Dataset {
  int num_classes = 0;
  int dim = 0;
  std::vector<double> features;
  std::vector<int> labels;

  int size() const { return static_cast<int>(labels.size()); }
  const double* row(int i) const { return features.data() + static_cast<std::size_t>(i) * dim; }

  /// Samples per class, indexed by class id.
  std::vector<int> class_counts() const;
};

/// Per-server shards of a source dataset. Shards are disjoint by sample and
/// their union is a subset of the source.
struct Partition {
  std::vector<Dataset> shards;
  std::uint64_t seed = 0;
};

// Synthetic Gaussian blobs: per-class means drawn once from the uniform cube
// [-1,1]^dim, then per_class isotropic samples with the given standard
// deviation around each mean. Deterministic in seed; samples are grouped by
// class in ascending class order.
Dataset generate_blobs(int num_classes, int dim, int per_class, double spread,
                       std::uint64_t seed);

// IDX-format image/label pair (the published MNIST layout: big-endian magic
// 0x803/0x801, dims, raw bytes). Pixels are scaled to [0,1] and flattened
// row-major.
Dataset load_idx(const std::string& images_path, const std::string& labels_path);

// Copies the selected rows into a new dataset.
Dataset subset(const Dataset& ds, const std::vector<int>& indices);

// Heterogeneity recipe: servers whose 1-based id is a multiple of 4 get
// balanced_per_class samples of every class; each remaining server gets data
// from a per-server uniform draw of minor classes (count in
// [minor_lo, minor_hi]), splitting each class pool equally among the servers
// that picked it. balanced_per_class <= 0 selects
// size / (n_servers * num_classes). Deterministic in seed.
Partition partition_heterogeneous(const Dataset& ds, int n_servers, int minor_lo,
                                  int minor_hi, int balanced_per_class, std::uint64_t seed);

inline Partition partition_heterogeneous(const Dataset& ds, int n_servers, int minor_classes,
                                         int balanced_per_class, std::uint64_t seed) {
  return partition_heterogeneous(ds, n_servers, minor_classes, minor_classes,
                                 balanced_per_class, seed);
}

// Seeded shuffle then near-equal contiguous split; shard sizes differ by at
// most one.
Partition partition_iid(const Dataset& ds, int n_servers, std::uint64_t seed);

// "server,class,count" rows for every shard.
void write_partition_summary_csv(const Partition& p, std::ostream& out);

}  // namespace dynaweight
