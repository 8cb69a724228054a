#include "lassl/synthdata.hpp"

#include <Eigen/QR>
#include <algorithm>
#include <fstream>
#include <numeric>
#include <random>

#include "lassl/binio.hpp"

namespace lassl {

namespace {
constexpr char kDatasetMagic[4] = {'L', 'A', 'S', 'D'};
constexpr std::uint32_t kDatasetVersion = 1;
}  // namespace

void GeneratorConfig::validate() const {
  if (n <= 0) throw ConfigError("generator: n must be positive");
  if (target.cardinality < 2) throw ConfigError("generator: target cardinality must be >= 2");
  if (target_signal_scale <= 0.0) throw ConfigError("generator: target_signal_scale must be > 0");
  if (noise_sigma < 0.0) throw ConfigError("generator: noise_sigma must be >= 0");
  for (const auto& c : confounds) {
    if (c.attr.cardinality != target.cardinality) {
      throw ConfigError("generator: confound '" + c.attr.name +
                        "' cardinality must equal target cardinality");
    }
    if (c.aligned_ratio < 0.0 || c.aligned_ratio > 1.0) {
      throw ConfigError("generator: aligned_ratio must lie in [0, 1]");
    }
    if (c.signal_scale <= 0.0) throw ConfigError("generator: signal_scale must be > 0");
  }
  const int needed = (1 + static_cast<int>(confounds.size())) * target.cardinality;
  if (input_dim < needed) {
    throw DimensionError("generator: input_dim " + std::to_string(input_dim) +
                         " too small for " + std::to_string(needed) +
                         " mutually orthogonal prototypes");
  }
}

bool Dataset::aligned(std::int64_t i, std::size_t confound_index) const {
  if (confound_index >= confounds.size()) {
    throw std::out_of_range("dataset: confound index " + std::to_string(confound_index));
  }
  return confounds[confound_index][static_cast<std::size_t>(i)] ==
         target[static_cast<std::size_t>(i)];
}

Matrix prototype_directions(const GeneratorConfig& config) {
  config.validate();
  const int k = config.target.cardinality;
  const int blocks = 1 + static_cast<int>(config.confounds.size());
  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Matrix raw(config.input_dim, blocks * k);
  for (Eigen::Index i = 0; i < raw.rows(); ++i)
    for (Eigen::Index j = 0; j < raw.cols(); ++j) raw(i, j) = gauss(rng);
  Eigen::HouseholderQR<Matrix> qr(raw);
  Matrix q = qr.householderQ() * Matrix::Identity(config.input_dim, blocks * k);
  return q;
}

namespace {

// Per-class example counts: n split as evenly as possible, earlier classes
// take the remainder.
std::vector<std::int64_t> class_counts(std::int64_t n, int k) {
  std::vector<std::int64_t> counts(static_cast<std::size_t>(k), n / k);
  for (int c = 0; c < static_cast<int>(n % k); ++c) counts[static_cast<std::size_t>(c)]++;
  return counts;
}

}  // namespace

Dataset generate(const GeneratorConfig& config) {
  config.validate();
  const int k = config.target.cardinality;
  const auto n = config.n;
  const std::size_t num_conf = config.confounds.size();

  // Prototype draw consumes the head of the seed stream; everything after is
  // ordered (per class, per confound, then noise) so output is reproducible.
  Matrix protos = prototype_directions(config);
  std::mt19937_64 rng(config.assignment_seed != 0 ? config.assignment_seed : config.seed + 1);

  Dataset ds;
  ds.config = config;
  ds.target.resize(static_cast<std::size_t>(n));
  ds.confounds.assign(num_conf, std::vector<std::uint16_t>(static_cast<std::size_t>(n)));

  const auto counts = class_counts(n, k);
  std::vector<std::int64_t> class_start(static_cast<std::size_t>(k), 0);
  for (int c = 1; c < k; ++c) {
    class_start[c] = class_start[c - 1] + counts[c - 1];
  }
  for (int c = 0; c < k; ++c) {
    for (std::int64_t i = 0; i < counts[c]; ++i) {
      ds.target[static_cast<std::size_t>(class_start[c] + i)] = static_cast<std::uint16_t>(c);
    }
  }

  for (std::size_t j = 0; j < num_conf; ++j) {
    const double kj = config.confounds[j].aligned_ratio;
    for (int c = 0; c < k; ++c) {
      const std::int64_t cnt = counts[c];
      const auto n_aligned = static_cast<std::int64_t>(std::floor(kj * static_cast<double>(cnt)));
      std::vector<std::int64_t> slots(static_cast<std::size_t>(cnt));
      std::iota(slots.begin(), slots.end(), class_start[c]);
      std::shuffle(slots.begin(), slots.end(), rng);
      std::uniform_int_distribution<int> other(0, k - 2);
      for (std::int64_t s = 0; s < cnt; ++s) {
        const auto idx = static_cast<std::size_t>(slots[static_cast<std::size_t>(s)]);
        if (s < n_aligned) {
          ds.confounds[j][idx] = static_cast<std::uint16_t>(c);
        } else {
          int v = other(rng);
          if (v >= c) ++v;  // uniform over the k-1 non-target categories
          ds.confounds[j][idx] = static_cast<std::uint16_t>(v);
        }
      }
    }
  }

  std::normal_distribution<double> gauss(0.0, 1.0);
  ds.features.resize(n, config.input_dim);
  for (std::int64_t i = 0; i < n; ++i) {
    Vector x = config.target_signal_scale * protos.col(ds.target[static_cast<std::size_t>(i)]);
    for (std::size_t j = 0; j < num_conf; ++j) {
      const int col = (1 + static_cast<int>(j)) * k + ds.confounds[j][static_cast<std::size_t>(i)];
      x += config.confounds[j].signal_scale * protos.col(col);
    }
    for (int d = 0; d < config.input_dim; ++d) {
      const double v = x[d] + config.noise_sigma * gauss(rng);
      ds.features(i, d) = static_cast<double>(static_cast<float>(v));  // storage precision
    }
  }
  return ds;
}

std::pair<std::vector<std::int64_t>, std::vector<std::int64_t>> partition_by_alignment(
    const Dataset& ds, std::size_t confound_index) {
  if (confound_index >= ds.confounds.size()) {
    throw std::out_of_range("partition_by_alignment: confound index " +
                            std::to_string(confound_index));
  }
  std::vector<std::int64_t> aligned, conflicting;
  for (std::int64_t i = 0; i < ds.size(); ++i) {
    (ds.aligned(i, confound_index) ? aligned : conflicting).push_back(i);
  }
  return {std::move(aligned), std::move(conflicting)};
}

namespace {

void write_config(std::ostream& out, const GeneratorConfig& c) {
  binio::write_pod<std::int64_t>(out, c.n);
  binio::write_pod<std::int32_t>(out, c.input_dim);
  binio::write_string(out, c.target.name);
  binio::write_pod<std::int32_t>(out, c.target.cardinality);
  binio::write_pod<double>(out, c.target_signal_scale);
  binio::write_pod<double>(out, c.noise_sigma);
  binio::write_pod<std::uint64_t>(out, c.seed);
  binio::write_pod<std::uint64_t>(out, c.assignment_seed);
  binio::write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(c.confounds.size()));
  for (const auto& cf : c.confounds) {
    binio::write_string(out, cf.attr.name);
    binio::write_pod<std::int32_t>(out, cf.attr.cardinality);
    binio::write_pod<double>(out, cf.aligned_ratio);
    binio::write_pod<double>(out, cf.signal_scale);
  }
}

GeneratorConfig read_config(std::istream& in) {
  GeneratorConfig c;
  c.n = binio::read_pod<std::int64_t>(in, "config n");
  c.input_dim = binio::read_pod<std::int32_t>(in, "config input_dim");
  c.target.name = binio::read_string(in, "target name");
  c.target.cardinality = binio::read_pod<std::int32_t>(in, "target cardinality");
  c.target_signal_scale = binio::read_pod<double>(in, "target scale");
  c.noise_sigma = binio::read_pod<double>(in, "noise sigma");
  c.seed = binio::read_pod<std::uint64_t>(in, "seed");
  c.assignment_seed = binio::read_pod<std::uint64_t>(in, "assignment seed");
  const auto num = binio::read_pod<std::uint32_t>(in, "confound count");
  for (std::uint32_t j = 0; j < num; ++j) {
    ConfoundSpec cf;
    cf.attr.name = binio::read_string(in, "confound name");
    cf.attr.cardinality = binio::read_pod<std::int32_t>(in, "confound cardinality");
    cf.aligned_ratio = binio::read_pod<double>(in, "aligned ratio");
    cf.signal_scale = binio::read_pod<double>(in, "signal scale");
    c.confounds.push_back(std::move(cf));
  }
  return c;
}

}  // namespace

void write_dataset(const Dataset& ds, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot open for writing: " + path);
  binio::write_magic(out, kDatasetMagic);
  binio::write_pod<std::uint32_t>(out, kDatasetVersion);
  write_config(out, ds.config);
  for (Eigen::Index i = 0; i < ds.features.rows(); ++i)
    for (Eigen::Index j = 0; j < ds.features.cols(); ++j)
      binio::write_pod<float>(out, static_cast<float>(ds.features(i, j)));
  binio::write_array(out, ds.target.data(), ds.target.size());
  for (const auto& col : ds.confounds) binio::write_array(out, col.data(), col.size());
  if (!out) throw FormatError("write failed: " + path);
}

Dataset read_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open for reading: " + path);
  binio::expect_magic(in, kDatasetMagic, "dataset");
  binio::expect_version(in, kDatasetVersion, "dataset");
  Dataset ds;
  ds.config = read_config(in);
  const auto n = ds.config.n;
  const auto m = ds.config.input_dim;
  ds.features.resize(n, m);
  for (std::int64_t i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j)
      ds.features(i, j) = static_cast<double>(binio::read_pod<float>(in, "features"));
  ds.target.resize(static_cast<std::size_t>(n));
  binio::read_array(in, ds.target.data(), ds.target.size(), "target column");
  ds.confounds.assign(ds.config.confounds.size(), std::vector<std::uint16_t>(static_cast<std::size_t>(n)));
  for (auto& col : ds.confounds) binio::read_array(in, col.data(), col.size(), "confound column");
  return ds;
}

}  // namespace lassl
