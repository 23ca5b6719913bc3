#include "adt/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include "adt/errors.hpp"

namespace adt {
namespace {

constexpr Real kPi = 3.14159265358979323846;

std::uint32_t read_be32(std::istream& in, const char* field) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (!in) throw FormatError(std::string("idx: truncated ") + field);
  return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) |
         (std::uint32_t(b[2]) << 8) | std::uint32_t(b[3]);
}

std::vector<Matrix> place_centers(int num_classes, int dim, Real separation,
                                  std::mt19937_64& rng) {
  // Centers drawn uniformly in a box that scales with separation and class
  // count; rejection with bounded retries.
  const Real box =
      separation *
      std::max(1.0, 0.75 * std::pow(static_cast<Real>(num_classes),
                                    1.0 / static_cast<Real>(dim)));
  std::uniform_real_distribution<Real> coord(-box, box);
  constexpr int kMaxTries = 2000;
  std::vector<Matrix> centers;
  for (int c = 0; c < num_classes; ++c) {
    bool placed = false;
    for (int attempt = 0; attempt < kMaxTries && !placed; ++attempt) {
      Matrix cand(dim, 1);
      for (int d = 0; d < dim; ++d) cand(d, 0) = coord(rng);
      placed = true;
      for (const Matrix& other : centers) {
        if ((cand - other).norm() < separation) {
          placed = false;
          break;
        }
      }
      if (placed) centers.push_back(cand);
    }
    if (!placed) {
      throw GenerationError("gen_blobs: could not place centers at separation " +
                            std::to_string(separation));
    }
  }
  return centers;
}

}  // namespace

Dataset gen_blobs(int num_classes, int per_class_n, int dim, Real separation,
                  std::uint64_t seed) {
  if (num_classes < 2 || dim < 2 || per_class_n < 1) {
    throw InvalidParameterError("gen_blobs: need C >= 2, dim >= 2, n >= 1");
  }
  if (!(separation > 0.0) || !std::isfinite(separation)) {
    throw InvalidParameterError("gen_blobs: separation must be positive and finite");
  }
  std::mt19937_64 rng(seed);
  const std::vector<Matrix> centers =
      place_centers(num_classes, dim, separation, rng);
  std::normal_distribution<Real> unit_noise(0.0, 1.0);
  Dataset ds;
  ds.num_classes = num_classes;
  std::int64_t id = 0;
  for (int c = 0; c < num_classes; ++c) {
    for (int i = 0; i < per_class_n; ++i) {
      Vector x(dim);
      for (int d = 0; d < dim; ++d) x[d] = centers[c](d, 0) + unit_noise(rng);
      ds.samples.push_back(Sample::feature(std::move(x), id++));
      ds.labels.push_back(c);
    }
  }
  return ds;
}

Dataset gen_two_moons(int n, Real noise, std::uint64_t seed) {
  if (n < 10) {
    throw InvalidParameterError("gen_two_moons: need n >= 10");
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<Real> arc(0.0, kPi);
  std::normal_distribution<Real> jitter(0.0, 1.0);
  Dataset ds;
  ds.num_classes = 2;
  const int n_upper = n / 2;
  for (int i = 0; i < n; ++i) {
    const bool upper = i < n_upper;
    const Real t = arc(rng);
    Vector x(2);
    if (upper) {
      x << std::cos(t), std::sin(t);
    } else {
      x << 1.0 - std::cos(t), 0.5 - std::sin(t);
    }
    if (noise > 0.0) {
      x[0] += noise * jitter(rng);
      x[1] += noise * jitter(rng);
    }
    ds.samples.push_back(Sample::feature(std::move(x), i));
    ds.labels.push_back(upper ? 0 : 1);
  }
  return ds;
}

Dataset load_idx_images(const std::string& images_path,
                        const std::string& labels_path) {
  std::ifstream img(images_path, std::ios::binary);
  if (!img) throw FormatError("idx: cannot open images file " + images_path);
  std::ifstream lab(labels_path, std::ios::binary);
  if (!lab) throw FormatError("idx: cannot open labels file " + labels_path);

  const std::uint32_t img_magic = read_be32(img, "image magic");
  if (img_magic != 0x00000803u) {
    throw FormatError("idx: bad image magic number");
  }
  const std::uint32_t count = read_be32(img, "image count");
  const std::uint32_t rows = read_be32(img, "image rows");
  const std::uint32_t cols = read_be32(img, "image cols");

  const std::uint32_t lab_magic = read_be32(lab, "label magic");
  if (lab_magic != 0x00000801u) {
    throw FormatError("idx: bad label magic number");
  }
  const std::uint32_t lab_count = read_be32(lab, "label count");
  if (lab_count != count) {
    throw FormatError("idx: image/label count mismatch");
  }

  Dataset ds;
  const size_t pixels = static_cast<size_t>(rows) * cols;
  std::vector<unsigned char> buf(pixels);
  int max_label = 0;
  for (std::uint32_t i = 0; i < count; ++i) {
    img.read(reinterpret_cast<char*>(buf.data()),
             static_cast<std::streamsize>(pixels));
    if (!img) throw FormatError("idx: truncated image data");
    Vector v(static_cast<Eigen::Index>(pixels));
    for (size_t p = 0; p < pixels; ++p) v[static_cast<Eigen::Index>(p)] = buf[p] / 255.0;
    ds.samples.push_back(Sample::image(std::move(v), static_cast<int>(rows),
                                       static_cast<int>(cols), 1,
                                       static_cast<std::int64_t>(i)));
    int label_byte = lab.get();
    if (label_byte == EOF) throw FormatError("idx: truncated label data");
    ds.labels.push_back(label_byte);
    max_label = std::max(max_label, label_byte);
  }
  ds.num_classes = std::max(2, max_label + 1);
  return ds;
}

Dataset load_csv_vectors(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("csv: cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw FormatError("csv: missing header");
  std::vector<std::string> cols;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cols.push_back(cell);
  }
  if (cols.size() < 2 || cols.back() != "label") {
    throw FormatError("csv: header must be f0,...,fd,label");
  }
  const int dim = static_cast<int>(cols.size()) - 1;
  for (int d = 0; d < dim; ++d) {
    if (cols[static_cast<size_t>(d)] != "f" + std::to_string(d)) {
      throw FormatError("csv: feature column " + std::to_string(d) +
                        " must be named f" + std::to_string(d));
    }
  }
  Dataset ds;
  int max_label = 0;
  std::int64_t id = 0;
  size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    Vector x(dim);
    for (int d = 0; d < dim; ++d) {
      if (!std::getline(ss, cell, ',')) {
        throw FormatError("csv: row " + std::to_string(line_no) +
                          " has too few fields");
      }
      try {
        x[d] = std::stod(cell);
      } catch (const std::exception&) {
        throw FormatError("csv: row " + std::to_string(line_no) +
                          " field f" + std::to_string(d) + " is not a number");
      }
    }
    if (!std::getline(ss, cell, ',')) {
      throw FormatError("csv: row " + std::to_string(line_no) +
                        " is missing the label field");
    }
    int label = 0;
    try {
      label = std::stoi(cell);
    } catch (const std::exception&) {
      throw FormatError("csv: row " + std::to_string(line_no) +
                        " label is not an integer");
    }
    if (label < 0) {
      throw FormatError("csv: row " + std::to_string(line_no) +
                        " label is negative");
    }
    ds.samples.push_back(Sample::feature(std::move(x), id++));
    ds.labels.push_back(label);
    max_label = std::max(max_label, label);
  }
  if (ds.samples.empty()) throw FormatError("csv: no data rows");
  ds.num_classes = std::max(2, max_label + 1);
  return ds;
}

void save_csv_vectors(const Dataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw FormatError("csv: cannot write " + path);
  const Eigen::Index dim = ds.samples.empty() ? 0 : ds.samples.front().dim();
  for (Eigen::Index d = 0; d < dim; ++d) out << "f" << d << ",";
  out << "label\n";
  char buf[64];
  for (size_t i = 0; i < ds.samples.size(); ++i) {
    for (Eigen::Index d = 0; d < dim; ++d) {
      std::snprintf(buf, sizeof(buf), "%.17g", ds.samples[i].data[d]);
      out << buf << ",";
    }
    out << ds.labels[i] << "\n";
  }
}

SplitResult split(const Dataset& ds, const SplitSpec& spec) {
  const int total = static_cast<int>(ds.size());
  if (spec.num_labeled < 0 || spec.num_validation < 0 ||
      spec.num_labeled + spec.num_validation > total) {
    throw SplitError("split: requested sizes exceed the dataset");
  }
  std::vector<int> order(ds.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(spec.seed);
  std::shuffle(order.begin(), order.end(), rng);

  std::vector<int> validation_idx(order.begin(),
                                  order.begin() + spec.num_validation);
  std::vector<int> rest(order.begin() + spec.num_validation, order.end());

  std::vector<int> labeled_idx;
  std::vector<char> taken(ds.size(), 0);
  for (int i : validation_idx) taken[static_cast<size_t>(i)] = 1;

  if (spec.per_class_balance) {
    const int per_class = spec.num_labeled / ds.num_classes;
    std::vector<int> quota(static_cast<size_t>(ds.num_classes), per_class);
    for (int i : rest) {
      int& q = quota[static_cast<size_t>(ds.labels[static_cast<size_t>(i)])];
      if (q > 0) {
        labeled_idx.push_back(i);
        taken[static_cast<size_t>(i)] = 1;
        --q;
      }
    }
    for (int c = 0; c < ds.num_classes; ++c) {
      if (quota[static_cast<size_t>(c)] > 0) {
        throw SplitError("split: class " + std::to_string(c) +
                         " has too few samples for a balanced labeled set");
      }
    }
  } else {
    labeled_idx.assign(rest.begin(),
                       rest.begin() + std::min<size_t>(rest.size(),
                                                       spec.num_labeled));
    for (int i : labeled_idx) taken[static_cast<size_t>(i)] = 1;
  }

  SplitResult out;
  out.labeled.num_classes = ds.num_classes;
  out.unlabeled.num_classes = ds.num_classes;
  out.validation.num_classes = ds.num_classes;
  for (int i : labeled_idx) {
    out.labeled.samples.push_back(ds.samples[static_cast<size_t>(i)]);
    out.labeled.labels.push_back(ds.labels[static_cast<size_t>(i)]);
  }
  for (int i : validation_idx) {
    out.validation.samples.push_back(ds.samples[static_cast<size_t>(i)]);
    out.validation.labels.push_back(ds.labels[static_cast<size_t>(i)]);
  }
  for (int i : rest) {
    if (taken[static_cast<size_t>(i)]) continue;
    out.unlabeled.samples.push_back(ds.samples[static_cast<size_t>(i)]);
    out.unlabeled_eval_labels.push_back(ds.labels[static_cast<size_t>(i)]);
  }
  return out;
}

std::pair<Real, Real> value_range(const std::vector<Sample>& samples) {
  Real lo = std::numeric_limits<Real>::infinity();
  Real hi = -std::numeric_limits<Real>::infinity();
  for (const Sample& s : samples) {
    if (s.data.size() == 0) continue;
    lo = std::min(lo, s.data.minCoeff());
    hi = std::max(hi, s.data.maxCoeff());
  }
  return {lo, hi};
}

}  // namespace adt
