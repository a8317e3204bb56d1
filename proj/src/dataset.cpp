#include "advkit/dataset.hpp"

#include <algorithm>
#include <cmath>

#include "advkit/error.hpp"
#include "advkit/io.hpp"
#include "advkit/json_text.hpp"
#include "advkit/rng.hpp"

namespace advkit {

std::string_view split_name(Split split) {
  switch (split) {
    case Split::train: return "train";
    case Split::test: return "test";
    case Split::adversarial: return "adversarial";
  }
  return "train";
}

Split parse_split(std::string_view name) {
  if (name == "train") return Split::train;
  if (name == "test") return Split::test;
  if (name == "adversarial") return Split::adversarial;
  throw DataError("unknown dataset split '" + std::string(name) + "'");
}

Shape Dataset::image_shape() const {
  if (images.empty()) return {};
  return Shape(images.shape().begin() + 1, images.shape().end());
}

Tensor Dataset::image(std::size_t i) const {
  if (i >= size()) throw ContractError("image index " + std::to_string(i) + " out of range");
  const Shape shape = image_shape();
  const std::size_t n = shape_size(shape);
  const auto all = images.values();
  return Tensor(shape, std::vector<double>(all.begin() + static_cast<std::ptrdiff_t>(i * n),
                                           all.begin() + static_cast<std::ptrdiff_t>((i + 1) * n)));
}

void Dataset::validate() const {
  if (labels.empty()) {
    if (!images.empty()) throw DataError("dataset has images but no labels");
    return;
  }
  if (images.rank() != 4 || images.shape()[0] != labels.size()) {
    throw DataError("dataset images " + shape_string(images.shape()) + " do not match " +
                    std::to_string(labels.size()) + " labels");
  }
  for (double v : images.values()) {
    if (!(v >= 0.0 && v <= 1.0)) throw DataError("dataset pixel outside [0, 1]");
  }
  for (std::size_t y : labels) {
    if (y >= num_classes) {
      throw DataError("label " + std::to_string(y) + " out of range for " + std::to_string(num_classes) +
                      " classes");
    }
  }
}

const Dataset& DatasetBundle::split(Split which) const {
  for (const auto& d : splits) {
    if (d.split == which) return d;
  }
  throw DataError("dataset has no '" + std::string(split_name(which)) + "' split");
}

Dataset make_dataset(const std::vector<Tensor>& images, std::vector<std::size_t> labels,
                     std::size_t num_classes, Split split) {
  if (images.size() != labels.size()) throw ContractError("image and label counts differ");
  Dataset d;
  d.num_classes = num_classes;
  d.split = split;
  d.labels = std::move(labels);
  if (images.empty()) return d;
  const Shape shape = images.front().shape();
  std::vector<double> values;
  values.reserve(images.size() * shape_size(shape));
  for (const auto& img : images) {
    if (img.shape() != shape) throw DimensionError("images in a dataset must share one shape");
    values.insert(values.end(), img.values().begin(), img.values().end());
  }
  Shape full{images.size()};
  full.insert(full.end(), shape.begin(), shape.end());
  d.images = Tensor(std::move(full), std::move(values));
  return d;
}

namespace {

Dataset synth_split(const std::vector<std::vector<double>>& prototypes, const SyntheticParams& p,
                    std::size_t count, Split split, std::uint64_t seed) {
  Rng rng(seed);
  const std::size_t pixels = shape_size(p.image_shape);
  Shape full{count};
  full.insert(full.end(), p.image_shape.begin(), p.image_shape.end());
  Dataset d;
  d.num_classes = p.num_classes;
  d.split = split;
  if (count == 0) return d;
  d.images = Tensor(full);
  auto v = d.images.values();
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t label = i % p.num_classes;
    d.labels.push_back(label);
    for (std::size_t j = 0; j < pixels; ++j) {
      const double x = prototypes[label][j] + p.noise_sigma * rng.normal();
      v[i * pixels + j] = std::clamp(x, 0.0, 1.0);
    }
  }
  return d;
}

}  // namespace

DatasetBundle make_synthetic(const SyntheticParams& params) {
  if (params.num_classes < 2) throw ConfigError("synthetic dataset needs at least 2 classes");
  if (params.image_shape.size() != 3 || shape_size(params.image_shape) == 0) {
    throw ConfigError("synthetic image shape must be [C, H, W] with positive sizes");
  }
  if (!(params.prototype_low >= 0.0 && params.prototype_low <= params.prototype_high &&
        params.prototype_high <= 1.0)) {
    throw ConfigError("prototype range must satisfy 0 <= low <= high <= 1");
  }
  if (!(params.noise_sigma >= 0.0)) throw ConfigError("noise sigma must be non-negative");
  if (!(params.class_contrast > 0.0 &&
        2.0 * params.class_contrast <= params.prototype_high - params.prototype_low)) {
    throw ConfigError("class contrast must be positive and at most half the prototype range");
  }

  Rng proto_rng(derive_seed(params.seed, 0));
  const std::size_t pixels = shape_size(params.image_shape);
  const double a = params.class_contrast;
  std::vector<double> base(pixels);
  for (double& v : base) v = proto_rng.uniform(params.prototype_low + a, params.prototype_high - a);
  std::vector<std::vector<double>> prototypes(params.num_classes, std::vector<double>(pixels));
  for (auto& proto : prototypes) {
    for (std::size_t j = 0; j < pixels; ++j) proto[j] = base[j] + proto_rng.uniform(-a, a);
  }

  DatasetBundle b;
  b.num_classes = params.num_classes;
  b.image_shape = params.image_shape;
  b.seed = params.seed;
  b.splits.push_back(synth_split(prototypes, params, params.train_count, Split::train, derive_seed(params.seed, 1)));
  b.splits.push_back(synth_split(prototypes, params, params.test_count, Split::test, derive_seed(params.seed, 2)));
  b.dataset_id = compute_dataset_id(b);
  for (auto& d : b.splits) d.dataset_id = b.dataset_id;
  return b;
}

namespace {

std::string label_blob(const Dataset& d) {
  std::vector<double> labels(d.labels.begin(), d.labels.end());
  return encode_f64_le(labels);
}

std::string image_blob(const Dataset& d) {
  if (d.images.empty()) return {};
  return encode_f64_le(d.images.values());
}

}  // namespace

std::string compute_dataset_id(const DatasetBundle& bundle) {
  std::string content = "K=" + std::to_string(bundle.num_classes) + ";shape=" + shape_string(bundle.image_shape);
  for (const auto& d : bundle.splits) {
    content += ";split=";
    content += split_name(d.split);
    content += ";n=" + std::to_string(d.size()) + ";";
    content += image_blob(d);
    content += label_blob(d);
  }
  return sha256_hex(content);
}

namespace {

std::uint32_t read_be32(const std::string& bytes, std::size_t offset, const std::string& what) {
  if (offset + 4 > bytes.size()) throw DataError(what + " is truncated");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v = (v << 8) | static_cast<unsigned char>(bytes[offset + i]);
  return v;
}

}  // namespace

Dataset read_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path,
                 Split split, std::size_t num_classes) {
  const std::string img = read_file(images_path);
  const std::string lab = read_file(labels_path);
  const std::string img_name = "IDX image file '" + images_path.string() + "'";
  const std::string lab_name = "IDX label file '" + labels_path.string() + "'";

  if (read_be32(img, 0, img_name) != 0x00000803u) throw DataError(img_name + " has wrong magic number");
  if (read_be32(lab, 0, lab_name) != 0x00000801u) throw DataError(lab_name + " has wrong magic number");
  const std::size_t n = read_be32(img, 4, img_name);
  const std::size_t rows = read_be32(img, 8, img_name);
  const std::size_t cols = read_be32(img, 12, img_name);
  const std::size_t n_labels = read_be32(lab, 4, lab_name);
  if (n != n_labels) throw DataError("IDX image count " + std::to_string(n) + " != label count " + std::to_string(n_labels));
  if (rows == 0 || cols == 0) throw DataError(img_name + " has zero-sized images");
  if (img.size() != 16 + n * rows * cols) throw DataError(img_name + " is truncated or has trailing bytes");
  if (lab.size() != 8 + n) throw DataError(lab_name + " is truncated or has trailing bytes");

  Dataset d;
  d.num_classes = num_classes;
  d.split = split;
  if (n == 0) return d;
  d.images = Tensor({n, 1, rows, cols});
  auto v = d.images.values();
  for (std::size_t i = 0; i < n * rows * cols; ++i) {
    v[i] = static_cast<double>(static_cast<unsigned char>(img[16 + i])) / 255.0;
  }
  d.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) d.labels[i] = static_cast<unsigned char>(lab[8 + i]);
  d.validate();
  return d;
}

std::filesystem::path blob_path(const std::filesystem::path& header_path, Split split, std::string_view kind) {
  std::filesystem::path p = header_path;
  p.replace_extension();
  p += "." + std::string(split_name(split)) + "." + std::string(kind) + ".f64";
  return p;
}

void write_dataset(const std::filesystem::path& header_path, const DatasetBundle& bundle) {
  Json counts = Json::object();
  for (const auto& d : bundle.splits) {
    d.validate();
    counts[std::string(split_name(d.split))] = d.size();
  }
  Json header = {
      {"dataset_id", bundle.dataset_id},
      {"K", bundle.num_classes},
      {"shape", bundle.image_shape},
      {"counts", counts},
      {"seed", bundle.seed},
  };
  for (const auto& d : bundle.splits) {
    write_file_atomic(blob_path(header_path, d.split, "images"), image_blob(d));
    write_file_atomic(blob_path(header_path, d.split, "labels"), label_blob(d));
  }
  write_file_atomic(header_path, to_json_text(header, 2) + "\n");
}

DatasetBundle read_dataset(const std::filesystem::path& header_path) {
  const Json header = parse_json_text(read_file(header_path), "dataset header '" + header_path.string() + "'");
  DatasetBundle b;
  try {
    b.dataset_id = header.at("dataset_id").get<std::string>();
    b.num_classes = header.at("K").get<std::size_t>();
    b.image_shape = header.at("shape").get<Shape>();
    b.seed = header.at("seed").get<std::uint64_t>();
    for (const auto& [name, count] : header.at("counts").items()) {
      const Split split = parse_split(name);
      const std::size_t n = count.get<std::size_t>();
      const auto images = decode_f64_le(read_file(blob_path(header_path, split, "images")));
      const auto labels = decode_f64_le(read_file(blob_path(header_path, split, "labels")));
      const std::size_t pixels = shape_size(b.image_shape);
      if (labels.size() != n || images.size() != n * pixels) {
        throw DataError("dataset split '" + name + "' blobs do not match header count " + std::to_string(n));
      }
      Dataset d;
      d.num_classes = b.num_classes;
      d.split = split;
      d.dataset_id = b.dataset_id;
      for (double y : labels) {
        if (!(y >= 0.0) || y != std::floor(y)) throw DataError("dataset label is not a non-negative integer");
        d.labels.push_back(static_cast<std::size_t>(y));
      }
      if (n > 0) {
        Shape full{n};
        full.insert(full.end(), b.image_shape.begin(), b.image_shape.end());
        d.images = Tensor(std::move(full), images);
      }
      d.validate();
      b.splits.push_back(std::move(d));
    }
  } catch (const Json::exception& e) {
    throw DataError("dataset header '" + header_path.string() + "' is malformed: " + e.what());
  }
  // Keep the canonical split order regardless of JSON key order.
  std::sort(b.splits.begin(), b.splits.end(),
            [](const Dataset& a, const Dataset& c) { return a.split < c.split; });
  if (compute_dataset_id(b) != b.dataset_id) {
    throw DataError("dataset '" + header_path.string() + "' content does not match its dataset_id");
  }
  return b;
}

}  // namespace advkit
