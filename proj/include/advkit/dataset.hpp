#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "advkit/tensor.hpp"

namespace advkit {

enum class Split { train, test, adversarial };

std::string_view split_name(Split split);
Split parse_split(std::string_view name);

/// Labelled images with pixels in [0, 1].
struct Dataset {
  Tensor images;  // [n x C x H x W]; empty when n == 0
  std::vector<std::size_t> labels;
  std::size_t num_classes = 0;
  Split split = Split::train;
  std::string dataset_id;

  std::size_t size() const { return labels.size(); }
  Shape image_shape() const;
  Tensor image(std::size_t i) const;

  /// Pixel range, label range and shape consistency. Throws DataError.
  void validate() const;
};

/// Several splits sharing one content hash, as stored on disk.
struct DatasetBundle {
  std::string dataset_id;
  std::size_t num_classes = 0;
  Shape image_shape;
  std::uint64_t seed = 0;
  std::vector<Dataset> splits;

  const Dataset& split(Split which) const;
};

/// Stacks single images into a [n x C x H x W] dataset.
Dataset make_dataset(const std::vector<Tensor>& images, std::vector<std::size_t> labels,
                     std::size_t num_classes, Split split);

struct SyntheticParams {
  std::size_t num_classes = 10;
  Shape image_shape{1, 16, 16};
  std::size_t train_count = 2000;
  std::size_t test_count = 500;
  double noise_sigma = 0.1;
  double prototype_low = 0.2;
  double prototype_high = 0.8;
  double class_contrast = 0.065;
  std::uint64_t seed = 0;
};

/// Class prototypes share one base pattern, uniform in
/// [low + contrast, high - contrast], plus a per-class offset uniform in
/// [-contrast, contrast]; every prototype pixel therefore lies in
/// [prototype_low, prototype_high]. Each sample is its class prototype plus
/// N(0, sigma^2) pixel noise, clipped to [0, 1]. Labels cycle 0..K-1.
DatasetBundle make_synthetic(const SyntheticParams& params);

/// Content hash over class count, image shape and every split's blobs.
std::string compute_dataset_id(const DatasetBundle& bundle);

/// Reads an IDX image/label file pair (magic 0x00000803 / 0x00000801).
/// Pixel bytes are scaled by 1/255.
Dataset read_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path,
                 Split split, std::size_t num_classes = 10);

/// Writes `<dir>/<stem>.json` plus `<stem>.<split>.images.f64` and
/// `<stem>.<split>.labels.f64` blobs for each split.
void write_dataset(const std::filesystem::path& header_path, const DatasetBundle& bundle);
DatasetBundle read_dataset(const std::filesystem::path& header_path);

std::filesystem::path blob_path(const std::filesystem::path& header_path, Split split,
                                std::string_view kind);

}  // namespace advkit
