#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "resflat/tensor.hpp"

namespace resflat {

enum class Split { Train, Validation };

// Immutable after load. Images hold values in [0, 1]; labels in 0..9.
struct Dataset {
    Tensor images;            // (K, C, 32, 32)
    std::vector<int> labels;  // K entries
    Split split = Split::Train;
    std::string name;         // "mnist" or "cifar10"

    int size() const { return images.n; }

    // First `count` examples in file order.
    Dataset prefix(int count) const;
};

// IDX format: big-endian u32 header. Magic 2051 for images (count, rows=28,
// cols=28, raw bytes), 2049 for labels (count, raw bytes). Pixels are scaled
// by 1/255 and the 28x28 images are resized to 32x32.
Dataset load_mnist(const std::string& image_path, const std::string& label_path,
                   Split split);

// CIFAR-10 binary: 3073-byte records, 1 label byte then 3072 pixel bytes
// (R, G, B planes, each 32x32 row-major). Scaled by 1/255, no resize.
Dataset load_cifar10(const std::vector<std::string>& batch_paths, Split split);

// Bilinear interpolation, half-pixel convention: source coordinate
// s = (d + 0.5) * in / out - 0.5, clamped to [0, in-1]. Channels independent.
// image is (channels, in_h, in_w) row-major.
std::vector<double> resize_bilinear(const std::vector<double>& image, int channels,
                                    int in_h, int in_w, int out_h, int out_w);

struct ClassHistogram {
    std::vector<std::int64_t> counts;  // per class 0..9
    double std_dev = 0.0;              // population std of the counts
};

ClassHistogram class_histogram(const std::vector<int>& labels);

// Contiguous index ranges [begin, end) covering 0..K in file order,
// identical across epochs; the last range may be short.
struct BatchPlan {
    int batch_size = 0;
    std::vector<std::pair<int, int>> ranges;

    int steps_per_epoch() const { return static_cast<int>(ranges.size()); }
};

BatchPlan batches(int example_count, int batch_size);

// Deterministic synthetic dataset: uniform pixels, round-robin labels.
// Used by the verification suite and tests; not a stand-in for real data.
Dataset synthetic_dataset(int count, int channels, std::uint64_t seed);

// Extracts rows [begin, end) as a batch tensor plus labels.
std::pair<Tensor, std::vector<int>> slice(const Dataset& ds, int begin, int end);

// Locates the standard files under `root` (directly or in a conventional
// subdirectory: mnist/ for IDX files, cifar10/ or cifar-10-batches-bin/ for
// the binary batches) and loads the requested split. Throws with the probed
// paths when nothing is found.
Dataset load_mnist_from_root(const std::string& root, Split split);
Dataset load_cifar10_from_root(const std::string& root, Split split);
Dataset load_dataset(const std::string& name, const std::string& root, Split split);

// FNV-1a over the little-endian bytes of the image doubles and the label
// ints of the first `count` examples; used by the inspect command.
std::uint64_t dataset_checksum(const Dataset& ds, int count);

}  // namespace resflat
