#include "resflat/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "resflat/rng.hpp"

namespace resflat {

namespace {

constexpr std::uint32_t kImageMagic = 2051;
constexpr std::uint32_t kLabelMagic = 2049;

std::vector<unsigned char> read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    in.seekg(0, std::ios::end);
    const std::streamoff len = in.tellg();
    in.seekg(0);
    std::vector<unsigned char> buf(static_cast<std::size_t>(len));
    if (len > 0) in.read(reinterpret_cast<char*>(buf.data()), len);
    if (!in) throw std::runtime_error("failed reading " + path);
    return buf;
}

std::uint32_t read_u32_be(const std::vector<unsigned char>& buf, std::size_t off) {
    if (off + 4 > buf.size()) throw std::runtime_error("truncated IDX header");
    return (static_cast<std::uint32_t>(buf[off]) << 24) |
           (static_cast<std::uint32_t>(buf[off + 1]) << 16) |
           (static_cast<std::uint32_t>(buf[off + 2]) << 8) |
           static_cast<std::uint32_t>(buf[off + 3]);
}

}  // namespace

Dataset Dataset::prefix(int count) const {
    if (count < 0 || count > size()) {
        throw std::invalid_argument("Dataset::prefix: count out of range");
    }
    Dataset out;
    out.split = split;
    out.name = name;
    out.images = Tensor(count, images.c, images.h, images.w);
    const std::size_t per = static_cast<std::size_t>(images.c) * images.h * images.w;
    std::copy_n(images.data.begin(), per * count, out.images.data.begin());
    out.labels.assign(labels.begin(), labels.begin() + count);
    return out;
}

Dataset load_mnist(const std::string& image_path, const std::string& label_path,
                   Split split) {
    const auto ibuf = read_file(image_path);
    const auto lbuf = read_file(label_path);

    if (read_u32_be(ibuf, 0) != kImageMagic) {
        throw std::runtime_error("bad IDX image magic in " + image_path);
    }
    if (read_u32_be(lbuf, 0) != kLabelMagic) {
        throw std::runtime_error("bad IDX label magic in " + label_path);
    }
    const std::uint32_t count = read_u32_be(ibuf, 4);
    const std::uint32_t rows = read_u32_be(ibuf, 8);
    const std::uint32_t cols = read_u32_be(ibuf, 12);
    if (rows != 28 || cols != 28) {
        throw std::runtime_error("unexpected MNIST image size (want 28x28)");
    }
    if (read_u32_be(lbuf, 4) != count) {
        throw std::runtime_error("MNIST image/label count mismatch");
    }
    if (ibuf.size() != 16 + static_cast<std::size_t>(count) * rows * cols) {
        throw std::runtime_error("truncated MNIST image file " + image_path);
    }
    if (lbuf.size() != 8 + static_cast<std::size_t>(count)) {
        throw std::runtime_error("truncated MNIST label file " + label_path);
    }

    Dataset ds;
    ds.split = split;
    ds.name = "mnist";
    ds.images = Tensor(static_cast<int>(count), 1, 32, 32);
    ds.labels.resize(count);

    std::vector<double> raw(28 * 28);
    for (std::uint32_t i = 0; i < count; ++i) {
        const unsigned char* px = &ibuf[16 + static_cast<std::size_t>(i) * 784];
        for (int j = 0; j < 784; ++j) raw[j] = px[j] / 255.0;
        std::vector<double> big = resize_bilinear(raw, 1, 28, 28, 32, 32);
        std::copy(big.begin(), big.end(),
                  ds.images.data.begin() + static_cast<std::size_t>(i) * 1024);
        const int lbl = lbuf[8 + i];
        if (lbl > 9) {
            throw std::out_of_range("MNIST label out of range 0..9");
        }
        ds.labels[i] = lbl;
    }
    return ds;
}

Dataset load_cifar10(const std::vector<std::string>& batch_paths, Split split) {
    constexpr std::size_t kRecord = 3073;
    std::vector<unsigned char> all;
    for (const auto& p : batch_paths) {
        auto buf = read_file(p);
        if (buf.empty() || buf.size() % kRecord != 0) {
            throw std::runtime_error("CIFAR-10 file length not a multiple of 3073: " + p);
        }
        all.insert(all.end(), buf.begin(), buf.end());
    }
    const std::size_t count = all.size() / kRecord;

    Dataset ds;
    ds.split = split;
    ds.name = "cifar10";
    ds.images = Tensor(static_cast<int>(count), 3, 32, 32);
    ds.labels.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
        const unsigned char* rec = &all[i * kRecord];
        if (rec[0] > 9) throw std::out_of_range("CIFAR-10 label out of range 0..9");
        ds.labels[i] = rec[0];
        double* dst = &ds.images.data[i * 3072];
        for (int j = 0; j < 3072; ++j) dst[j] = rec[1 + j] / 255.0;
    }
    return ds;
}

std::vector<double> resize_bilinear(const std::vector<double>& image, int channels,
                                    int in_h, int in_w, int out_h, int out_w) {
    if (image.size() != static_cast<std::size_t>(channels) * in_h * in_w) {
        throw std::invalid_argument("resize_bilinear: size mismatch");
    }
    auto src_coord = [](int d, int in_dim, int out_dim) {
        double s = (d + 0.5) * static_cast<double>(in_dim) / out_dim - 0.5;
        return std::clamp(s, 0.0, static_cast<double>(in_dim - 1));
    };

    std::vector<double> out(static_cast<std::size_t>(channels) * out_h * out_w);
    for (int c = 0; c < channels; ++c) {
        const double* src = &image[static_cast<std::size_t>(c) * in_h * in_w];
        double* dst = &out[static_cast<std::size_t>(c) * out_h * out_w];
        for (int r = 0; r < out_h; ++r) {
            const double sr = src_coord(r, in_h, out_h);
            const int r0 = static_cast<int>(sr);
            const int r1 = std::min(r0 + 1, in_h - 1);
            const double fr = sr - r0;
            for (int q = 0; q < out_w; ++q) {
                const double sq = src_coord(q, in_w, out_w);
                const int q0 = static_cast<int>(sq);
                const int q1 = std::min(q0 + 1, in_w - 1);
                const double fq = sq - q0;
                const double top = src[r0 * in_w + q0] * (1.0 - fq) +
                                   src[r0 * in_w + q1] * fq;
                const double bot = src[r1 * in_w + q0] * (1.0 - fq) +
                                   src[r1 * in_w + q1] * fq;
                dst[r * out_w + q] = top * (1.0 - fr) + bot * fr;
            }
        }
    }
    return out;
}

ClassHistogram class_histogram(const std::vector<int>& labels) {
    ClassHistogram h;
    h.counts.assign(10, 0);
    for (int lbl : labels) {
        if (lbl < 0 || lbl > 9) {
            throw std::out_of_range("class_histogram: label out of range");
        }
        ++h.counts[lbl];
    }
    double mean = 0.0;
    for (auto c : h.counts) mean += static_cast<double>(c);
    mean /= 10.0;
    double var = 0.0;
    for (auto c : h.counts) {
        const double d = static_cast<double>(c) - mean;
        var += d * d;
    }
    h.std_dev = std::sqrt(var / 10.0);
    return h;
}

BatchPlan batches(int example_count, int batch_size) {
    if (batch_size < 1) throw std::invalid_argument("batches: batch_size must be >= 1");
    if (example_count < 0) throw std::invalid_argument("batches: negative count");
    BatchPlan plan;
    plan.batch_size = batch_size;
    for (int begin = 0; begin < example_count; begin += batch_size) {
        plan.ranges.emplace_back(begin, std::min(begin + batch_size, example_count));
    }
    return plan;
}

Dataset synthetic_dataset(int count, int channels, std::uint64_t seed) {
    Dataset ds;
    ds.name = channels == 1 ? "synthetic1" : "synthetic3";
    ds.images = Tensor(count, channels, 32, 32);
    ds.labels.resize(count);
    RngState s{seed};
    for (double& v : ds.images.data) {
        auto [s2, u] = uniform01(s);
        s = s2;
        v = u;
    }
    for (int i = 0; i < count; ++i) ds.labels[i] = i % 10;
    return ds;
}

std::pair<Tensor, std::vector<int>> slice(const Dataset& ds, int begin, int end) {
    if (begin < 0 || end > ds.size() || begin > end) {
        throw std::invalid_argument("slice: bad range");
    }
    const int n = end - begin;
    Tensor t(n, ds.images.c, ds.images.h, ds.images.w);
    const std::size_t per =
        static_cast<std::size_t>(ds.images.c) * ds.images.h * ds.images.w;
    std::copy_n(ds.images.data.begin() + per * begin, per * n, t.data.begin());
    std::vector<int> labels(ds.labels.begin() + begin, ds.labels.begin() + end);
    return {std::move(t), std::move(labels)};
}

namespace {

bool file_exists(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return static_cast<bool>(in);
}

std::string find_dir(const std::string& root, const std::vector<std::string>& subdirs,
                     const std::string& probe_file) {
    std::vector<std::string> tried;
    for (const auto& sub : subdirs) {
        const std::string dir = sub.empty() ? root : root + "/" + sub;
        const std::string probe = dir + "/" + probe_file;
        if (file_exists(probe)) return dir;
        tried.push_back(probe);
    }
    std::string msg = "dataset files not found; probed:";
    for (const auto& p : tried) msg += "\n  " + p;
    throw std::runtime_error(msg);
}

}  // namespace

Dataset load_mnist_from_root(const std::string& root, Split split) {
    const char* image_file =
        split == Split::Train ? "train-images-idx3-ubyte" : "t10k-images-idx3-ubyte";
    const char* label_file =
        split == Split::Train ? "train-labels-idx1-ubyte" : "t10k-labels-idx1-ubyte";
    const std::string dir = find_dir(root, {"mnist", ""}, image_file);
    return load_mnist(dir + "/" + image_file, dir + "/" + label_file, split);
}

Dataset load_cifar10_from_root(const std::string& root, Split split) {
    const char* probe = split == Split::Train ? "data_batch_1.bin" : "test_batch.bin";
    const std::string dir = find_dir(root, {"cifar10", "cifar-10-batches-bin", ""}, probe);
    std::vector<std::string> paths;
    if (split == Split::Train) {
        for (int i = 1; i <= 5; ++i) {
            paths.push_back(dir + "/data_batch_" + std::to_string(i) + ".bin");
        }
    } else {
        paths.push_back(dir + "/test_batch.bin");
    }
    return load_cifar10(paths, split);
}

Dataset load_dataset(const std::string& name, const std::string& root, Split split) {
    if (name == "mnist") return load_mnist_from_root(root, split);
    if (name == "cifar10") return load_cifar10_from_root(root, split);
    if (name == "synthetic1" || name == "synthetic3") {
        const int channels = name == "synthetic1" ? 1 : 3;
        const int count = split == Split::Train ? 512 : 128;
        const std::uint64_t seed = split == Split::Train ? 101 : 202;
        Dataset ds = synthetic_dataset(count, channels, seed);
        ds.split = split;
        return ds;
    }
    throw std::invalid_argument("unknown dataset: " + name);
}

std::uint64_t dataset_checksum(const Dataset& ds, int count) {
    count = std::min(count, ds.size());
    std::uint64_t hash = 0xcbf29ce484222325ULL;
    auto mix = [&hash](const unsigned char* bytes, std::size_t len) {
        for (std::size_t i = 0; i < len; ++i) {
            hash ^= bytes[i];
            hash *= 0x100000001b3ULL;
        }
    };
    const std::size_t per =
        static_cast<std::size_t>(ds.images.c) * ds.images.h * ds.images.w;
    for (int i = 0; i < count; ++i) {
        for (std::size_t j = 0; j < per; ++j) {
            const double v = ds.images.data[per * i + j];
            std::uint64_t bits;
            std::memcpy(&bits, &v, sizeof(bits));
            unsigned char le[8];
            for (int b = 0; b < 8; ++b) le[b] = static_cast<unsigned char>(bits >> (8 * b));
            mix(le, 8);
        }
        const unsigned char lab = static_cast<unsigned char>(ds.labels[i]);
        mix(&lab, 1);
    }
    return hash;
}

}  // namespace resflat
