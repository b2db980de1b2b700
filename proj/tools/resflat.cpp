#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "resflat/data.hpp"
#include "resflat/grid.hpp"
#include "resflat/model.hpp"
#include "resflat/record.hpp"
#include "resflat/svg_plot.hpp"
#include "resflat/train.hpp"
#include "resflat/verify.hpp"

namespace {

using namespace resflat;

std::string default_root() {
    const char* env = std::getenv("RESFLAT_DATA_DIR");
    return env && *env ? env : "data";
}

Split split_from_string(const std::string& s) {
    if (s == "train") return Split::Train;
    if (s == "val") return Split::Validation;
    throw std::invalid_argument("unknown split: " + s);
}

int cmd_inspect(const std::string& dataset, const std::string& split_name,
                const std::string& root) {
    Dataset ds = load_dataset(dataset, root, split_from_string(split_name));
    ClassHistogram hist = class_histogram(ds.labels);
    std::printf("dataset %s split %s\n", ds.name.c_str(), split_name.c_str());
    std::printf("examples %d\n", ds.size());
    std::printf("shape %dx%dx%d\n", ds.images.c, ds.images.h, ds.images.w);
    std::printf("class_counts");
    for (auto c : hist.counts) std::printf(" %lld", static_cast<long long>(c));
    std::printf("\n");
    std::printf("class_std %.4f\n", hist.std_dev);
    std::printf("checksum_512 %016llx\n",
                static_cast<unsigned long long>(dataset_checksum(ds, 512)));
    return 0;
}

int cmd_params(const std::string& dataset, int depth, int kernel,
               const std::vector<int>& filters, std::int64_t examples) {
    std::printf("dataset %s depth %d kernel %d\n", dataset.c_str(), depth, kernel);
    std::printf("%8s %12s %10s\n", "filters", "params", "q_ratio");
    for (const auto& row : params_table(dataset, depth, kernel, filters, examples)) {
        std::printf("%8d %12lld %10.3f\n", row.filters, static_cast<long long>(row.params),
                    row.q_ratio);
    }
    return 0;
}

int cmd_verify(const std::string& level_name) {
    const auto checks = run_verification(verify_level_from_string(level_name));
    for (const auto& c : checks) {
        std::printf("%-4s %-28s %s\n", c.passed ? "ok" : "FAIL", c.name.c_str(),
                    c.detail.c_str());
    }
    const bool ok = all_passed(checks);
    std::printf("%s (%zu checks, level %s)\n", ok ? "all passed" : "FAILURES", checks.size(),
                level_name.c_str());
    return ok ? 0 : 1;
}

struct TrainArgs {
    std::string dataset;
    std::string variant = "sequential";
    int depth = 1;
    int filters = 1;
    int kernel = 16;
    std::string activation = "relu";
    int epochs = 1;
    int batch = 512;
    double lr = 1e-4;
    int subset = 0;
    int val_subset = 0;
    std::uint64_t seed = 0;
    std::string root;
    std::string out;
};

int cmd_train(const TrainArgs& a) {
    Dataset train_ds = load_dataset(a.dataset, a.root, Split::Train);
    Dataset val_ds = load_dataset(a.dataset, a.root, Split::Validation);
    if (a.subset > 0) train_ds = train_ds.prefix(a.subset);
    if (a.val_subset > 0) val_ds = val_ds.prefix(a.val_subset);

    ArchitectureSpec spec;
    spec.input_channels = train_ds.images.c;
    spec.depth = a.depth;
    spec.filters = a.filters;
    spec.kernel = a.kernel;
    spec.activation = activation_from_string(a.activation);
    spec.variant = variant_from_string(a.variant);
    spec.base_seed = a.seed;
    spec.validate();

    TrainConfig config;
    config.learning_rate = a.lr;
    config.epochs = a.epochs;
    config.batch_size = a.batch;
    config.validate();

    const std::int64_t params = parameter_count(spec);
    const double q = overdetermination_ratio(train_ds.size(), spec.num_classes, params);
    std::printf("dataset %s examples %d val %d\n", a.dataset.c_str(), train_ds.size(),
                val_ds.size());
    std::printf("variant %s depth %d filters %d kernel %d activation %s\n", a.variant.c_str(),
                a.depth, a.filters, a.kernel, a.activation.c_str());
    std::printf("params %lld q_ratio %.3f steps_per_epoch %d\n", static_cast<long long>(params),
                q, batches(train_ds.size(), config.batch_size).steps_per_epoch());

    const auto start = std::chrono::steady_clock::now();
    TrainResult result = train(spec, train_ds, val_ds, config);
    const auto stop = std::chrono::steady_clock::now();
    const double wall = std::chrono::duration<double>(stop - start).count();

    for (const auto& m : result.metrics) {
        std::printf("epoch %d train_loss %.6f val_loss %.6f train_acc %.4f val_acc %.4f\n",
                    m.epoch, m.train_loss, m.val_loss, m.train_accuracy, m.val_accuracy);
    }
    std::printf("wall_seconds %.2f\n", wall);

    if (!a.out.empty()) {
        ExperimentRecord rec;
        rec.spec = spec;
        rec.config = config;
        rec.dataset = a.dataset;
        rec.subset = train_ds.size();
        rec.val_subset = val_ds.size();
        rec.params = params;
        rec.q_ratio = overdetermination_ratio(rec.subset, spec.num_classes, params);
        rec.metrics = result.metrics;
        rec.wall_seconds = wall;
        append_record(a.out, rec);
        std::printf("record appended to %s\n", a.out.c_str());
    }
    return 0;
}

int cmd_grid(const std::string& config_path, const std::string& out, int workers,
             const std::string& root) {
    GridSpec grid = load_grid(config_path);
    Dataset train_ds = load_dataset(grid.dataset, root, Split::Train);
    Dataset val_ds = load_dataset(grid.dataset, root, Split::Validation);

    GridRunResult res = run_grid(grid, train_ds, val_ds, out, workers);
    std::printf("cells %d skipped %d trained %d\n", res.total_cells, res.skipped, res.trained);

    std::filesystem::path csv_path(out);
    csv_path.replace_extension(".csv");
    write_csv(csv_path.string(), load_records(out));
    std::printf("summary written to %s\n", csv_path.string().c_str());
    return 0;
}

int cmd_plot(const std::string& records_path, const std::string& axis,
             const std::string& out) {
    write_plot(out, load_records(records_path), plot_axis_from_name(axis));
    std::printf("plot written to %s\n", out.c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"sequential and parallel residual convnet laboratory"};
    app.require_subcommand(1);

    // data inspect
    auto* data_cmd = app.add_subcommand("data", "dataset utilities");
    data_cmd->require_subcommand(1);
    auto* inspect = data_cmd->add_subcommand("inspect", "print dataset statistics");
    std::string in_dataset, in_split = "train", in_root = default_root();
    inspect->add_option("--dataset", in_dataset, "mnist, cifar10, synthetic1 or synthetic3")
        ->required();
    inspect->add_option("--split", in_split, "train or val");
    inspect->add_option("--root", in_root, "dataset root directory");

    // params
    auto* params_cmd = app.add_subcommand("params", "parameter counts and q ratios");
    std::string p_dataset;
    int p_depth = 16, p_kernel = 16;
    std::vector<int> p_filters = {1, 2, 4, 8, 16, 32};
    std::int64_t p_examples = 0;
    params_cmd->add_option("--dataset", p_dataset, "mnist or cifar10")->required();
    params_cmd->add_option("--depth", p_depth, "residual layer count");
    params_cmd->add_option("--kernel", p_kernel, "kernel size");
    params_cmd->add_option("--filters", p_filters, "filter counts")->expected(-1);
    params_cmd->add_option("--examples", p_examples, "override training set size");

    // verify
    auto* verify_cmd = app.add_subcommand("verify", "numerical self-checks");
    std::string v_level = "quick";
    verify_cmd->add_option("--level", v_level, "quick or full");

    // train
    auto* train_cmd = app.add_subcommand("train", "train one model");
    TrainArgs t;
    t.root = default_root();
    train_cmd->add_option("--dataset", t.dataset, "mnist, cifar10, synthetic1 or synthetic3")
        ->required();
    train_cmd->add_option("--variant", t.variant, "sequential or parallel");
    train_cmd->add_option("--depth", t.depth, "residual layer count")->required();
    train_cmd->add_option("--filters", t.filters, "filters per layer")->required();
    train_cmd->add_option("--kernel", t.kernel, "kernel size");
    train_cmd->add_option("--activation", t.activation, "relu, sigmoid or identity");
    train_cmd->add_option("--epochs", t.epochs, "training epochs");
    train_cmd->add_option("--batch", t.batch, "batch size");
    train_cmd->add_option("--lr", t.lr, "learning rate");
    train_cmd->add_option("--subset", t.subset, "training prefix size, 0 = all");
    train_cmd->add_option("--val-subset", t.val_subset, "validation prefix size, 0 = all");
    train_cmd->add_option("--seed", t.seed, "base seed");
    train_cmd->add_option("--root", t.root, "dataset root directory");
    train_cmd->add_option("--out", t.out, "append a record to this JSON-lines file");

    // grid
    auto* grid_cmd = app.add_subcommand("grid", "run a sweep from a grid config");
    std::string g_config, g_out, g_root = default_root();
    int g_workers = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    grid_cmd->add_option("--config", g_config, "grid config JSON")->required();
    grid_cmd->add_option("--out", g_out, "record output JSON-lines file")->required();
    grid_cmd->add_option("--workers", g_workers, "worker thread count");
    grid_cmd->add_option("--root", g_root, "dataset root directory");

    // plot
    auto* plot_cmd = app.add_subcommand("plot", "emit an SVG chart from records");
    std::string pl_records, pl_axis, pl_out;
    plot_cmd->add_option("--records", pl_records, "record JSON-lines file")->required();
    plot_cmd->add_option("--axis", pl_axis, "depth, filters or ratio")->required();
    plot_cmd->add_option("--out", pl_out, "output SVG path")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (inspect->parsed()) return cmd_inspect(in_dataset, in_split, in_root);
        if (params_cmd->parsed()) return cmd_params(p_dataset, p_depth, p_kernel, p_filters, p_examples);
        if (verify_cmd->parsed()) return cmd_verify(v_level);
        if (train_cmd->parsed()) return cmd_train(t);
        if (grid_cmd->parsed()) return cmd_grid(g_config, g_out, g_workers, g_root);
        if (plot_cmd->parsed()) return cmd_plot(pl_records, pl_axis, pl_out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
