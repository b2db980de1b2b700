#include "resflat/grid.hpp"

#include <atomic>
#include <chrono>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <stdexcept>
#include <thread>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "resflat/train.hpp"

namespace resflat {
namespace {

using nlohmann::json;

template <typename T>
std::vector<T> require_list(const json& j, const char* key) {
    std::vector<T> out = j.at(key).get<std::vector<T>>();
    if (out.empty()) throw std::runtime_error(std::string("grid: empty axis ") + key);
    return out;
}

}  // namespace

void GridSpec::validate() const {
    if (dataset != "mnist" && dataset != "cifar10" && dataset != "synthetic1" &&
        dataset != "synthetic3") {
        throw std::invalid_argument("grid: unknown dataset " + dataset);
    }
    if (subset < 1) throw std::invalid_argument("grid: subset must be positive");
    if (val_subset < 1) throw std::invalid_argument("grid: val_subset must be positive");
    if (depths.empty() || filters.empty() || kernels.empty() || activations.empty() ||
        variants.empty() || learning_rates.empty()) {
        throw std::invalid_argument("grid: every axis needs at least one value");
    }
    if (epochs < 1) throw std::invalid_argument("grid: epochs must be positive");
    if (batch_size < 1) throw std::invalid_argument("grid: batch_size must be positive");
    if (fixed_product < 0) throw std::invalid_argument("grid: fixed_product must be >= 0");
}

std::string grid_to_json(const GridSpec& grid) {
    json j;
    j["dataset"] = grid.dataset;
    j["subset"] = grid.subset;
    j["val_subset"] = grid.val_subset;
    j["depths"] = grid.depths;
    j["filters"] = grid.filters;
    j["kernels"] = grid.kernels;
    json acts = json::array();
    for (Activation a : grid.activations) acts.push_back(to_string(a));
    j["activations"] = acts;
    json vars = json::array();
    for (Variant v : grid.variants) vars.push_back(to_string(v));
    j["variants"] = vars;
    j["learning_rates"] = grid.learning_rates;
    j["epochs"] = grid.epochs;
    j["batch_size"] = grid.batch_size;
    j["base_seed"] = grid.base_seed;
    j["fixed_product"] = grid.fixed_product;
    return j.dump(2);
}

GridSpec grid_from_json(const std::string& text) {
    json j = json::parse(text);
    GridSpec grid;
    grid.dataset = j.at("dataset").get<std::string>();
    grid.subset = j.at("subset").get<int>();
    grid.val_subset = j.at("val_subset").get<int>();
    grid.depths = require_list<int>(j, "depths");
    grid.filters = require_list<int>(j, "filters");
    grid.kernels = require_list<int>(j, "kernels");
    for (const auto& name : require_list<std::string>(j, "activations")) {
        grid.activations.push_back(activation_from_string(name));
    }
    for (const auto& name : require_list<std::string>(j, "variants")) {
        grid.variants.push_back(variant_from_string(name));
    }
    grid.learning_rates = require_list<double>(j, "learning_rates");
    grid.epochs = j.at("epochs").get<int>();
    grid.batch_size = j.at("batch_size").get<int>();
    grid.base_seed = j.value("base_seed", std::uint64_t{0});
    grid.fixed_product = j.value("fixed_product", 0);
    grid.validate();
    return grid;
}

GridSpec load_grid(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open grid file: " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return grid_from_json(text);
}

std::vector<ExperimentRecord> enumerate_cells(const GridSpec& grid, int input_channels) {
    grid.validate();
    std::vector<ExperimentRecord> cells;
    for (int depth : grid.depths) {
        for (int filters : grid.filters) {
            if (grid.fixed_product != 0 && depth * filters != grid.fixed_product) continue;
            for (int kernel : grid.kernels) {
                for (Activation act : grid.activations) {
                    for (Variant variant : grid.variants) {
                        for (double lr : grid.learning_rates) {
                            ExperimentRecord rec;
                            rec.spec.input_channels = input_channels;
                            rec.spec.depth = depth;
                            rec.spec.filters = filters;
                            rec.spec.kernel = kernel;
                            rec.spec.activation = act;
                            rec.spec.variant = variant;
                            rec.spec.base_seed = grid.base_seed;
                            rec.spec.validate();
                            rec.config.learning_rate = lr;
                            rec.config.epochs = grid.epochs;
                            rec.config.batch_size = grid.batch_size;
                            rec.config.validate();
                            rec.dataset = grid.dataset;
                            rec.subset = grid.subset;
                            rec.val_subset = grid.val_subset;
                            rec.params = parameter_count(rec.spec);
                            rec.q_ratio = overdetermination_ratio(
                                rec.subset, rec.spec.num_classes, rec.params);
                            cells.push_back(std::move(rec));
                        }
                    }
                }
            }
        }
    }
    return cells;
}

GridRunResult run_grid(const GridSpec& grid, const Dataset& train_data, const Dataset& val_data,
                       const std::string& record_path, int workers) {
    if (workers < 1) throw std::invalid_argument("grid: workers must be positive");
    if (train_data.size() < grid.subset) {
        throw std::runtime_error("grid: training data has fewer examples than subset");
    }
    if (val_data.size() < grid.val_subset) {
        throw std::runtime_error("grid: validation data has fewer examples than val_subset");
    }

    std::vector<ExperimentRecord> cells = enumerate_cells(grid, train_data.images.c);

    std::unordered_set<std::string> done;
    if (std::filesystem::exists(record_path)) {
        for (const auto& rec : load_records(record_path)) {
            done.insert(record_cell_key(rec));
        }
    }

    std::vector<int> pending;
    for (int i = 0; i < static_cast<int>(cells.size()); ++i) {
        if (!done.count(record_cell_key(cells[i]))) pending.push_back(i);
    }

    GridRunResult result;
    result.total_cells = static_cast<int>(cells.size());
    result.skipped = result.total_cells - static_cast<int>(pending.size());

    const Dataset train_subset = train_data.prefix(grid.subset);
    const Dataset val_subset = val_data.prefix(grid.val_subset);

    std::atomic<int> next{0};
    std::mutex io_mutex;
    std::exception_ptr first_error;
    std::mutex error_mutex;

    auto worker_fn = [&]() {
        while (true) {
            const int slot = next.fetch_add(1);
            if (slot >= static_cast<int>(pending.size())) return;
            ExperimentRecord rec = cells[pending[slot]];
            try {
                const auto start = std::chrono::steady_clock::now();
                TrainResult tr = train(rec.spec, train_subset, val_subset, rec.config);
                const auto stop = std::chrono::steady_clock::now();
                rec.metrics = std::move(tr.metrics);
                rec.wall_seconds = std::chrono::duration<double>(stop - start).count();
                std::lock_guard<std::mutex> lock(io_mutex);
                append_record(record_path, rec);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
                return;
            }
        }
    };

    const int n_workers = std::min<int>(workers, std::max<int>(1, static_cast<int>(pending.size())));
    std::vector<std::thread> pool;
    pool.reserve(n_workers);
    for (int i = 0; i < n_workers; ++i) pool.emplace_back(worker_fn);
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);

    result.trained = static_cast<int>(pending.size());
    return result;
}

}  // namespace resflat
