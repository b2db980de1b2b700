#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "resflat/data.hpp"
#include "resflat/record.hpp"

namespace resflat {

// Cartesian sweep. Cells enumerate in lexicographic order over the axes
// below, outermost first: depth, filters, kernel, activation, variant,
// learning rate. fixed_product != 0 keeps only cells with
// depth * filters == fixed_product.
struct GridSpec {
    std::string dataset = "mnist";
    int subset = 0;
    int val_subset = 0;
    std::vector<int> depths;
    std::vector<int> filters;
    std::vector<int> kernels;
    std::vector<Activation> activations;
    std::vector<Variant> variants;
    std::vector<double> learning_rates;
    int epochs = 1;
    int batch_size = 512;
    std::uint64_t base_seed = 0;
    int fixed_product = 0;

    void validate() const;
};

std::string grid_to_json(const GridSpec& grid);
GridSpec grid_from_json(const std::string& text);
GridSpec load_grid(const std::string& path);

// Cells with empty metrics, ready to train.
std::vector<ExperimentRecord> enumerate_cells(const GridSpec& grid, int input_channels);

struct GridRunResult {
    int total_cells = 0;
    int skipped = 0;   // already present in the record file
    int trained = 0;
};

// Trains every cell not already present in record_path and appends results
// as JSON lines. Safe to rerun after a crash; finished cells are skipped.
GridRunResult run_grid(const GridSpec& grid, const Dataset& train_data, const Dataset& val_data,
                       const std::string& record_path, int workers);

}  // namespace resflat
