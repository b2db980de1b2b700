#include <doctest.h>

#include <stdexcept>

#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "resflat/grid.hpp"
#include "resflat/record.hpp"
#include "resflat/svg_plot.hpp"

using namespace resflat;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("resflat-rec-" + std::to_string(::getpid()) + "-" +
                std::to_string(counter()++));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
    static int& counter() {
        static int c = 0;
        return c;
    }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

GridSpec tiny_grid() {
    GridSpec g;
    g.dataset = "synthetic1";
    g.subset = 32;
    g.val_subset = 16;
    g.depths = {1, 2};
    g.filters = {1};
    g.kernels = {2};
    g.activations = {Activation::Relu};
    g.variants = {Variant::Sequential, Variant::Parallel};
    g.learning_rates = {1e-3};
    g.epochs = 1;
    g.batch_size = 16;
    g.base_seed = 5;
    return g;
}

ExperimentRecord sample_record() {
    GridSpec g = tiny_grid();
    ExperimentRecord rec = enumerate_cells(g, 1).front();
    rec.metrics.push_back({0, 2.31, 2.32, 0.11, 0.10});
    rec.metrics.push_back({1, 2.21, 2.25, 0.14, 0.12});
    rec.wall_seconds = 1.25;
    return rec;
}

std::vector<ExperimentRecord> sort_by_key(std::vector<ExperimentRecord> recs) {
    std::sort(recs.begin(), recs.end(),
              [](const ExperimentRecord& a, const ExperimentRecord& b) {
                  return record_cell_key(a) < record_cell_key(b);
              });
    return recs;
}

int count_occurrences(const std::string& text, const std::string& needle) {
    int n = 0;
    for (std::size_t pos = text.find(needle); pos != std::string::npos;
         pos = text.find(needle, pos + needle.size())) {
        ++n;
    }
    return n;
}

}  // namespace

TEST_CASE("record json line round-trips byte for byte") {
    ExperimentRecord rec = sample_record();
    const std::string line = record_to_json_line(rec);
    CHECK(line.find('\n') == std::string::npos);
    ExperimentRecord back = record_from_json_line(line);
    CHECK(record_to_json_line(back) == line);
    CHECK(record_payload_equal(rec, back));
    CHECK(back.wall_seconds == rec.wall_seconds);
    CHECK(back.metrics.size() == 2);
    CHECK(back.metrics[1].train_loss == 2.21);
}

TEST_CASE("record parsing rejects tampered derived values") {
    ExperimentRecord rec = sample_record();
    std::string line = record_to_json_line(rec);

    const std::string p_field = "\"params\":" + std::to_string(rec.params);
    REQUIRE(line.find(p_field) != std::string::npos);
    std::string tampered = line;
    tampered.replace(tampered.find(p_field), p_field.size(),
                     "\"params\":" + std::to_string(rec.params + 1));
    CHECK_THROWS_AS(record_from_json_line(tampered), std::runtime_error);

    ExperimentRecord wrong_q = rec;
    wrong_q.q_ratio *= 2.0;
    CHECK_THROWS_AS(record_from_json_line(record_to_json_line(wrong_q)),
                    std::runtime_error);
}

TEST_CASE("payload equality ignores wall seconds only") {
    ExperimentRecord a = sample_record();
    ExperimentRecord b = a;
    b.wall_seconds = 99.0;
    CHECK(record_payload_equal(a, b));
    b = a;
    b.metrics[0].val_loss += 1e-9;
    CHECK_FALSE(record_payload_equal(a, b));
    b = a;
    b.spec.depth += 1;
    b.params = parameter_count(b.spec);
    b.q_ratio = overdetermination_ratio(b.subset, 10, b.params);
    CHECK_FALSE(record_payload_equal(a, b));
}

TEST_CASE("cell keys identify configuration not results") {
    ExperimentRecord a = sample_record();
    ExperimentRecord b = a;
    b.metrics.clear();
    b.wall_seconds = 0.0;
    CHECK(record_cell_key(a) == record_cell_key(b));

    ExperimentRecord c = a;
    c.config.learning_rate = 2e-3;
    CHECK(record_cell_key(a) != record_cell_key(c));
    ExperimentRecord d = a;
    d.spec.variant = Variant::Parallel;
    CHECK(record_cell_key(a) != record_cell_key(d));
}

TEST_CASE("record files append and reload") {
    TempDir dir;
    const std::string path = dir.file("records.jsonl");
    ExperimentRecord a = sample_record();
    ExperimentRecord b = sample_record();
    b.spec.variant = Variant::Parallel;
    append_record(path, a);
    append_record(path, b);
    std::ofstream(path, std::ios::app) << "\n";  // stray blank line is tolerated

    auto loaded = load_records(path);
    REQUIRE(loaded.size() == 2);
    CHECK(record_payload_equal(loaded[0], a));
    CHECK(record_payload_equal(loaded[1], b));

    CHECK_THROWS_AS(load_records(dir.file("absent.jsonl")), std::runtime_error);
}

TEST_CASE("csv export") {
    ExperimentRecord rec = sample_record();
    std::string csv = records_to_csv({rec});
    std::istringstream lines(csv);
    std::string header, row, extra;
    REQUIRE(std::getline(lines, header));
    REQUIRE(std::getline(lines, row));
    CHECK_FALSE(std::getline(lines, extra));
    CHECK(header ==
          "dataset,variant,H,F,k,activation,lr,P,Q,final_train_loss,final_val_loss,"
          "final_train_acc,final_val_acc");
    CHECK(row.rfind("synthetic1,sequential,1,1,2,relu,0.001,10257,", 0) == 0);
    CHECK(row.find(",2.21,2.25,0.14,0.12") != std::string::npos);

    ExperimentRecord empty = sample_record();
    empty.metrics.clear();
    CHECK_THROWS_AS(records_to_csv({empty}), std::runtime_error);

    TempDir dir;
    write_csv(dir.file("out.csv"), {rec});
    CHECK(read_file(dir.file("out.csv")) == csv);
}

TEST_CASE("grid json round-trips and validates") {
    GridSpec g = tiny_grid();
    g.fixed_product = 2;
    const std::string text = grid_to_json(g);
    GridSpec back = grid_from_json(text);
    CHECK(back.dataset == g.dataset);
    CHECK(back.subset == g.subset);
    CHECK(back.val_subset == g.val_subset);
    CHECK(back.depths == g.depths);
    CHECK(back.filters == g.filters);
    CHECK(back.kernels == g.kernels);
    CHECK(back.activations == g.activations);
    CHECK(back.variants == g.variants);
    CHECK(back.learning_rates == g.learning_rates);
    CHECK(back.epochs == g.epochs);
    CHECK(back.batch_size == g.batch_size);
    CHECK(back.base_seed == g.base_seed);
    CHECK(back.fixed_product == g.fixed_product);

    auto bad = tiny_grid();
    bad.depths.clear();
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = tiny_grid();
    bad.dataset = "imagenet";
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = tiny_grid();
    bad.subset = 0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = tiny_grid();
    bad.epochs = 0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

    CHECK_THROWS(grid_from_json("{\"dataset\": \"mnist\"}"));
}

TEST_CASE("cells enumerate in documented lexicographic order") {
    GridSpec g = tiny_grid();
    auto cells = enumerate_cells(g, 1);
    REQUIRE(cells.size() == 4);
    CHECK(cells[0].spec.depth == 1);
    CHECK(cells[0].spec.variant == Variant::Sequential);
    CHECK(cells[1].spec.depth == 1);
    CHECK(cells[1].spec.variant == Variant::Parallel);
    CHECK(cells[2].spec.depth == 2);
    CHECK(cells[2].spec.variant == Variant::Sequential);
    CHECK(cells[3].spec.depth == 2);
    CHECK(cells[3].spec.variant == Variant::Parallel);
    for (const auto& cell : cells) {
        CHECK(cell.metrics.empty());
        CHECK(cell.params == parameter_count(cell.spec));
        CHECK(cell.q_ratio ==
              overdetermination_ratio(cell.subset, 10, cell.params));
        CHECK(cell.spec.base_seed == g.base_seed);
        CHECK(cell.config.epochs == g.epochs);
        CHECK(cell.config.batch_size == g.batch_size);
    }
}

TEST_CASE("fixed product keeps constant depth-times-filters cells") {
    GridSpec g = tiny_grid();
    g.depths = {1, 2, 4, 8, 16, 32};
    g.filters = {1, 2, 4, 8, 16, 32};
    g.fixed_product = 32;
    auto cells = enumerate_cells(g, 1);
    // one (depth, filters) pair per depth, times two variants
    REQUIRE(cells.size() == 12);
    for (std::size_t i = 0; i < cells.size(); i += 2) {
        CHECK(cells[i].spec.depth * cells[i].spec.filters == 32);
        CHECK(cells[i].spec.depth == cells[i + 1].spec.depth);
    }
    CHECK(cells[0].spec.depth == 1);
    CHECK(cells[0].spec.filters == 32);
    CHECK(cells[10].spec.depth == 32);
    CHECK(cells[10].spec.filters == 1);
}

TEST_CASE("grid runner trains, resumes, and is worker-count independent") {
    TempDir dir;
    GridSpec g = tiny_grid();
    Dataset train_data = load_dataset("synthetic1", "", Split::Train);
    Dataset val_data = load_dataset("synthetic1", "", Split::Validation);

    const std::string full = dir.file("full.jsonl");
    GridRunResult first = run_grid(g, train_data, val_data, full, 1);
    CHECK(first.total_cells == 4);
    CHECK(first.skipped == 0);
    CHECK(first.trained == 4);
    auto full_records = load_records(full);
    REQUIRE(full_records.size() == 4);
    for (const auto& rec : full_records) {
        CHECK(rec.metrics.size() == 1);
        CHECK(std::isfinite(rec.metrics[0].train_loss));
    }

    // rerunning a finished grid touches nothing
    const std::string before = read_file(full);
    GridRunResult rerun = run_grid(g, train_data, val_data, full, 1);
    CHECK(rerun.skipped == 4);
    CHECK(rerun.trained == 0);
    CHECK(read_file(full) == before);

    // a partial file resumes with only the missing cells
    const std::string partial = dir.file("partial.jsonl");
    append_record(partial, full_records[0]);
    append_record(partial, full_records[3]);
    GridRunResult resumed = run_grid(g, train_data, val_data, partial, 1);
    CHECK(resumed.skipped == 2);
    CHECK(resumed.trained == 2);
    auto resumed_records = sort_by_key(load_records(partial));
    auto want = sort_by_key(full_records);
    REQUIRE(resumed_records.size() == want.size());
    for (std::size_t i = 0; i < want.size(); ++i) {
        CHECK(record_payload_equal(resumed_records[i], want[i]));
    }

    // more workers reorder completion but not the payloads
    const std::string threaded = dir.file("threaded.jsonl");
    GridRunResult wide = run_grid(g, train_data, val_data, threaded, 3);
    CHECK(wide.trained == 4);
    auto wide_records = sort_by_key(load_records(threaded));
    for (std::size_t i = 0; i < want.size(); ++i) {
        CHECK(record_payload_equal(wide_records[i], want[i]));
    }
}

TEST_CASE("plot emission is deterministic and structured") {
    std::vector<ExperimentRecord> records;
    GridSpec g = tiny_grid();
    g.depths = {1, 2, 4};
    for (auto& cell : enumerate_cells(g, 1)) {
        const double base = 2.0 + 0.1 * cell.spec.depth;
        const double shift = cell.spec.variant == Variant::Sequential ? 0.0 : 0.05;
        cell.metrics.push_back({0, base + shift, base + shift + 0.02, 0.3, 0.28});
        records.push_back(cell);
    }
    REQUIRE(records.size() == 6);

    const std::string svg = emit_plot(records, PlotAxis::Depth);
    CHECK(svg.rfind("<svg", 0) == 0);
    CHECK(count_occurrences(svg, "<polyline") == 4);
    CHECK(count_occurrences(svg, "<circle") == 12);
    CHECK(count_occurrences(svg, "#c62828") > 0);
    CHECK(count_occurrences(svg, "#1a56c4") > 0);
    CHECK(count_occurrences(svg, "stroke-dasharray=\"7,5\"") == 4);  // 2 series + 2 legend keys
    CHECK(svg.find("final loss vs depth") != std::string::npos);
    CHECK(emit_plot(records, PlotAxis::Depth) == svg);

    const std::string by_ratio = emit_plot(records, PlotAxis::Ratio);
    CHECK(by_ratio.find("final loss vs ratio") != std::string::npos);

    TempDir dir;
    write_plot(dir.file("plot.svg"), records, PlotAxis::Depth);
    CHECK(read_file(dir.file("plot.svg")) == svg);
}

TEST_CASE("plot handles degenerate inputs") {
    CHECK_THROWS_AS(emit_plot({}, PlotAxis::Depth), std::runtime_error);

    ExperimentRecord bare = sample_record();
    bare.metrics.clear();
    CHECK_THROWS_AS(emit_plot({bare}, PlotAxis::Depth), std::runtime_error);

    ExperimentRecord one = sample_record();
    const std::string svg = emit_plot({one}, PlotAxis::Filters);
    CHECK(count_occurrences(svg, "<circle") == 2);  // train and val point
    CHECK(svg.find("final loss vs filters") != std::string::npos);

    // records sharing a cell average into one point per series
    ExperimentRecord again = sample_record();
    again.metrics.back().train_loss += 0.2;
    const std::string avg = emit_plot({one, again}, PlotAxis::Depth);
    CHECK(count_occurrences(avg, "<circle") == 2);

    CHECK(plot_axis_from_name("depth") == PlotAxis::Depth);
    CHECK(plot_axis_from_name("filters") == PlotAxis::Filters);
    CHECK(plot_axis_from_name("ratio") == PlotAxis::Ratio);
    CHECK_THROWS_AS(plot_axis_from_name("loss"), std::invalid_argument);
    CHECK(std::string(plot_axis_name(PlotAxis::Ratio)) == "ratio");
}
