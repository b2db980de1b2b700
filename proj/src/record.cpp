#include "resflat/record.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace resflat {
namespace {

using nlohmann::json;

// Shortest round-trip formatting, same for equal doubles everywhere.
std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

json config_to_json(const TrainConfig& c) {
    json j;
    j["learning_rate"] = c.learning_rate;
    j["epochs"] = c.epochs;
    j["batch_size"] = c.batch_size;
    j["rmsprop_decay"] = c.rmsprop_decay;
    j["rmsprop_epsilon"] = c.rmsprop_epsilon;
    return j;
}

TrainConfig config_from_json(const json& j) {
    TrainConfig c;
    c.learning_rate = j.at("learning_rate").get<double>();
    c.epochs = j.at("epochs").get<int>();
    c.batch_size = j.at("batch_size").get<int>();
    c.rmsprop_decay = j.at("rmsprop_decay").get<double>();
    c.rmsprop_epsilon = j.at("rmsprop_epsilon").get<double>();
    c.validate();
    return c;
}

json metrics_to_json(const std::vector<EpochMetrics>& metrics) {
    json arr = json::array();
    for (const auto& m : metrics) {
        json j;
        j["epoch"] = m.epoch;
        j["train_loss"] = m.train_loss;
        j["val_loss"] = m.val_loss;
        j["train_accuracy"] = m.train_accuracy;
        j["val_accuracy"] = m.val_accuracy;
        arr.push_back(std::move(j));
    }
    return arr;
}

std::vector<EpochMetrics> metrics_from_json(const json& arr) {
    if (!arr.is_array()) throw std::runtime_error("metrics: expected array");
    std::vector<EpochMetrics> out;
    out.reserve(arr.size());
    for (const auto& j : arr) {
        EpochMetrics m;
        m.epoch = j.at("epoch").get<int>();
        m.train_loss = j.at("train_loss").get<double>();
        m.val_loss = j.at("val_loss").get<double>();
        m.train_accuracy = j.at("train_accuracy").get<double>();
        m.val_accuracy = j.at("val_accuracy").get<double>();
        out.push_back(m);
    }
    return out;
}

}  // namespace

std::string record_to_json_line(const ExperimentRecord& rec) {
    json j;
    j["spec"] = json::parse(spec_to_json(rec.spec));
    j["train_config"] = config_to_json(rec.config);
    j["dataset"] = rec.dataset;
    j["subset"] = rec.subset;
    j["val_subset"] = rec.val_subset;
    j["params"] = rec.params;
    j["q_ratio"] = rec.q_ratio;
    j["metrics"] = metrics_to_json(rec.metrics);
    j["wall_seconds"] = rec.wall_seconds;
    return j.dump();  // keys come out sorted, so this is canonical
}

ExperimentRecord record_from_json_line(const std::string& line) {
    json j = json::parse(line);
    ExperimentRecord rec;
    rec.spec = spec_from_json(j.at("spec").dump());
    rec.config = config_from_json(j.at("train_config"));
    rec.dataset = j.at("dataset").get<std::string>();
    rec.subset = j.at("subset").get<int>();
    rec.val_subset = j.at("val_subset").get<int>();
    rec.params = j.at("params").get<std::int64_t>();
    rec.q_ratio = j.at("q_ratio").get<double>();
    rec.metrics = metrics_from_json(j.at("metrics"));
    rec.wall_seconds = j.at("wall_seconds").get<double>();

    const std::int64_t expect_p = parameter_count(rec.spec);
    if (rec.params != expect_p) {
        throw std::runtime_error("record: stored params " + std::to_string(rec.params) +
                                 " does not match recomputed " + std::to_string(expect_p));
    }
    if (rec.subset > 0) {
        const double expect_q =
            overdetermination_ratio(rec.subset, rec.spec.num_classes, expect_p);
        if (rec.q_ratio != expect_q) {
            throw std::runtime_error("record: stored q_ratio " + format_double(rec.q_ratio) +
                                     " does not match recomputed " + format_double(expect_q));
        }
    }
    return rec;
}

std::vector<ExperimentRecord> load_records(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open record file: " + path);
    std::vector<ExperimentRecord> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        out.push_back(record_from_json_line(line));
    }
    return out;
}

void append_record(const std::string& path, const ExperimentRecord& rec) {
    std::ofstream out(path, std::ios::app);
    if (!out) throw std::runtime_error("cannot open record file for append: " + path);
    out << record_to_json_line(rec) << '\n';
    out.flush();
    if (!out) throw std::runtime_error("write failed: " + path);
}

std::string record_cell_key(const ExperimentRecord& rec) {
    std::ostringstream key;
    key << rec.dataset << '|' << rec.subset << '|' << rec.val_subset << '|'
        << rec.spec.input_channels << '|' << rec.spec.depth << '|' << rec.spec.filters << '|'
        << rec.spec.kernel << '|' << to_string(rec.spec.activation) << '|'
        << to_string(rec.spec.variant) << '|' << rec.spec.base_seed << '|'
        << format_double(rec.config.learning_rate) << '|' << rec.config.epochs << '|'
        << rec.config.batch_size << '|' << format_double(rec.config.rmsprop_decay) << '|'
        << format_double(rec.config.rmsprop_epsilon);
    return key.str();
}

bool record_payload_equal(const ExperimentRecord& a, const ExperimentRecord& b) {
    ExperimentRecord ta = a;
    ExperimentRecord tb = b;
    ta.wall_seconds = 0.0;
    tb.wall_seconds = 0.0;
    return record_to_json_line(ta) == record_to_json_line(tb);
}

std::string records_to_csv(const std::vector<ExperimentRecord>& records) {
    std::ostringstream out;
    out << "dataset,variant,H,F,k,activation,lr,P,Q,final_train_loss,final_val_loss,"
           "final_train_acc,final_val_acc\n";
    for (const auto& rec : records) {
        if (rec.metrics.empty()) {
            throw std::runtime_error("csv: record with no epoch metrics");
        }
        const EpochMetrics& last = rec.metrics.back();
        out << rec.dataset << ',' << to_string(rec.spec.variant) << ',' << rec.spec.depth << ','
            << rec.spec.filters << ',' << rec.spec.kernel << ','
            << to_string(rec.spec.activation) << ',' << format_double(rec.config.learning_rate)
            << ',' << rec.params << ',' << format_double(rec.q_ratio) << ','
            << format_double(last.train_loss) << ',' << format_double(last.val_loss) << ','
            << format_double(last.train_accuracy) << ',' << format_double(last.val_accuracy)
            << '\n';
    }
    return out.str();
}

void write_csv(const std::string& path, const std::vector<ExperimentRecord>& records) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open csv for write: " + path);
    out << records_to_csv(records);
    if (!out) throw std::runtime_error("csv write failed: " + path);
}

}  // namespace resflat
