#pragma once

#include <string>
#include <vector>

#include "resflat/model.hpp"
#include "resflat/train.hpp"

namespace resflat {

// One grid cell's result. Serialized as a single JSON line with sorted keys,
// so serialize -> parse -> serialize is byte-identical.
struct ExperimentRecord {
    ArchitectureSpec spec;
    TrainConfig config;
    std::string dataset;   // "mnist" or "cifar10"
    int subset = 0;        // training examples used
    int val_subset = 0;    // validation examples used
    std::int64_t params = 0;
    double q_ratio = 0.0;
    std::vector<EpochMetrics> metrics;
    double wall_seconds = 0.0;  // diagnostic; excluded from equality checks
};

std::string record_to_json_line(const ExperimentRecord& rec);

// Parses one JSON line and checks that the stored parameter count and
// overdetermination ratio match fresh recomputation from the stored spec.
ExperimentRecord record_from_json_line(const std::string& line);

std::vector<ExperimentRecord> load_records(const std::string& path);
void append_record(const std::string& path, const ExperimentRecord& rec);

// Identifies a grid cell independently of its results; used for resume.
std::string record_cell_key(const ExperimentRecord& rec);

// Deterministic payload comparison; wall_seconds is timing noise and ignored.
bool record_payload_equal(const ExperimentRecord& a, const ExperimentRecord& b);

// dataset, variant, H, F, k, activation, lr, P, Q, final_train_loss,
// final_val_loss, final_train_acc, final_val_acc
std::string records_to_csv(const std::vector<ExperimentRecord>& records);
void write_csv(const std::string& path, const std::vector<ExperimentRecord>& records);

}  // namespace resflat
