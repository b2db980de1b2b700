#pragma once

#include <string>
#include <vector>

namespace resflat {

enum class VerifyLevel { Quick, Full };

VerifyLevel verify_level_from_string(const std::string& s);

struct VerifyCheck {
    std::string name;
    bool passed = false;
    std::string detail;  // worst observed error or a short failure note
};

// Numerical self-checks of the identities the implementation rests on:
// subset expansion vs the layer product, term counts, truncation behavior,
// the gradient product rule, finite-difference gradient agreement for kernels
// and full models, shared initialization, depth-1 collapse and training
// determinism. Quick runs reduced sizes, Full the complete set.
std::vector<VerifyCheck> run_verification(VerifyLevel level);

bool all_passed(const std::vector<VerifyCheck>& checks);

}  // namespace resflat
