#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace grl {

struct GradCheckEntry {
    std::string name;      // layer or network head under test
    double max_rel_error;  // worst parameter over all instances
    bool pass;
};

struct GradCheckReport {
    std::vector<GradCheckEntry> entries;
    bool all_pass = true;
    double runtime_s = 0.0;
};

struct GradCheckOptions {
    std::uint64_t seed = 1;
    int instances = 20;
    double step = 1e-5;       // central-difference h
    double tolerance = 1e-4;  // relative error bound
    bool corrupt_gcn = false; // negative-control hook: perturb the analytic GCN gradient
};

// Central finite differences against the analytic backward passes for the
// dense layer, the GCN layer, and the full stack with both head kinds.
GradCheckReport run_gradcheck(const GradCheckOptions& opts = {});

}  // namespace grl
