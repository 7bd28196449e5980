#pragma once

#include <string>

#include "grl/encoder.hpp"
#include "grl/sim.hpp"
#include "grl/trainer.hpp"

namespace grl {

// Aggregates every tunable behind the CLI. Keys are dotted and flat, e.g.
// scenario.n_hvs, scenario.idm.a_max, training.gamma, encoder.slots.
struct RunConfig {
    ScenarioConfig scenario;
    TrainConfig training;
    std::size_t encoder_slots = 0;  // 0 -> one slot per configured vehicle
    std::string output_dir = "runs";
    std::string run_label = "run";

    EncoderConfig encoder() const;
    void validate() const;
};

// key = value lines, '#' comments, unknown keys rejected with the key name.
RunConfig parse_run_config_text(const std::string& text);
RunConfig load_run_config(const std::string& path);

// Applies one --set override, "dotted.key=value".
void apply_override(RunConfig& cfg, const std::string& assignment);

// Every key explicit; re-parsing the output reproduces the config exactly.
std::string resolved_config_text(const RunConfig& cfg);

}  // namespace grl
