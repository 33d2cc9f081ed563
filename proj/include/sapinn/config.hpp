#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "sapinn/optim.hpp"

namespace sapinn {

// Everything one training invocation needs. Restart k of a run derives its
// seed as seed + k, so a multi-restart study is reproducible from one number.
struct RunConfig {
    std::string problem = "helmholtz";
    std::vector<int> arch{2, 20, 1};
    SamplerConfig sampler;
    MaskConfig mask;
    TrainMode mode = TrainMode::Sa;
    double c_weight = 1.0;
    std::uint64_t seed = 0;
    int restarts = 1;
    std::string out_dir = "runs/latest";

    int adam_iters = 0;
    AdamConfig adam_w;
    AdamConfig adam_mask;
    MaskRule mask_rule = MaskRule::Adam;
    int lbfgs_iters = 0;
    LbfgsConfig lbfgs;
    int record_every = 100;
};

std::string mode_name(TrainMode m);
TrainMode mode_from_name(std::string_view s);
std::string rule_name(MaskRule r);
MaskRule rule_from_name(std::string_view s);

// Key=value text form, one key per line, '#' comments. save_config writes
// every key; applying a file on top of an existing config only overrides the
// keys the file names, so a short file layered over a preset works.
std::string config_text(const RunConfig& cfg);
void save_config(const std::string& path, const RunConfig& cfg);
void apply_config_entry(RunConfig& cfg, std::string_view key, std::string_view value);
void apply_config_file(RunConfig& cfg, const std::string& path);
RunConfig load_config(const std::string& path);

// Rejects inconsistent configurations up front, before any compute.
void validate_config(const RunConfig& cfg);

TrainConfig to_train_config(const RunConfig& cfg, std::uint64_t seed);

// Built-in configurations: one per benchmark at published scale, one per
// benchmark at desk scale for fast runs.
std::vector<std::string> preset_names();
RunConfig preset(std::string_view name);

}  // namespace sapinn
