#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "sapinn/config.hpp"
#include "sapinn/reference.hpp"

namespace sapinn {

struct RestartResult {
    std::uint64_t seed = 0;
    std::string status = "ok";  // "ok" or "failed: reason"
    double final_loss = 0.0;
    double l2 = 0.0;
    LbfgsReport lbfgs;
    double adam_seconds = 0.0, lbfgs_seconds = 0.0, eval_seconds = 0.0;
    std::string model_file, mask_file, metrics_file;
};

struct TrainingReport {
    RunConfig config;
    std::vector<RestartResult> restarts;
    double l2_mean = 0.0;
    double l2_std = 0.0;  // sample deviation, zero for a single restart
    std::string status = "ok";
};

std::string lbfgs_status_name(LbfgsStatus s);

// Mean and sample standard deviation of the successful restarts' L2 errors.
void aggregate_l2(TrainingReport& rep);

// Full run: for each restart, train, evaluate against the reference, and
// write model.txt, mask.csv, metrics.jsonl, and result.json under
// out_dir/restart_NNN/. Then write config.cfg, summary.json, and report.json
// at the top. Everything except report.json (which carries wall-clock
// timings) is byte-identical across repeated runs of the same config.
// A precomputed reference grid skips the solve; log, when set, receives
// one progress line per restart.
TrainingReport run_training(const RunConfig& cfg, const ReferenceGrid* ref = nullptr,
                            std::ostream* log = nullptr);

// The L2-against-reference record of one stored model, written to eval.json
// under out_dir when out_dir is nonempty. Shares the metric code path with
// run_training.
double evaluate_model(const std::string& model_path, const ReferenceGrid& ref,
                      const std::string& out_dir);

}  // namespace sapinn
