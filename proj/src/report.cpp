#include "sapinn/report.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <ostream>

namespace sapinn {

namespace {

using nlohmann::json;

json record_json(const TrainRecord& r) {
    const auto stats = [](const MaskStats& s) {
        return json{{"min", s.min}, {"mean", s.mean}, {"max", s.max}};
    };
    return json{{"step", r.step},         {"phase", r.phase},
                {"total", r.total},       {"l_s", r.l_s},
                {"l_r", r.l_r},           {"l_b", r.l_b},
                {"l_0", r.l_0},           {"mask_r", stats(r.stat_r)},
                {"mask_b", stats(r.stat_b)}, {"mask_0", stats(r.stat_i)}};
}

void write_text(const std::filesystem::path& path, const std::string& body) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("report: cannot open " + path.string() + " for writing");
    out << body;
    if (!out) throw std::runtime_error("report: write failed for " + path.string());
}

json restart_json(const RestartResult& r, bool with_timing) {
    json j{{"seed", r.seed},
           {"status", r.status},
           {"final_loss", r.final_loss},
           {"l2", r.l2},
           {"lbfgs",
            {{"status", lbfgs_status_name(r.lbfgs.status)},
             {"iters", r.lbfgs.iters},
             {"value", r.lbfgs.value},
             {"grad_norm", r.lbfgs.grad_norm}}},
           {"model_file", r.model_file},
           {"mask_file", r.mask_file},
           {"metrics_file", r.metrics_file}};
    if (with_timing) {
        j["adam_seconds"] = r.adam_seconds;
        j["lbfgs_seconds"] = r.lbfgs_seconds;
        j["eval_seconds"] = r.eval_seconds;
    }
    return j;
}

}  // namespace

std::string lbfgs_status_name(LbfgsStatus s) {
    switch (s) {
        case LbfgsStatus::Converged: return "converged";
        case LbfgsStatus::IterLimit: return "iter-limit";
        case LbfgsStatus::LineSearchFailed: return "line-search-failed";
    }
    throw std::logic_error("report: unknown status tag");
}

void aggregate_l2(TrainingReport& rep) {
    std::vector<double> ok;
    for (const auto& r : rep.restarts)
        if (r.status == "ok") ok.push_back(r.l2);
    if (ok.empty()) {
        rep.l2_mean = rep.l2_std = 0.0;
        return;
    }
    double sum = 0.0;
    for (double v : ok) sum += v;
    rep.l2_mean = sum / static_cast<double>(ok.size());
    double ss = 0.0;
    for (double v : ok) ss += (v - rep.l2_mean) * (v - rep.l2_mean);
    rep.l2_std = ok.size() > 1 ? std::sqrt(ss / static_cast<double>(ok.size() - 1)) : 0.0;
}

TrainingReport run_training(const RunConfig& cfg, const ReferenceGrid* ref, std::ostream* log) {
    validate_config(cfg);
    const Problem p = make_problem(pde_from_name(cfg.problem));

    namespace fs = std::filesystem;
    const fs::path out_dir(cfg.out_dir);
    fs::create_directories(out_dir);
    save_config((out_dir / "config.cfg").string(), cfg);

    ReferenceGrid local;
    if (ref == nullptr) {
        if (log) *log << "solving reference grid for " << cfg.problem << "\n";
        local = make_reference(p);
        ref = &local;
    }

    TrainingReport rep;
    rep.config = cfg;
    using Clock = std::chrono::steady_clock;

    for (int k = 0; k < cfg.restarts; ++k) {
        RestartResult rr;
        rr.seed = cfg.seed + static_cast<std::uint64_t>(k);
        char tag[32];
        std::snprintf(tag, sizeof tag, "restart_%03d", k);
        const fs::path dir = out_dir / tag;
        fs::create_directories(dir);
        rr.model_file = (dir / "model.txt").string();
        rr.mask_file = (dir / "mask.csv").string();
        rr.metrics_file = (dir / "metrics.jsonl").string();

        try {
            const TrainResult tr = train(p, to_train_config(cfg, rr.seed));
            rr.final_loss = tr.final_loss;
            rr.lbfgs = tr.lbfgs;
            rr.adam_seconds = tr.adam_seconds;
            rr.lbfgs_seconds = tr.lbfgs_seconds;

            const auto eval_start = Clock::now();
            rr.l2 = grid_relative_l2(tr.net, *ref);
            rr.eval_seconds = std::chrono::duration<double>(Clock::now() - eval_start).count();

            save_network(rr.model_file, tr.net);
            export_mask(rr.mask_file, p, tr.points, tr.mask);
            std::string lines;
            for (const TrainRecord& r : tr.history) {
                lines += record_json(r).dump();
                lines += '\n';
            }
            write_text(rr.metrics_file, lines);
        } catch (const std::exception& e) {
            rr.status = std::string("failed: ") + e.what();
            rep.status = "failed";
        }
        write_text(dir / "result.json", restart_json(rr, false).dump(2) + "\n");
        if (log)
            *log << tag << " seed=" << rr.seed << " status=" << rr.status
                 << " l2=" << format_double(rr.l2) << "\n";
        rep.restarts.push_back(std::move(rr));
    }

    aggregate_l2(rep);

    json summary{{"problem", cfg.problem},
                 {"mode", mode_name(cfg.mode)},
                 {"restarts", cfg.restarts},
                 {"status", rep.status},
                 {"l2_mean", rep.l2_mean},
                 {"l2_std", rep.l2_std}};
    json per;
    for (const auto& r : rep.restarts)
        per.push_back(json{{"seed", r.seed}, {"status", r.status}, {"l2", r.l2}});
    summary["l2"] = per;
    write_text(out_dir / "summary.json", summary.dump(2) + "\n");

    json full{{"config", config_text(cfg)},
              {"status", rep.status},
              {"l2_mean", rep.l2_mean},
              {"l2_std", rep.l2_std}};
    json rs;
    for (const auto& r : rep.restarts) rs.push_back(restart_json(r, true));
    full["restarts"] = rs;
    write_text(out_dir / "report.json", full.dump(2) + "\n");

    return rep;
}

double evaluate_model(const std::string& model_path, const ReferenceGrid& ref,
                      const std::string& out_dir) {
    const NetworkParams net = load_network(model_path);
    const double l2 = grid_relative_l2(net, ref);
    if (!out_dir.empty()) {
        std::filesystem::create_directories(out_dir);
        const json j{{"model", model_path},
                     {"problem", ref.problem},
                     {"provenance", ref.provenance},
                     {"l2", l2}};
        write_text(std::filesystem::path(out_dir) / "eval.json", j.dump(2) + "\n");
    }
    return l2;
}

}  // namespace sapinn
