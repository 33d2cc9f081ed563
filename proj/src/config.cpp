#include "sapinn/config.hpp"

#include <charconv>
#include <climits>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "sapinn/problem.hpp"

namespace sapinn {

namespace {

std::string fmt_bool(bool v) { return v ? "1" : "0"; }

bool parse_bool(std::string_view s) {
    if (s == "1" || s == "true") return true;
    if (s == "0" || s == "false") return false;
    throw std::invalid_argument("config: expected a boolean, got '" + std::string(s) + "'");
}

int parse_int(std::string_view s) {
    const long v = parse_long(s);
    if (v < INT_MIN || v > INT_MAX)
        throw std::invalid_argument("config: integer out of range: " + std::string(s));
    return static_cast<int>(v);
}

std::uint64_t parse_u64(std::string_view s) {
    std::uint64_t v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw std::invalid_argument("config: bad unsigned integer: " + std::string(s));
    return v;
}

std::string fmt_arch(const std::vector<int>& a) {
    std::string s;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (i) s += ' ';
        s += std::to_string(a[i]);
    }
    return s;
}

std::vector<int> parse_arch(std::string_view s) {
    std::vector<int> out;
    std::istringstream in{std::string(s)};
    std::string tok;
    while (in >> tok) out.push_back(parse_int(tok));
    if (out.empty()) throw std::invalid_argument("config: arch needs at least two sizes");
    return out;
}

struct Binding {
    const char* key;
    std::string (*get)(const RunConfig&);
    void (*set)(RunConfig&, std::string_view);
};

const Binding kBindings[] = {
    {"problem", [](const RunConfig& c) { return c.problem; },
     [](RunConfig& c, std::string_view v) {
         (void)pde_from_name(v);
         c.problem = std::string(v);
     }},
    {"arch", [](const RunConfig& c) { return fmt_arch(c.arch); },
     [](RunConfig& c, std::string_view v) { c.arch = parse_arch(v); }},
    {"n_interior", [](const RunConfig& c) { return std::to_string(c.sampler.n_interior); },
     [](RunConfig& c, std::string_view v) { c.sampler.n_interior = parse_int(v); }},
    {"n_boundary", [](const RunConfig& c) { return std::to_string(c.sampler.n_boundary); },
     [](RunConfig& c, std::string_view v) { c.sampler.n_boundary = parse_int(v); }},
    {"n_initial", [](const RunConfig& c) { return std::to_string(c.sampler.n_initial); },
     [](RunConfig& c, std::string_view v) { c.sampler.n_initial = parse_int(v); }},
    {"mesh_interior", [](const RunConfig& c) { return fmt_bool(c.sampler.mesh_interior); },
     [](RunConfig& c, std::string_view v) { c.sampler.mesh_interior = parse_bool(v); }},
    {"mesh_nx", [](const RunConfig& c) { return std::to_string(c.sampler.mesh_nx); },
     [](RunConfig& c, std::string_view v) { c.sampler.mesh_nx = parse_int(v); }},
    {"mesh_ny", [](const RunConfig& c) { return std::to_string(c.sampler.mesh_ny); },
     [](RunConfig& c, std::string_view v) { c.sampler.mesh_ny = parse_int(v); }},
    {"mask_r_lo", [](const RunConfig& c) { return format_double(c.mask.residual.lo); },
     [](RunConfig& c, std::string_view v) { c.mask.residual.lo = parse_double(v); }},
    {"mask_r_hi", [](const RunConfig& c) { return format_double(c.mask.residual.hi); },
     [](RunConfig& c, std::string_view v) { c.mask.residual.hi = parse_double(v); }},
    {"mask_r_train", [](const RunConfig& c) { return fmt_bool(c.mask.residual.trainable); },
     [](RunConfig& c, std::string_view v) { c.mask.residual.trainable = parse_bool(v); }},
    {"mask_b_lo", [](const RunConfig& c) { return format_double(c.mask.boundary.lo); },
     [](RunConfig& c, std::string_view v) { c.mask.boundary.lo = parse_double(v); }},
    {"mask_b_hi", [](const RunConfig& c) { return format_double(c.mask.boundary.hi); },
     [](RunConfig& c, std::string_view v) { c.mask.boundary.hi = parse_double(v); }},
    {"mask_b_train", [](const RunConfig& c) { return fmt_bool(c.mask.boundary.trainable); },
     [](RunConfig& c, std::string_view v) { c.mask.boundary.trainable = parse_bool(v); }},
    {"mask_0_lo", [](const RunConfig& c) { return format_double(c.mask.initial.lo); },
     [](RunConfig& c, std::string_view v) { c.mask.initial.lo = parse_double(v); }},
    {"mask_0_hi", [](const RunConfig& c) { return format_double(c.mask.initial.hi); },
     [](RunConfig& c, std::string_view v) { c.mask.initial.hi = parse_double(v); }},
    {"mask_0_train", [](const RunConfig& c) { return fmt_bool(c.mask.initial.trainable); },
     [](RunConfig& c, std::string_view v) { c.mask.initial.trainable = parse_bool(v); }},
    {"mode", [](const RunConfig& c) { return mode_name(c.mode); },
     [](RunConfig& c, std::string_view v) { c.mode = mode_from_name(v); }},
    {"c_weight", [](const RunConfig& c) { return format_double(c.c_weight); },
     [](RunConfig& c, std::string_view v) { c.c_weight = parse_double(v); }},
    {"seed", [](const RunConfig& c) { return std::to_string(c.seed); },
     [](RunConfig& c, std::string_view v) { c.seed = parse_u64(v); }},
    {"restarts", [](const RunConfig& c) { return std::to_string(c.restarts); },
     [](RunConfig& c, std::string_view v) { c.restarts = parse_int(v); }},
    {"out_dir", [](const RunConfig& c) { return c.out_dir; },
     [](RunConfig& c, std::string_view v) { c.out_dir = std::string(v); }},
    {"adam_iters", [](const RunConfig& c) { return std::to_string(c.adam_iters); },
     [](RunConfig& c, std::string_view v) { c.adam_iters = parse_int(v); }},
    {"adam_lr", [](const RunConfig& c) { return format_double(c.adam_w.lr); },
     [](RunConfig& c, std::string_view v) { c.adam_w.lr = parse_double(v); }},
    {"adam_decay", [](const RunConfig& c) { return format_double(c.adam_w.decay); },
     [](RunConfig& c, std::string_view v) { c.adam_w.decay = parse_double(v); }},
    {"adam_beta1", [](const RunConfig& c) { return format_double(c.adam_w.beta1); },
     [](RunConfig& c, std::string_view v) { c.adam_w.beta1 = parse_double(v); }},
    {"adam_beta2", [](const RunConfig& c) { return format_double(c.adam_w.beta2); },
     [](RunConfig& c, std::string_view v) { c.adam_w.beta2 = parse_double(v); }},
    {"adam_eps", [](const RunConfig& c) { return format_double(c.adam_w.eps); },
     [](RunConfig& c, std::string_view v) { c.adam_w.eps = parse_double(v); }},
    {"mask_lr", [](const RunConfig& c) { return format_double(c.adam_mask.lr); },
     [](RunConfig& c, std::string_view v) { c.adam_mask.lr = parse_double(v); }},
    {"mask_decay", [](const RunConfig& c) { return format_double(c.adam_mask.decay); },
     [](RunConfig& c, std::string_view v) { c.adam_mask.decay = parse_double(v); }},
    {"mask_beta1", [](const RunConfig& c) { return format_double(c.adam_mask.beta1); },
     [](RunConfig& c, std::string_view v) { c.adam_mask.beta1 = parse_double(v); }},
    {"mask_beta2", [](const RunConfig& c) { return format_double(c.adam_mask.beta2); },
     [](RunConfig& c, std::string_view v) { c.adam_mask.beta2 = parse_double(v); }},
    {"mask_eps", [](const RunConfig& c) { return format_double(c.adam_mask.eps); },
     [](RunConfig& c, std::string_view v) { c.adam_mask.eps = parse_double(v); }},
    {"mask_rule", [](const RunConfig& c) { return rule_name(c.mask_rule); },
     [](RunConfig& c, std::string_view v) { c.mask_rule = rule_from_name(v); }},
    {"lbfgs_iters", [](const RunConfig& c) { return std::to_string(c.lbfgs_iters); },
     [](RunConfig& c, std::string_view v) { c.lbfgs_iters = parse_int(v); }},
    {"lbfgs_history", [](const RunConfig& c) { return std::to_string(c.lbfgs.history); },
     [](RunConfig& c, std::string_view v) { c.lbfgs.history = parse_int(v); }},
    {"lbfgs_grad_tol", [](const RunConfig& c) { return format_double(c.lbfgs.grad_tol); },
     [](RunConfig& c, std::string_view v) { c.lbfgs.grad_tol = parse_double(v); }},
    {"lbfgs_c1", [](const RunConfig& c) { return format_double(c.lbfgs.wolfe_c1); },
     [](RunConfig& c, std::string_view v) { c.lbfgs.wolfe_c1 = parse_double(v); }},
    {"lbfgs_c2", [](const RunConfig& c) { return format_double(c.lbfgs.wolfe_c2); },
     [](RunConfig& c, std::string_view v) { c.lbfgs.wolfe_c2 = parse_double(v); }},
    {"lbfgs_line_evals",
     [](const RunConfig& c) { return std::to_string(c.lbfgs.line_search_evals); },
     [](RunConfig& c, std::string_view v) { c.lbfgs.line_search_evals = parse_int(v); }},
    {"record_every", [](const RunConfig& c) { return std::to_string(c.record_every); },
     [](RunConfig& c, std::string_view v) { c.record_every = parse_int(v); }},
};

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
        s.remove_suffix(1);
    return s;
}

}  // namespace

std::string mode_name(TrainMode m) {
    switch (m) {
        case TrainMode::Sa: return "sa";
        case TrainMode::Baseline: return "baseline";
        case TrainMode::Nonadaptive: return "nonadaptive";
    }
    throw std::logic_error("config: unknown mode tag");
}

TrainMode mode_from_name(std::string_view s) {
    if (s == "sa") return TrainMode::Sa;
    if (s == "baseline") return TrainMode::Baseline;
    if (s == "nonadaptive") return TrainMode::Nonadaptive;
    throw std::invalid_argument("config: unknown mode '" + std::string(s) +
                                "' (want sa, baseline, or nonadaptive)");
}

std::string rule_name(MaskRule r) {
    return r == MaskRule::Adam ? "adam" : "plain";
}

MaskRule rule_from_name(std::string_view s) {
    if (s == "adam") return MaskRule::Adam;
    if (s == "plain") return MaskRule::Plain;
    throw std::invalid_argument("config: unknown mask rule '" + std::string(s) +
                                "' (want adam or plain)");
}

std::string config_text(const RunConfig& cfg) {
    std::string out;
    for (const Binding& b : kBindings) {
        out += b.key;
        out += " = ";
        out += b.get(cfg);
        out += '\n';
    }
    return out;
}

void save_config(const std::string& path, const RunConfig& cfg) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("config: cannot open " + path + " for writing");
    out << config_text(cfg);
    if (!out) throw std::runtime_error("config: write failed for " + path);
}

void apply_config_entry(RunConfig& cfg, std::string_view key, std::string_view value) {
    for (const Binding& b : kBindings)
        if (key == b.key) {
            b.set(cfg, value);
            return;
        }
    throw std::invalid_argument("config: unknown key '" + std::string(key) + "'");
}

void apply_config_file(RunConfig& cfg, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("config: cannot open " + path);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string_view s(line);
        if (const auto hash = s.find('#'); hash != std::string_view::npos) s = s.substr(0, hash);
        s = trim(s);
        if (s.empty()) continue;
        const auto eq = s.find('=');
        if (eq == std::string_view::npos)
            throw std::runtime_error("config: " + path + " line " + std::to_string(lineno) +
                                     " is not key = value");
        try {
            apply_config_entry(cfg, trim(s.substr(0, eq)), trim(s.substr(eq + 1)));
        } catch (const std::invalid_argument& e) {
            throw std::runtime_error("config: " + path + " line " + std::to_string(lineno) +
                                     ": " + e.what());
        }
    }
}

RunConfig load_config(const std::string& path) {
    RunConfig cfg;
    apply_config_file(cfg, path);
    return cfg;
}

void validate_config(const RunConfig& cfg) {
    const Problem p = make_problem(pde_from_name(cfg.problem));
    validate_sizes(cfg.arch);
    if (cfg.arch.front() != 2 || cfg.arch.back() != 1)
        throw std::invalid_argument("config: arch must map two inputs to one output");
    if (cfg.sampler.n_interior < 0 || cfg.sampler.n_boundary < 0 || cfg.sampler.n_initial < 0)
        throw std::invalid_argument("config: negative point count");
    if (!p.has_initial && cfg.sampler.n_initial > 0)
        throw std::invalid_argument("config: " + cfg.problem + " takes no initial points");
    if (cfg.sampler.mesh_interior && (cfg.sampler.mesh_nx < 3 || cfg.sampler.mesh_ny < 3))
        throw std::invalid_argument("config: mesh subsampling needs mesh_nx and mesh_ny >= 3");
    for (const MaskGroupInit& g : {cfg.mask.residual, cfg.mask.boundary, cfg.mask.initial})
        if (g.lo < 0.0 || g.hi < g.lo)
            throw std::invalid_argument("config: mask init range must satisfy 0 <= lo <= hi");
    if (cfg.mode == TrainMode::Nonadaptive && !(cfg.c_weight > 0.0))
        throw std::invalid_argument("config: nonadaptive mode needs c_weight > 0");
    if (cfg.restarts < 1) throw std::invalid_argument("config: restarts must be at least 1");
    if (cfg.out_dir.empty()) throw std::invalid_argument("config: out_dir must be set");
    if (cfg.adam_iters < 0 || cfg.lbfgs_iters < 0)
        throw std::invalid_argument("config: negative iteration count");
    if (cfg.record_every < 1)
        throw std::invalid_argument("config: record_every must be positive");
    for (const AdamConfig& a : {cfg.adam_w, cfg.adam_mask}) {
        if (a.lr < 0.0 || a.decay < 0.0 || a.decay > 1.0)
            throw std::invalid_argument("config: adam rate must be >= 0 and decay in [0, 1]");
        if (!(0.0 <= a.beta1 && a.beta1 < 1.0 && 0.0 <= a.beta2 && a.beta2 < 1.0) ||
            !(a.eps > 0.0))
            throw std::invalid_argument("config: adam moments need betas in [0,1) and eps > 0");
    }
    if (cfg.lbfgs.history < 1 || cfg.lbfgs.line_search_evals < 3 ||
        !(0.0 < cfg.lbfgs.wolfe_c1 && cfg.lbfgs.wolfe_c1 < cfg.lbfgs.wolfe_c2 &&
          cfg.lbfgs.wolfe_c2 < 1.0) ||
        !(cfg.lbfgs.grad_tol >= 0.0))
        throw std::invalid_argument("config: lbfgs settings out of range");
}

TrainConfig to_train_config(const RunConfig& cfg, std::uint64_t seed) {
    TrainConfig t;
    t.sizes = cfg.arch;
    t.sampler = cfg.sampler;
    t.mask = cfg.mask;
    t.mode = cfg.mode;
    t.c_weight = cfg.c_weight;
    t.seed = seed;
    t.adam_iters = cfg.adam_iters;
    t.adam_w = cfg.adam_w;
    t.adam_mask = cfg.adam_mask;
    t.mask_rule = cfg.mask_rule;
    t.lbfgs_iters = cfg.lbfgs_iters;
    t.lbfgs = cfg.lbfgs;
    t.record_every = cfg.record_every;
    return t;
}

std::vector<std::string> preset_names() {
    return {"allen-cahn-paper", "burgers-paper",    "helmholtz-paper",
            "allen-cahn-desk",  "burgers-desk",     "helmholtz-desk"};
}

RunConfig preset(std::string_view name) {
    RunConfig c;
    c.out_dir = "runs/" + std::string(name);
    if (name == "allen-cahn-paper" || name == "allen-cahn-desk") {
        c.problem = "allen-cahn";
        c.mask.residual = {0.0, 1.0, true};
        c.mask.boundary = {1.0, 1.0, false};
        c.mask.initial = {0.0, 100.0, true};
        if (name == "allen-cahn-paper") {
            c.arch = {2, 128, 128, 128, 128, 1};
            c.sampler.n_interior = 20000;
            c.sampler.n_boundary = 100;
            c.sampler.n_initial = 100;
            c.adam_iters = 10000;
            c.lbfgs_iters = 10000;
        } else {
            c.arch = {2, 64, 64, 64, 64, 1};
            c.sampler.n_interior = 5000;
            c.sampler.n_boundary = 100;
            c.sampler.n_initial = 100;
            c.adam_iters = 3000;
            c.lbfgs_iters = 2000;
            c.adam_mask.lr = 5e-3;
        }
    } else if (name == "burgers-paper" || name == "burgers-desk") {
        c.problem = "burgers";
        c.arch = {2, 20, 20, 20, 20, 20, 20, 20, 20, 1};
        c.sampler.n_initial = 100;
        c.sampler.n_boundary = 200;
        c.sampler.n_interior = 10000;
        if (name == "burgers-paper") {
            c.adam_iters = 10000;
            c.lbfgs_iters = 10000;
        } else {
            c.adam_iters = 2000;
            c.lbfgs_iters = 2000;
        }
    } else if (name == "helmholtz-paper" || name == "helmholtz-desk") {
        c.problem = "helmholtz";
        c.arch = {2, 50, 50, 50, 50, 1};
        c.sampler.n_boundary = 400;
        c.sampler.mesh_interior = true;
        c.sampler.mesh_nx = 1001;
        c.sampler.mesh_ny = 1001;
        if (name == "helmholtz-paper") {
            c.sampler.n_interior = 100000;
            c.adam_iters = 10000;
            c.lbfgs_iters = 10000;
        } else {
            c.sampler.n_interior = 10000;
            c.adam_iters = 2000;
            c.lbfgs_iters = 1000;
        }
    } else {
        std::string all;
        for (const auto& n : preset_names()) {
            if (!all.empty()) all += ", ";
            all += n;
        }
        throw std::invalid_argument("config: unknown preset '" + std::string(name) +
                                    "' (available: " + all + ")");
    }
    validate_config(c);
    return c;
}

}  // namespace sapinn
