#include "sapinn/mask.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace sapinn {

namespace {

std::string g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

void export_mask(const std::string& path, const Problem& problem, const SampleSet& points,
                 const Mask& mask) {
    if (points.interior_x.rows() != mask.r.size() || points.boundary_x.rows() != mask.b.size() ||
        points.initial_x.rows() != mask.i.size())
        throw std::invalid_argument("mask: point set and mask sizes differ");
    std::ofstream out(path);
    if (!out) throw std::runtime_error("mask: cannot open " + path + " for writing");
    const bool spatial = problem.kind == Pde::Helmholtz;
    out << (spatial ? "x,y,group,lambda\n" : "x,t,group,lambda\n");
    for (Eigen::Index k = 0; k < mask.r.size(); ++k)
        out << g17(points.interior_x(k, 0)) << ',' << g17(points.interior_y(k, 0)) << ",r,"
            << g17(mask.r(k)) << '\n';
    for (Eigen::Index k = 0; k < mask.b.size(); ++k)
        out << g17(points.boundary_x(k, 0)) << ',' << g17(points.boundary_y(k, 0)) << ",b,"
            << g17(mask.b(k)) << '\n';
    for (Eigen::Index k = 0; k < mask.i.size(); ++k)
        out << g17(points.initial_x(k, 0)) << ',' << g17(problem.y_lo) << ",0,"
            << g17(mask.i(k)) << '\n';
    if (!out) throw std::runtime_error("mask: write failed for " + path);
}

Mask import_mask(const std::string& path, int n_r, int n_b, int n_i) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("mask: cannot open " + path);
    std::string line;
    if (!std::getline(in, line) || (line != "x,t,group,lambda" && line != "x,y,group,lambda"))
        throw std::runtime_error("mask: " + path + " lacks the mask header row");

    Mask m;
    m.r.resize(n_r);
    m.b.resize(n_b);
    m.i.resize(n_i);
    Eigen::Index kr = 0, kb = 0, ki = 0;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string x, y, group, lambda;
        if (!std::getline(row, x, ',') || !std::getline(row, y, ',') ||
            !std::getline(row, group, ',') || !std::getline(row, lambda))
            throw std::runtime_error("mask: " + path + " line " + std::to_string(lineno) +
                                     " is not x,y,group,lambda");
        double lv;
        try {
            (void)parse_double(x);
            (void)parse_double(y);
            lv = parse_double(lambda);
        } catch (const std::invalid_argument&) {
            throw std::runtime_error("mask: bad number at " + path + " line " +
                                     std::to_string(lineno));
        }
        if (group == "r") {
            if (kr >= n_r) throw std::invalid_argument("mask: more residual rows than expected");
            m.r(kr++) = lv;
        } else if (group == "b") {
            if (kb >= n_b) throw std::invalid_argument("mask: more boundary rows than expected");
            m.b(kb++) = lv;
        } else if (group == "0") {
            if (ki >= n_i) throw std::invalid_argument("mask: more initial rows than expected");
            m.i(ki++) = lv;
        } else {
            throw std::runtime_error("mask: unknown group '" + group + "' at " + path + " line " +
                                     std::to_string(lineno));
        }
    }
    if (kr != n_r || kb != n_b || ki != n_i)
        throw std::invalid_argument("mask: row counts do not match the expected point counts");
    return m;
}

}  // namespace sapinn
