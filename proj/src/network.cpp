#include "sapinn/network.hpp"

#include <fstream>
#include <sstream>

namespace sapinn {

void save_network(const std::string& path, const NetworkParams& p) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("network: cannot open " + path + " for writing");
    out << "sapinn-model v1\n";
    out << "layers";
    for (int s : p.sizes) out << ' ' << s;
    out << '\n';
    for (int l = 0; l < p.layer_count(); ++l) {
        const MatrixXd& W = p.W[l];
        for (Eigen::Index r = 0; r < W.rows(); ++r) {
            for (Eigen::Index c = 0; c < W.cols(); ++c)
                out << (c ? " " : "") << format_double(W(r, c));
            out << '\n';
        }
        const MatrixXd& B = p.b[l];
        for (Eigen::Index c = 0; c < B.cols(); ++c) out << (c ? " " : "") << format_double(B(0, c));
        out << '\n';
    }
    if (!out) throw std::runtime_error("network: write failed for " + path);
}

NetworkParams load_network(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("network: cannot open " + path);
    std::string line;
    if (!std::getline(in, line) || line != "sapinn-model v1")
        throw std::runtime_error("network: " + path + " is not a sapinn-model v1 file");
    if (!std::getline(in, line)) throw std::runtime_error("network: missing layers line in " + path);
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    if (tag != "layers") throw std::runtime_error("network: missing layers line in " + path);
    std::vector<int> sizes;
    for (std::string tok; ls >> tok;) sizes.push_back(static_cast<int>(parse_long(tok)));
    try {
        validate_sizes(sizes);
    } catch (const std::invalid_argument& e) {
        throw std::runtime_error("network: " + path + ": " + e.what());
    }

    NetworkParams p;
    p.sizes = sizes;
    auto next_double = [&]() {
        std::string tok;
        if (!(in >> tok)) throw std::runtime_error("network: truncated parameter data in " + path);
        try {
            return parse_double(tok);
        } catch (const std::invalid_argument&) {
            throw std::runtime_error("network: bad number '" + tok + "' in " + path);
        }
    };
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
        MatrixXd W(sizes[l + 1], sizes[l]);
        for (Eigen::Index r = 0; r < W.rows(); ++r)
            for (Eigen::Index c = 0; c < W.cols(); ++c) W(r, c) = next_double();
        MatrixXd B(1, sizes[l + 1]);
        for (Eigen::Index c = 0; c < B.cols(); ++c) B(0, c) = next_double();
        p.W.push_back(std::move(W));
        p.b.push_back(std::move(B));
    }
    std::string extra;
    if (in >> extra) throw std::runtime_error("network: trailing data in " + path);
    return p;
}

}  // namespace sapinn
