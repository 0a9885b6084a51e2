#include "epicausal/graph.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace epicausal {

AdjacencyGraph::AdjacencyGraph(int n_nodes, std::vector<std::pair<int, int>> edges,
                               IsolatedPolicy policy)
    : n_(n_nodes) {
    if (n_nodes <= 0) {
        throw std::invalid_argument("AdjacencyGraph: n_nodes must be positive");
    }
    for (auto& [j, k] : edges) {
        if (j < 0 || j >= n_ || k < 0 || k >= n_) {
            throw std::invalid_argument("AdjacencyGraph: edge endpoint out of range");
        }
        if (j == k) {
            throw std::invalid_argument("AdjacencyGraph: explicit self-edges are not allowed");
        }
        if (j > k) std::swap(j, k);
    }
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    edges_ = std::move(edges);

    neighbors_.resize(static_cast<std::size_t>(n_));
    self_loop_.assign(static_cast<std::size_t>(n_), 0);
    for (const auto& [j, k] : edges_) {
        neighbors_[static_cast<std::size_t>(j)].push_back(k);
        neighbors_[static_cast<std::size_t>(k)].push_back(j);
    }
    for (int j = 0; j < n_; ++j) {
        auto& nb = neighbors_[static_cast<std::size_t>(j)];
        if (nb.empty()) {
            if (policy == IsolatedPolicy::Error) {
                throw std::invalid_argument("AdjacencyGraph: node " + std::to_string(j) +
                                            " has no neighbors");
            }
            nb.push_back(j);
            self_loop_[static_cast<std::size_t>(j)] = 1;
            ++n_self_loops_;
        } else {
            std::sort(nb.begin(), nb.end());
        }
    }
    degrees_.resize(static_cast<std::size_t>(n_));
    for (int j = 0; j < n_; ++j) {
        degrees_[static_cast<std::size_t>(j)] =
            static_cast<int>(neighbors_[static_cast<std::size_t>(j)].size());
    }
}

AdjacencyGraph rook_grid(int rows, int cols) {
    if (rows <= 0 || cols <= 0) {
        throw std::invalid_argument("rook_grid: rows and cols must be positive");
    }
    if (rows * cols == 1) {
        throw std::invalid_argument("rook_grid: a 1x1 grid has no edges");
    }
    std::vector<std::pair<int, int>> edges;
    edges.reserve(static_cast<std::size_t>(2 * rows * cols));
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            const int j = r * cols + c;
            if (c + 1 < cols) edges.emplace_back(j, j + 1);
            if (r + 1 < rows) edges.emplace_back(j, j + cols);
        }
    }
    return AdjacencyGraph(rows * cols, std::move(edges));
}

AdjacencyGraph temporal_path_graph(int T) {
    if (T <= 0) {
        throw std::invalid_argument("temporal_path_graph: T must be positive");
    }
    std::vector<std::pair<int, int>> edges;
    edges.reserve(static_cast<std::size_t>(T));
    for (int t = 0; t + 1 < T; ++t) edges.emplace_back(t, t + 1);
    return AdjacencyGraph(T, std::move(edges), IsolatedPolicy::SelfLoop);
}

Eigen::MatrixXd neighbor_average(const AdjacencyGraph& graph, const Eigen::MatrixXd& field) {
    if (field.rows() != graph.n_nodes()) {
        throw std::invalid_argument("neighbor_average: field rows must equal node count");
    }
    Eigen::MatrixXd out(field.rows(), field.cols());
    for (int j = 0; j < graph.n_nodes(); ++j) {
        const auto& nb = graph.neighbors(j);
        Eigen::RowVectorXd acc = Eigen::RowVectorXd::Zero(field.cols());
        for (int k : nb) acc += field.row(k);
        out.row(j) = acc / static_cast<double>(nb.size());
    }
    return out;
}

Eigen::VectorXd neighbor_average(const AdjacencyGraph& graph, const Eigen::VectorXd& field) {
    Eigen::MatrixXd m = neighbor_average(graph, Eigen::MatrixXd(field));
    return Eigen::VectorXd(m.col(0));
}

Eigen::SparseMatrix<double> SparsePrecision::to_sparse() const {
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(entries.size());
    for (const auto& e : entries) trips.emplace_back(e.row, e.col, e.value);
    Eigen::SparseMatrix<double> out(dim, dim);
    out.setFromTriplets(trips.begin(), trips.end());
    return out;
}

Eigen::MatrixXd SparsePrecision::to_dense() const {
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(dim, dim);
    for (const auto& e : entries) out(e.row, e.col) = e.value;
    return out;
}

void SparsePrecision::write(std::ostream& os) const {
    os << "dim " << dim << "\n";
    char buf[64];
    for (const auto& e : entries) {
        std::snprintf(buf, sizeof(buf), "%d %d %.17g\n", e.row, e.col, e.value);
        os << buf;
    }
}

SparsePrecision car_precision(const AdjacencyGraph& graph, double rho) {
    if (!(rho >= 0.0 && rho < 1.0)) {
        throw std::invalid_argument("car_precision: rho must lie in [0, 1)");
    }
    SparsePrecision out;
    out.dim = graph.n_nodes();
    out.entries.reserve(static_cast<std::size_t>(graph.n_nodes()) +
                        2 * static_cast<std::size_t>(graph.n_edges()));
    for (int j = 0; j < graph.n_nodes(); ++j) {
        for (int k : graph.neighbors(j)) {
            if (k < j) out.entries.push_back({j, k, -rho});
        }
        out.entries.push_back({j, j, static_cast<double>(graph.degree(j))});
        for (int k : graph.neighbors(j)) {
            if (k > j) out.entries.push_back({j, k, -rho});
        }
    }
    return out;
}

void write_adjacency(const AdjacencyGraph& graph, std::ostream& os) {
    os << "nodes " << graph.n_nodes() << "\n";
    for (const auto& [j, k] : graph.edges()) {
        os << j << " " << k << "\n";
    }
}

void write_adjacency_file(const AdjacencyGraph& graph, const std::filesystem::path& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("write_adjacency_file: cannot open " + path.string());
    write_adjacency(graph, os);
    if (!os) throw std::runtime_error("write_adjacency_file: write failed for " + path.string());
}

AdjacencyGraph read_adjacency(std::istream& is, IsolatedPolicy policy) {
    std::string tag;
    int n = 0;
    if (!(is >> tag >> n) || tag != "nodes") {
        throw std::runtime_error("read_adjacency: expected header 'nodes <J>'");
    }
    std::vector<std::pair<int, int>> edges;
    int j = 0;
    int k = 0;
    while (is >> j >> k) edges.emplace_back(j, k);
    if (!is.eof() && is.fail()) {
        // fail without eof means a token that is not an int
        is.clear();
        std::string rest;
        is >> rest;
        if (!rest.empty()) {
            throw std::runtime_error("read_adjacency: unexpected token '" + rest + "'");
        }
    }
    return AdjacencyGraph(n, std::move(edges), policy);
}

AdjacencyGraph read_adjacency_file(const std::filesystem::path& path, IsolatedPolicy policy) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("read_adjacency_file: cannot open " + path.string());
    return read_adjacency(is, policy);
}

}  // namespace epicausal
