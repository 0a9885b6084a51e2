#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <utility>
#include <vector>

namespace epicausal {

/// What to do with a node that has no neighbors. `Error` rejects the graph;
/// `SelfLoop` keeps the node with degree 1 so that conditional-autoregressive
/// precisions built on the graph stay nonsingular (the node becomes
/// independent with conditional variance sigma^2).
enum class IsolatedPolicy { Error, SelfLoop };

/// Symmetric 0/1 adjacency structure over nodes 0..n-1.
///
/// Stores the canonical edge list (j < k, sorted), per-node sorted neighbor
/// lists and degrees m_j. Immutable after construction; safe for concurrent
/// reads.
class AdjacencyGraph {
public:
    AdjacencyGraph() = default;
    AdjacencyGraph(int n_nodes, std::vector<std::pair<int, int>> edges,
                   IsolatedPolicy policy = IsolatedPolicy::Error);

    int n_nodes() const { return n_; }
    std::int64_t n_edges() const { return static_cast<std::int64_t>(edges_.size()); }
    /// Degree m_j; equals 1 for a node kept by the self-loop policy.
    int degree(int j) const { return degrees_[static_cast<std::size_t>(j)]; }
    const std::vector<int>& neighbors(int j) const { return neighbors_[static_cast<std::size_t>(j)]; }
    const std::vector<std::pair<int, int>>& edges() const { return edges_; }

    bool is_self_looped(int j) const { return self_loop_[static_cast<std::size_t>(j)] != 0; }
    bool has_self_loops() const { return n_self_loops_ > 0; }
    int n_self_loops() const { return n_self_loops_; }

private:
    int n_ = 0;
    std::vector<std::pair<int, int>> edges_;
    std::vector<std::vector<int>> neighbors_;
    std::vector<int> degrees_;
    std::vector<char> self_loop_;
    int n_self_loops_ = 0;
};

/// rows x cols lattice with rook (4-neighbor) adjacency. Node (r,c) has index
/// r*cols + c.
AdjacencyGraph rook_grid(int rows, int cols);

/// Path graph over T ordered time points: t adjacent to t-1 and t+1.
/// T = 1 yields a single node kept under the self-loop policy (degree 1),
/// so the graph remains usable as the temporal factor of a separable field.
AdjacencyGraph temporal_path_graph(int T);

/// Mean of each node's neighbors, column by column: out(j,c) =
/// sum_k c_jk field(k,c) / m_j. A self-looped node averages over itself.
Eigen::MatrixXd neighbor_average(const AdjacencyGraph& graph, const Eigen::MatrixXd& field);
Eigen::VectorXd neighbor_average(const AdjacencyGraph& graph, const Eigen::VectorXd& field);

/// Symmetric sparse matrix in coordinate form with deterministic (row, col)
/// ordering, so writing the same matrix twice produces identical bytes.
struct SparsePrecision {
    struct Entry {
        int row;
        int col;
        double value;
    };

    int dim = 0;
    std::vector<Entry> entries;  // sorted by (row, col); both triangles stored
    bool symmetric = true;

    Eigen::SparseMatrix<double> to_sparse() const;
    Eigen::MatrixXd to_dense() const;
    void write(std::ostream& os) const;
};

/// Precision M - rho*C of the conditional autoregressive model: diagonal m_j,
/// off-diagonal -rho where j ~ k. Positive definite for rho in [0,1).
SparsePrecision car_precision(const AdjacencyGraph& graph, double rho);

/// Largest rho accepted by samplers; M - C itself is singular.
inline constexpr double kMaxCarRho = 1.0 - 1e-6;

/// Adjacency text format: header line `nodes <J>`, then one `j k` line per
/// edge (0-based). Round-trips losslessly.
void write_adjacency(const AdjacencyGraph& graph, std::ostream& os);
void write_adjacency_file(const AdjacencyGraph& graph, const std::filesystem::path& path);
AdjacencyGraph read_adjacency(std::istream& is, IsolatedPolicy policy = IsolatedPolicy::Error);
AdjacencyGraph read_adjacency_file(const std::filesystem::path& path,
                                   IsolatedPolicy policy = IsolatedPolicy::Error);

}  // namespace epicausal
