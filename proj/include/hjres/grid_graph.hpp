#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

namespace hjres {

enum class NodeKind : unsigned char { Interior, Boundary };

/// Cartesian lattice metadata kept by graphs built on uniform grids.
/// Linear lattice index is row-major (last axis fastest).
struct Lattice {
    std::vector<double> lo;
    std::vector<std::size_t> shape;
    double h = 0.0;

    std::size_t linear(std::span<const std::size_t> multi) const;
    std::vector<std::size_t> multi(std::size_t linear) const;
    std::size_t count() const;
};

/// Geometrical graph: points, interior/boundary split, symmetric neighbor lists
/// with edge lengths. Immutable after construction.
///
/// Interior nodes have exactly K neighbors. On Cartesian grids the neighbor list
/// is ordered by axis, negative offset first: (-e_1, +e_1, -e_2, +e_2, ...).
class GridGraph {
public:
    struct Parts {
        std::size_t dim = 0;
        std::vector<double> coords;                 // size() * dim
        std::vector<NodeKind> kinds;
        std::vector<std::size_t> neighbor_offsets;  // size() + 1
        std::vector<std::size_t> neighbors;
        std::vector<double> edge_lengths;           // parallel to neighbors
        double h = 0.0;
        std::optional<Lattice> lattice;
        std::vector<std::size_t> lattice_index;     // empty, or one per node
    };

    explicit GridGraph(Parts parts);

    std::size_t dim() const noexcept { return dim_; }
    std::size_t size() const noexcept { return kinds_.size(); }
    double h() const noexcept { return h_; }
    std::size_t degree() const noexcept { return degree_; }
    double c1() const noexcept { return c1_; }
    double c2() const noexcept { return c2_; }

    std::span<const double> point(std::size_t j) const {
        return {coords_.data() + j * dim_, dim_};
    }
    std::span<const std::size_t> neighbors(std::size_t j) const {
        return {neighbors_.data() + offsets_[j], offsets_[j + 1] - offsets_[j]};
    }
    std::span<const double> edge_lengths(std::size_t j) const {
        return {edge_lengths_.data() + offsets_[j], offsets_[j + 1] - offsets_[j]};
    }
    bool is_interior(std::size_t j) const { return kinds_[j] == NodeKind::Interior; }
    NodeKind kind(std::size_t j) const { return kinds_[j]; }

    const std::vector<std::size_t>& interior() const noexcept { return interior_; }
    const std::vector<std::size_t>& boundary() const noexcept { return boundary_; }

    const std::optional<Lattice>& lattice() const noexcept { return lattice_; }
    /// Lattice linear index of node j (identity for full box grids, SIZE_MAX off the lattice).
    std::size_t lattice_index(std::size_t j) const;
    /// Node sitting at a lattice linear index, if it belongs to the graph.
    std::optional<std::size_t> node_at_lattice(std::size_t linear) const;

    /// Position of k in the neighbor list of j.
    std::optional<std::size_t> neighbor_slot(std::size_t j, std::size_t k) const;

private:
    std::size_t dim_;
    std::vector<double> coords_;
    std::vector<NodeKind> kinds_;
    std::vector<std::size_t> offsets_;
    std::vector<std::size_t> neighbors_;
    std::vector<double> edge_lengths_;
    double h_;
    std::size_t degree_ = 0;
    double c1_ = 0.0;
    double c2_ = 0.0;
    std::vector<std::size_t> interior_;
    std::vector<std::size_t> boundary_;
    std::optional<Lattice> lattice_;
    std::vector<std::size_t> lattice_index_;
    std::vector<std::size_t> lattice_to_node_;  // npos for inactive lattice sites
};

/// Throws InvalidGridError on the first violated structural invariant.
void validate(const GridGraph& g);

/// Uniform grid {j/n : j = 0..n} on [0, 1], boundary {0, n}.
GridGraph build_interval_grid(std::size_t n);

/// Uniform lattice on the box [lo, hi] with spacing h.
GridGraph build_box_grid(std::span<const double> lo, std::span<const double> hi, double h);

struct AnnulusGrid {
    GridGraph graph;
    /// Dirichlet tag per node: 0 inside the inner disk, 1 outside. NaN on interior nodes.
    std::vector<double> boundary_value;
    double r = 0.0;
    double R = 0.0;
};

enum class AnnulusBoundary {
    /// Boundary nodes are the outside lattice sites adjacent to an interior node.
    Staircase,
    /// Each edge leaving the annulus ends at its crossing with the circle (edge length
    /// t h, t clamped to [1e-3, 1]). Those nodes are off the lattice unless t = 1.
    CutCell,
};

/// Annulus r < |x| < R embedded in the lattice on [-2, 2]^2. Interior nodes are the
/// lattice nodes of the open annulus. Inactive lattice sites are dropped (row-major order is kept).
AnnulusGrid build_annulus_grid(double r, double R, double h, AnnulusBoundary mode = AnnulusBoundary::Staircase);

struct Stencil {
    std::vector<double> center;
    std::vector<std::vector<double>> offsets;
    double h = 0.0;
};

/// Axis stencil {p ± h e_i} ordered like grid neighbors (-e_1, +e_1, ...).
Stencil collocation_stencil(std::span<const double> p, double h, std::size_t d);

/// {(u_j - u_k) / dx_kj} for k in the neighbor list of interior node j.
std::vector<double> graph_gradient(std::span<const double> u, std::size_t j, const GridGraph& g);

/// Writes `index x1 .. xd tag value` lines, tag in {I, B}.
void write_field(std::ostream& os, const GridGraph& g, std::span<const double> values);

} // namespace hjres
