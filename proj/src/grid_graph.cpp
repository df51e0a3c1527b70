#include "hjres/grid_graph.hpp"

#include "hjres/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <string>

namespace hjres {

namespace {

constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

std::string node_str(std::size_t j) { return "node " + std::to_string(j); }

} // namespace

std::size_t Lattice::linear(std::span<const std::size_t> multi) const {
    std::size_t idx = 0;
    for (std::size_t a = 0; a < shape.size(); ++a) idx = idx * shape[a] + multi[a];
    return idx;
}

std::vector<std::size_t> Lattice::multi(std::size_t linear) const {
    std::vector<std::size_t> m(shape.size());
    for (std::size_t a = shape.size(); a-- > 0;) {
        m[a] = linear % shape[a];
        linear /= shape[a];
    }
    return m;
}

std::size_t Lattice::count() const {
    std::size_t c = 1;
    for (auto s : shape) c *= s;
    return c;
}

GridGraph::GridGraph(Parts parts)
    : dim_(parts.dim),
      coords_(std::move(parts.coords)),
      kinds_(std::move(parts.kinds)),
      offsets_(std::move(parts.neighbor_offsets)),
      neighbors_(std::move(parts.neighbors)),
      edge_lengths_(std::move(parts.edge_lengths)),
      h_(parts.h),
      lattice_(std::move(parts.lattice)),
      lattice_index_(std::move(parts.lattice_index)) {
    if (dim_ == 0) throw InvalidGridError("grid dimension must be positive");
    if (coords_.size() != kinds_.size() * dim_)
        throw InvalidGridError("coordinate array does not match node count");
    if (offsets_.size() != kinds_.size() + 1 || offsets_.back() != neighbors_.size() ||
        edge_lengths_.size() != neighbors_.size())
        throw InvalidGridError("malformed neighbor arrays");
    if (!(h_ > 0.0)) throw InvalidGridError("nominal spacing must be positive");

    bool have_degree = false;
    for (std::size_t j = 0; j < kinds_.size(); ++j) {
        if (kinds_[j] == NodeKind::Interior) {
            interior_.push_back(j);
            std::size_t deg = offsets_[j + 1] - offsets_[j];
            if (!have_degree) {
                degree_ = deg;
                have_degree = true;
            }
        } else {
            boundary_.push_back(j);
        }
    }

    c1_ = std::numeric_limits<double>::infinity();
    c2_ = 0.0;
    for (double len : edge_lengths_) {
        c1_ = std::min(c1_, len / h_);
        c2_ = std::max(c2_, len / h_);
    }
    if (edge_lengths_.empty()) c1_ = c2_ = 1.0;

    if (lattice_) {
        if (lattice_index_.empty()) {
            lattice_index_.resize(kinds_.size());
            for (std::size_t j = 0; j < kinds_.size(); ++j) lattice_index_[j] = j;
        }
        lattice_to_node_.assign(lattice_->count(), npos);
        for (std::size_t j = 0; j < lattice_index_.size(); ++j)
            if (lattice_index_[j] != npos) lattice_to_node_[lattice_index_[j]] = j;
    }
}

std::size_t GridGraph::lattice_index(std::size_t j) const {
    if (lattice_index_.empty()) return j;
    return lattice_index_[j];
}

std::optional<std::size_t> GridGraph::node_at_lattice(std::size_t linear) const {
    if (!lattice_ || linear >= lattice_to_node_.size() || lattice_to_node_[linear] == npos)
        return std::nullopt;
    return lattice_to_node_[linear];
}

std::optional<std::size_t> GridGraph::neighbor_slot(std::size_t j, std::size_t k) const {
    auto nb = neighbors(j);
    for (std::size_t s = 0; s < nb.size(); ++s)
        if (nb[s] == k) return s;
    return std::nullopt;
}

void validate(const GridGraph& g) {
    const std::size_t n = g.size();
    std::vector<int> seen(n, 0);
    for (auto j : g.interior()) ++seen[j];
    for (auto j : g.boundary()) ++seen[j];
    for (std::size_t j = 0; j < n; ++j)
        if (seen[j] != 1) throw InvalidGridError(node_str(j) + " is not in exactly one of J, B");

    constexpr double rel_tol = 1e-12;
    for (std::size_t j = 0; j < n; ++j) {
        auto nb = g.neighbors(j);
        auto len = g.edge_lengths(j);
        if (g.is_interior(j) && nb.size() != g.degree())
            throw InvalidGridError(node_str(j) + " breaks the uniform interior degree");
        for (std::size_t s = 0; s < nb.size(); ++s) {
            std::size_t k = nb[s];
            if (k >= n) throw InvalidGridError(node_str(j) + " has an out-of-range neighbor");
            if (k == j) throw InvalidGridError(node_str(j) + " lists itself as a neighbor");
            if (!(len[s] > 0.0)) throw InvalidGridError(node_str(j) + " has a non-positive edge length");
            auto back = g.neighbor_slot(k, j);
            if (!back) throw InvalidGridError("asymmetric edge at " + node_str(j));
            if (g.edge_lengths(k)[*back] != len[s])
                throw InvalidGridError("edge length mismatch at " + node_str(j));
            double ratio = len[s] / g.h();
            if (ratio < g.c1() * (1 - rel_tol) || ratio > g.c2() * (1 + rel_tol))
                throw InvalidGridError("quasi-uniformity violated at " + node_str(j));
        }
    }
    if (!(g.c1() > 0.0) || g.c2() < g.c1()) throw InvalidGridError("invalid quasi-uniformity constants");
}

namespace {

// Builds a graph over the active sites of a lattice. `active[l]` selects sites,
// `interior[l]` marks interior ones; neighbors are the active axis neighbors.
GridGraph lattice_graph(const Lattice& lat, const std::vector<bool>& active,
                        const std::vector<bool>& interior,
                        const std::vector<std::vector<double>>& axis_coords) {
    const std::size_t d = lat.shape.size();
    const std::size_t count = lat.count();
    std::vector<std::size_t> node_of(count, npos);
    std::vector<std::size_t> site_of;
    for (std::size_t l = 0; l < count; ++l) {
        if (active[l]) {
            node_of[l] = site_of.size();
            site_of.push_back(l);
        }
    }

    GridGraph::Parts parts;
    parts.dim = d;
    parts.h = lat.h;
    parts.coords.reserve(site_of.size() * d);
    parts.neighbor_offsets.reserve(site_of.size() + 1);
    parts.neighbor_offsets.push_back(0);
    std::vector<std::size_t> multi(d);
    for (std::size_t l : site_of) {
        multi = lat.multi(l);
        for (std::size_t a = 0; a < d; ++a) parts.coords.push_back(axis_coords[a][multi[a]]);
        parts.kinds.push_back(interior[l] ? NodeKind::Interior : NodeKind::Boundary);
        for (std::size_t a = 0; a < d; ++a) {
            for (int side : {-1, +1}) {
                if (side < 0 && multi[a] == 0) continue;
                if (side > 0 && multi[a] + 1 == lat.shape[a]) continue;
                auto nm = multi;
                nm[a] = side < 0 ? nm[a] - 1 : nm[a] + 1;
                std::size_t k = node_of[lat.linear(nm)];
                if (k == npos) continue;
                parts.neighbors.push_back(k);
                parts.edge_lengths.push_back(lat.h);
            }
        }
        parts.neighbor_offsets.push_back(parts.neighbors.size());
    }
    parts.lattice = lat;
    parts.lattice_index = site_of;
    return GridGraph(std::move(parts));
}

std::vector<double> axis_points(double lo, double hi, std::size_t n, double h) {
    std::vector<double> pts(n);
    double span = hi - lo;
    bool exact = std::abs(span / h - static_cast<double>(n - 1)) < 1e-9;
    for (std::size_t k = 0; k < n; ++k)
        pts[k] = exact ? lo + span * static_cast<double>(k) / static_cast<double>(n - 1)
                       : lo + h * static_cast<double>(k);
    return pts;
}

} // namespace

GridGraph build_interval_grid(std::size_t n) {
    if (n < 2) throw InvalidGridError("interval grid needs n >= 2");
    const double lo[1] = {0.0};
    const double hi[1] = {1.0};
    return build_box_grid(lo, hi, 1.0 / static_cast<double>(n));
}

GridGraph build_box_grid(std::span<const double> lo, std::span<const double> hi, double h) {
    if (lo.size() != hi.size() || lo.empty()) throw InvalidGridError("box bounds must share a positive dimension");
    if (!(h > 0.0) || !std::isfinite(h)) throw InvalidGridError("spacing must be positive");
    const std::size_t d = lo.size();
    Lattice lat;
    lat.h = h;
    lat.lo.assign(lo.begin(), lo.end());
    std::vector<std::vector<double>> axes(d);
    for (std::size_t a = 0; a < d; ++a) {
        double span = hi[a] - lo[a];
        if (!(span >= 2.0 * h * (1 - 1e-12)))
            throw InvalidGridError("box is degenerate along axis " + std::to_string(a));
        auto n = static_cast<std::size_t>(std::floor(span / h + 1e-9)) + 1;
        lat.shape.push_back(n);
        axes[a] = axis_points(lo[a], hi[a], n, h);
    }
    const std::size_t count = lat.count();
    std::vector<bool> active(count, true);
    std::vector<bool> interior(count, false);
    for (std::size_t l = 0; l < count; ++l) {
        auto m = lat.multi(l);
        bool in = true;
        for (std::size_t a = 0; a < d; ++a)
            if (m[a] == 0 || m[a] + 1 == lat.shape[a]) in = false;
        interior[l] = in;
    }
    return lattice_graph(lat, active, interior, axes);
}

namespace {

// Interior lattice sites keep their axis neighbors; every edge leaving the annulus is cut
// where it meets the circle and gets its own boundary node there.
AnnulusGrid cut_cell_annulus(const Lattice& lat, const std::vector<std::vector<double>>& axes,
                             const std::vector<bool>& interior, double r, double R) {
    constexpr double min_fraction = 1e-3;
    const std::size_t n = lat.shape[0];
    const double h = lat.h;
    std::vector<std::size_t> node_of(lat.count(), npos);
    GridGraph::Parts parts;
    parts.dim = 2;
    parts.h = h;
    std::vector<double> tags;
    for (std::size_t l = 0; l < lat.count(); ++l) {
        if (!interior[l]) continue;
        node_of[l] = parts.kinds.size();
        parts.kinds.push_back(NodeKind::Interior);
        parts.lattice_index.push_back(l);
        parts.coords.push_back(axes[0][l / n]);
        parts.coords.push_back(axes[1][l % n]);
        tags.push_back(std::numeric_limits<double>::quiet_NaN());
    }
    const std::size_t n_interior = parts.kinds.size();

    struct Edge {
        std::size_t k;
        double len;
    };
    std::vector<std::vector<Edge>> adj(n_interior);
    std::vector<std::size_t> site_node(lat.count(), npos);  // boundary nodes sitting exactly on a site
    const int di[4] = {-1, 1, 0, 0};
    const int dj[4] = {0, 0, -1, 1};
    for (std::size_t a = 0; a < n_interior; ++a) {
        const std::size_t l = parts.lattice_index[a];
        const std::size_t i = l / n, j = l % n;
        const double x = axes[0][i], y = axes[1][j];
        for (int s = 0; s < 4; ++s) {
            const std::size_t ii = i + di[s], jj = j + dj[s];
            const std::size_t l2 = ii * n + jj;
            if (node_of[l2] != npos) {
                adj[a].push_back({node_of[l2], h});
                continue;
            }
            const double x2 = axes[0][ii], y2 = axes[1][jj];
            const bool inner = x2 * x2 + y2 * y2 <= r * r;
            const double rad = inner ? r : R;
            // |p + t (q - p)| = rad on the unit parameter interval.
            const double dx = x2 - x, dy = y2 - y;
            const double A = dx * dx + dy * dy, B = 2.0 * (x * dx + y * dy), C = x * x + y * y - rad * rad;
            const double disc = std::sqrt(std::max(0.0, B * B - 4.0 * A * C));
            const double t1 = (-B - disc) / (2.0 * A), t2 = (-B + disc) / (2.0 * A);
            double t = (t1 > 0.0 && t1 <= 1.0) ? t1 : t2;
            t = std::clamp(t, min_fraction, 1.0);
            const bool on_site = t > 1.0 - 1e-12;
            std::size_t b = on_site ? site_node[l2] : npos;
            if (b == npos) {
                b = parts.kinds.size();
                parts.kinds.push_back(NodeKind::Boundary);
                parts.lattice_index.push_back(on_site ? l2 : npos);
                parts.coords.push_back(on_site ? x2 : x + t * dx);
                parts.coords.push_back(on_site ? y2 : y + t * dy);
                tags.push_back(inner ? 0.0 : 1.0);
                adj.emplace_back();
                if (on_site) site_node[l2] = b;
            }
            const double len = on_site ? h : t * h;
            adj[a].push_back({b, len});
            adj[b].push_back({a, len});
        }
    }

    parts.neighbor_offsets.push_back(0);
    for (const auto& row : adj) {
        for (const auto& e : row) {
            parts.neighbors.push_back(e.k);
            parts.edge_lengths.push_back(e.len);
        }
        parts.neighbor_offsets.push_back(parts.neighbors.size());
    }
    parts.lattice = lat;
    return AnnulusGrid{GridGraph(std::move(parts)), std::move(tags), r, R};
}

} // namespace

AnnulusGrid build_annulus_grid(double r, double R, double h, AnnulusBoundary mode) {
    if (!(r > 0.0) || !(R > r)) throw InvalidGridError("annulus needs 0 < r < R");
    if (!(h > 0.0) || !(h < (R - r) / 4.0)) throw InvalidGridError("spacing too coarse to separate the circles");
    if (R + h >= 2.0) throw InvalidGridError("annulus does not fit in the [-2, 2]^2 embedding");

    Lattice lat;
    lat.h = h;
    lat.lo = {-2.0, -2.0};
    auto n = static_cast<std::size_t>(std::floor(4.0 / h + 1e-9)) + 1;
    lat.shape = {n, n};
    std::vector<std::vector<double>> axes(2, axis_points(-2.0, 2.0, n, h));

    // Sites within rounding distance of a circle count as on it, hence not interior.
    const double tol = 1e-12 * R * R;
    const double r2 = r * r + tol;
    const double R2 = R * R - tol;
    const std::size_t count = lat.count();
    std::vector<bool> interior(count, false);
    for (std::size_t l = 0; l < count; ++l) {
        double x = axes[0][l / n];
        double y = axes[1][l % n];
        double rho2 = x * x + y * y;
        interior[l] = rho2 > r2 && rho2 < R2;
    }
    if (mode == AnnulusBoundary::CutCell) return cut_cell_annulus(lat, axes, interior, r, R);

    std::vector<bool> active = interior;
    for (std::size_t l = 0; l < count; ++l) {
        if (!interior[l]) continue;
        std::size_t i = l / n, j = l % n;
        // Interior sites are strictly inside [-2, 2]^2, so all four lattice neighbors exist.
        active[(i - 1) * n + j] = true;
        active[(i + 1) * n + j] = true;
        active[i * n + j - 1] = true;
        active[i * n + j + 1] = true;
    }

    AnnulusGrid out{lattice_graph(lat, active, interior, axes), {}, r, R};
    const auto& g = out.graph;
    out.boundary_value.assign(g.size(), std::numeric_limits<double>::quiet_NaN());
    for (auto j : g.boundary()) {
        auto p = g.point(j);
        out.boundary_value[j] = (p[0] * p[0] + p[1] * p[1] <= r2) ? 0.0 : 1.0;
    }
    return out;
}

Stencil collocation_stencil(std::span<const double> p, double h, std::size_t d) {
    if (!(h > 0.0)) throw PreconditionError("stencil spacing must be positive");
    if (p.size() != d) throw IndexingError("stencil center dimension mismatch");
    Stencil s;
    s.center.assign(p.begin(), p.end());
    s.h = h;
    for (std::size_t a = 0; a < d; ++a) {
        for (double side : {-1.0, 1.0}) {
            std::vector<double> off(d, 0.0);
            off[a] = side * h;
            s.offsets.push_back(std::move(off));
        }
    }
    return s;
}

std::vector<double> graph_gradient(std::span<const double> u, std::size_t j, const GridGraph& g) {
    if (u.size() != g.size()) throw IndexingError("field size does not match graph");
    if (j >= g.size() || !g.is_interior(j)) throw NotInteriorError(node_str(j) + " is not interior");
    auto nb = g.neighbors(j);
    auto len = g.edge_lengths(j);
    std::vector<double> p(nb.size());
    for (std::size_t s = 0; s < nb.size(); ++s) p[s] = (u[j] - u[nb[s]]) / len[s];
    return p;
}

void write_field(std::ostream& os, const GridGraph& g, std::span<const double> values) {
    if (values.size() != g.size()) throw IndexingError("field size does not match graph");
    char buf[64];
    for (std::size_t j = 0; j < g.size(); ++j) {
        os << j;
        for (double x : g.point(j)) {
            std::snprintf(buf, sizeof buf, " %.17g", x);
            os << buf;
        }
        std::snprintf(buf, sizeof buf, " %c %.17g\n", g.is_interior(j) ? 'I' : 'B', values[j]);
        os << buf;
    }
}

} // namespace hjres
