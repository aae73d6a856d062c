#pragma once

// Cubical cochain complex on the truncated tensor grid of a model manifold.
//
// Cochain values are integrals over cells (so D has integer entries). The
// diagonal mass of a p-cell with direction set I is
//
//     e^{2h(barycenter)} * prod_{j not in I} |dual_j| / prod_{j in I} h_j,
//
// i.e. the lumped Hodge star, with half dual cells at absolute line ends.

#include <hodgelab/model.hpp>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <array>
#include <cstdint>
#include <vector>

namespace hodgelab {

using Index = Eigen::Index;
using SpMat = Eigen::SparseMatrix<double>;
using IntSpMat = Eigen::SparseMatrix<int>;

/// A degree-p cochain: one value per p-cell in enumerate_cells order.
struct DiscreteForm {
    int degree = 0;
    Eigen::VectorXd values;

    DiscreteForm() = default;
    DiscreteForm(int p, Eigen::VectorXd v) : degree(p), values(std::move(v)) {}

    Index size() const { return values.size(); }
};

class CochainComplex {
public:
    struct Block {
        Pattern pattern = 0;
        std::vector<int> extent;   ///< cells per axis
        std::vector<Index> stride; ///< row-major, axis 0 slowest
        Index offset = 0;
        Index size = 0;
    };

    CochainComplex(ManifoldSpec m, BoundaryMode mode) : manifold_(std::move(m)), mode_(mode)
    {
        build();
    }

    explicit CochainComplex(ManifoldSpec m)
        : CochainComplex(m, default_boundary_mode(m)) {}

    const ManifoldSpec& manifold() const { return manifold_; }
    BoundaryMode mode() const { return mode_; }
    int dimension() const { return manifold_.dimension(); }
    const AxisLayout& axis(int j) const { return axes_.at(static_cast<std::size_t>(j)); }

    void check_degree(int p) const
    {
        if (p < 0 || p > dimension())
            throw DegreeError("degree " + std::to_string(p) + " outside [0, " +
                              std::to_string(dimension()) + "]");
    }

    Index cell_count(int p) const
    {
        check_degree(p);
        return degrees_[p].count;
    }

    const std::vector<Block>& blocks(int p) const
    {
        check_degree(p);
        return degrees_[p].blocks;
    }

    /// Block index holding a given pattern, or -1.
    int block_of(int p, Pattern pat) const
    {
        const auto& bs = blocks(p);
        for (std::size_t b = 0; b < bs.size(); ++b)
            if (bs[b].pattern == pat) return static_cast<int>(b);
        return -1;
    }

    CellIndex cell(int p, Index flat) const
    {
        const auto& bs = blocks(p);
        for (const auto& b : bs) {
            if (flat < b.offset || flat >= b.offset + b.size) continue;
            CellIndex c;
            c.pattern = b.pattern;
            c.position.resize(static_cast<std::size_t>(dimension()));
            Index r = flat - b.offset;
            for (int j = 0; j < dimension(); ++j) {
                c.position[j] = static_cast<int>(r / b.stride[j]);
                r %= b.stride[j];
            }
            return c;
        }
        throw DegreeError("cell index out of range");
    }

    /// Flat index of a cell, or -1 if it is not part of the complex.
    Index flat_index(int p, Pattern pat, const int* pos) const
    {
        int b = block_of(p, pat);
        if (b < 0) return -1;
        const Block& blk = degrees_[p].blocks[static_cast<std::size_t>(b)];
        Index f = blk.offset;
        for (int j = 0; j < dimension(); ++j) {
            if (pos[j] < 0 || pos[j] >= blk.extent[j]) return -1;
            f += pos[j] * blk.stride[j];
        }
        return f;
    }

    Index flat_index(int p, const CellIndex& c) const
    {
        return flat_index(p, c.pattern, c.position.data());
    }

    std::vector<double> barycenter(int p, Index flat) const
    {
        CellIndex c = cell(p, flat);
        std::vector<double> x(static_cast<std::size_t>(dimension()));
        for (int j = 0; j < dimension(); ++j) x[j] = axes_[j].coord(c.extends(j), c.position[j]);
        return x;
    }

    /// h evaluated at every p-cell barycenter.
    const Eigen::VectorXd& h_values(int p) const { return degree_data(p).h; }
    /// Unweighted lumped mass (dual volume / primal volume).
    const Eigen::VectorXd& dx_mass(int p) const { return degree_data(p).dx_mass; }
    /// Product of spacings along the cell's own directions.
    const Eigen::VectorXd& primal_volume(int p) const { return degree_data(p).primal_volume; }

    /// Coboundary D_p : C^p -> C^{p+1}; D_n has zero rows.
    const IntSpMat& coboundary(int p) const
    {
        check_degree(p);
        return coboundary_[p];
    }

    const WeightField& weight() const { return weight_; }

private:
    struct DegreeData {
        std::vector<Block> blocks;
        Index count = 0;
        Eigen::VectorXd h, dx_mass, primal_volume;
    };

    const DegreeData& degree_data(int p) const
    {
        check_degree(p);
        return degrees_[p];
    }

    void build()
    {
        manifold_.validate();
        const int n = dimension();
        for (int j = 0; j < n; ++j) {
            axes_.push_back(AxisLayout::make(manifold_.factor(j), mode_));
            if (axes_.back().vertex_count() < 1)
                throw InvalidSpecError("axis " + std::to_string(j) + " has no vertices in " +
                                       to_string(mode_) + " mode");
        }
        weight_ = weight_fields(manifold_);
        degrees_.resize(static_cast<std::size_t>(n) + 1);
        for (int p = 0; p <= n; ++p) build_degree(p);
        coboundary_.resize(static_cast<std::size_t>(n) + 1);
        for (int p = 0; p <= n; ++p) build_coboundary(p);
    }

    void build_degree(int p)
    {
        const int n = dimension();
        DegreeData& d = degrees_[p];
        Index offset = 0;
        for (Pattern pat : direction_patterns(n, p)) {
            Block b;
            b.pattern = pat;
            b.extent.resize(static_cast<std::size_t>(n));
            b.stride.resize(static_cast<std::size_t>(n));
            Index total = 1;
            for (int j = 0; j < n; ++j) {
                b.extent[j] = axes_[j].count(pattern_has(pat, j));
                total *= b.extent[j];
            }
            Index s = 1;
            for (int j = n - 1; j >= 0; --j) {
                b.stride[j] = s;
                s *= b.extent[j];
            }
            b.offset = offset;
            b.size = total;
            offset += total;
            d.blocks.push_back(std::move(b));
        }
        d.count = offset;
        d.h.resize(offset);
        d.dx_mass.resize(offset);
        d.primal_volume.resize(offset);
        const auto& c = weight_.exponents();
        std::vector<int> pos(static_cast<std::size_t>(n));
        for (const Block& b : d.blocks) {
            std::fill(pos.begin(), pos.end(), 0);
            for (Index t = 0; t < b.size; ++t) {
                double h = 0.0, mass = 1.0, vol = 1.0;
                for (int j = 0; j < n; ++j) {
                    const AxisLayout& a = axes_[j];
                    bool e = pattern_has(b.pattern, j);
                    double x = a.coord(e, pos[j]);
                    h += 0.5 * c[j] * x * x;
                    if (e) {
                        mass /= a.spacing;
                        vol *= a.spacing;
                    } else {
                        mass *= a.vertex_dual_length(a.vertex_node(pos[j]));
                    }
                }
                d.h[b.offset + t] = h;
                d.dx_mass[b.offset + t] = mass;
                d.primal_volume[b.offset + t] = vol;
                for (int j = n - 1; j >= 0; --j) {
                    if (++pos[j] < b.extent[j]) break;
                    pos[j] = 0;
                }
            }
        }
    }

    void build_coboundary(int p)
    {
        const int n = dimension();
        IntSpMat& D = coboundary_[p];
        const Index cols = degrees_[p].count;
        if (p == n) {
            D.resize(0, cols);
            return;
        }
        const DegreeData& up = degrees_[p + 1];
        D.resize(up.count, cols);
        std::vector<Eigen::Triplet<int>> trips;
        trips.reserve(static_cast<std::size_t>(up.count) * 2 * (p + 1));
        std::vector<int> pos(static_cast<std::size_t>(n)), face(static_cast<std::size_t>(n));
        for (const Block& b : up.blocks) {
            std::fill(pos.begin(), pos.end(), 0);
            for (Index t = 0; t < b.size; ++t) {
                const Index row = b.offset + t;
                for (int j = 0; j < n; ++j) {
                    if (!pattern_has(b.pattern, j)) continue;
                    const int sign = (axes_before(b.pattern, j) % 2) ? -1 : 1;
                    const Pattern fp = b.pattern & ~(1u << j);
                    face = pos;
                    const int e = pos[j];
                    const int vs = axes_[j].edge_start(e), ve = axes_[j].edge_end(e);
                    if (ve >= 0) {
                        face[j] = ve;
                        trips.emplace_back(row, flat_index(p, fp, face.data()), sign);
                    }
                    if (vs >= 0) {
                        face[j] = vs;
                        trips.emplace_back(row, flat_index(p, fp, face.data()), -sign);
                    }
                }
                for (int j = n - 1; j >= 0; --j) {
                    if (++pos[j] < b.extent[j]) break;
                    pos[j] = 0;
                }
            }
        }
        D.setFromTriplets(trips.begin(), trips.end());
        D.makeCompressed();
    }

    ManifoldSpec manifold_;
    BoundaryMode mode_;
    std::vector<AxisLayout> axes_;
    WeightField weight_{{}};
    std::vector<DegreeData> degrees_;
    std::vector<IntSpMat> coboundary_;
};

/// Multiply `value` by e^{h} without overflowing when |h| is large.
inline double scale_by_exp(double value, double h)
{
    if (value == 0.0) return 0.0;
    if (std::abs(h) <= 300.0) return value * std::exp(h);
    return std::copysign(std::exp(std::log(std::abs(value)) + h), value);
}

} // namespace hodgelab
