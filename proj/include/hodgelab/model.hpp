#pragma once

// Model manifolds: finite products of Gaussian-weighted lines and flat
// circles, their truncated grids, the quadratic weight h and the cubical
// cell bookkeeping shared by every other module.

#include <hodgelab/errors.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

namespace hodgelab {

enum class FactorKind { line, circle };

/// One flat 1-D factor. A line carries the weight h_j = (c/2) x^2 and is
/// truncated to [-L, L]; a circle is unweighted.
struct FactorSpec {
    FactorKind kind = FactorKind::line;
    double c = 0.0;          ///< weight exponent, line only
    double extent = 1.0;     ///< half-width L (line) or circumference (circle)
    int subdivisions = 4;    ///< N
    double offset = 0.0;     ///< circle only: coordinate of node 0

    static FactorSpec line(double c, double half_width, int n)
    {
        return FactorSpec{FactorKind::line, c, half_width, n, 0.0};
    }

    static FactorSpec circle(double circumference, int n, double offset = 0.0)
    {
        return FactorSpec{FactorKind::circle, 0.0, circumference, n, offset};
    }

    bool is_line() const { return kind == FactorKind::line; }
    bool is_circle() const { return kind == FactorKind::circle; }

    double spacing() const
    {
        return is_line() ? 2.0 * extent / subdivisions : extent / subdivisions;
    }

    void validate() const
    {
        if (subdivisions < 4)
            throw InvalidSpecError("factor needs at least 4 subdivisions, got " +
                                   std::to_string(subdivisions));
        if (!(extent > 0.0) || !std::isfinite(extent))
            throw InvalidSpecError(is_line() ? "line half-width L must be positive"
                                             : "circle circumference must be positive");
        if (is_circle() && c != 0.0)
            throw InvalidSpecError("circle factors carry no weight (c must be 0)");
        if (!std::isfinite(c))
            throw InvalidSpecError("weight exponent must be finite");
    }

    std::string label() const
    {
        std::ostringstream os;
        if (is_line())
            os << "R(c=" << c << ",L=" << extent << ",N=" << subdivisions << ")";
        else
            os << "S1(C=" << extent << ",N=" << subdivisions << ")";
        return os.str();
    }
};

struct Grid1D {
    std::vector<double> nodes;
    double spacing = 0.0;
    bool periodic = false;
};

inline Grid1D build_factor_grid(const FactorSpec& f)
{
    f.validate();
    Grid1D g;
    g.spacing = f.spacing();
    if (f.is_line()) {
        g.periodic = false;
        g.nodes.resize(static_cast<std::size_t>(f.subdivisions) + 1);
        for (int i = 0; i <= f.subdivisions; ++i)
            g.nodes[i] = -f.extent + i * g.spacing;
        // exact symmetry about 0
        for (int i = 0; i <= f.subdivisions / 2; ++i) {
            double a = 0.5 * (g.nodes[f.subdivisions - i] - g.nodes[i]);
            g.nodes[i] = -a;
            g.nodes[f.subdivisions - i] = a;
        }
    } else {
        g.periodic = true;
        g.nodes.resize(static_cast<std::size_t>(f.subdivisions));
        for (int i = 0; i < f.subdivisions; ++i)
            g.nodes[i] = f.offset + i * g.spacing;
    }
    return g;
}

class ManifoldSpec {
public:
    ManifoldSpec() = default;
    explicit ManifoldSpec(std::vector<FactorSpec> factors) : factors_(std::move(factors))
    {
        validate();
    }

    void validate() const
    {
        if (factors_.empty())
            throw InvalidSpecError("a model manifold needs at least one factor");
        if (factors_.size() > 16)
            throw InvalidSpecError("at most 16 factors are supported");
        for (const auto& f : factors_)
            f.validate();
    }

    int dimension() const { return static_cast<int>(factors_.size()); }
    const std::vector<FactorSpec>& factors() const { return factors_; }
    const FactorSpec& factor(int j) const { return factors_.at(static_cast<std::size_t>(j)); }

    bool has_circle() const
    {
        return std::any_of(factors_.begin(), factors_.end(),
                           [](const FactorSpec& f) { return f.is_circle(); });
    }
    bool has_line() const
    {
        return std::any_of(factors_.begin(), factors_.end(),
                           [](const FactorSpec& f) { return f.is_line(); });
    }

    /// Index of the first line factor, or -1.
    int first_line_axis() const
    {
        for (int j = 0; j < dimension(); ++j)
            if (factors_[j].is_line()) return j;
        return -1;
    }

    std::string label() const
    {
        std::string s;
        for (std::size_t j = 0; j < factors_.size(); ++j) {
            if (j) s += "x";
            s += factors_[j].label();
        }
        return s;
    }

    ManifoldSpec with_subdivisions(int n) const
    {
        auto fs = factors_;
        for (auto& f : fs) f.subdivisions = n;
        return ManifoldSpec(std::move(fs));
    }

    ManifoldSpec with_weight_scale(double s) const
    {
        auto fs = factors_;
        for (auto& f : fs)
            if (f.is_line()) f.c *= s;
        return ManifoldSpec(std::move(fs));
    }

    friend ManifoldSpec product(const ManifoldSpec& a, const ManifoldSpec& b)
    {
        auto fs = a.factors_;
        fs.insert(fs.end(), b.factors_.begin(), b.factors_.end());
        return ManifoldSpec(std::move(fs));
    }

private:
    std::vector<FactorSpec> factors_;
};

/// h(x) = sum_j (c_j/2) x_j^2 over line factors, so dmu = e^{2h} dx.
class WeightField {
public:
    explicit WeightField(std::vector<double> exponents) : c_(std::move(exponents)) {}

    int dimension() const { return static_cast<int>(c_.size()); }
    const std::vector<double>& exponents() const { return c_; }

    template <class Point>
    double h(const Point& x) const
    {
        double s = 0.0;
        for (std::size_t j = 0; j < c_.size(); ++j) s += 0.5 * c_[j] * x[j] * x[j];
        return s;
    }

    template <class Point>
    std::vector<double> grad_h(const Point& x) const
    {
        std::vector<double> g(c_.size());
        for (std::size_t j = 0; j < c_.size(); ++j) g[j] = c_[j] * x[j];
        return g;
    }

    /// Hessian of h is constant and diagonal.
    const std::vector<double>& hess_h_diagonal() const { return c_; }

    template <class Point>
    double density(const Point& x) const { return std::exp(2.0 * h(x)); }

    /// |dh|^2
    template <class Point>
    double grad_h_squared(const Point& x) const
    {
        double s = 0.0;
        for (std::size_t j = 0; j < c_.size(); ++j) s += c_[j] * c_[j] * x[j] * x[j];
        return s;
    }

    bool is_trivial() const
    {
        return std::all_of(c_.begin(), c_.end(), [](double v) { return v == 0.0; });
    }

private:
    std::vector<double> c_;
};

inline WeightField weight_fields(const ManifoldSpec& m)
{
    std::vector<double> c(static_cast<std::size_t>(m.dimension()));
    for (int j = 0; j < m.dimension(); ++j) c[j] = m.factor(j).is_line() ? m.factor(j).c : 0.0;
    return WeightField(std::move(c));
}

enum class BoundaryMode { relative, absolute };

inline const char* to_string(BoundaryMode m)
{
    return m == BoundaryMode::relative ? "relative" : "absolute";
}

/// Growth weight (c > 0) truncates with relative conditions, decay or flat
/// weight with absolute ones. Mixed signs need an explicit choice.
inline BoundaryMode default_boundary_mode(const ManifoldSpec& m)
{
    bool pos = false, nonpos = false;
    for (const auto& f : m.factors()) {
        if (!f.is_line()) continue;
        (f.c > 0.0 ? pos : nonpos) = true;
    }
    if (pos && nonpos)
        throw InvalidSpecError("line factors with mixed weight signs need an explicit boundary mode");
    return pos ? BoundaryMode::relative : BoundaryMode::absolute;
}

/// Per-axis layout of vertices and edges of the truncated 1-D complex.
struct AxisLayout {
    int subdivisions = 0;
    double spacing = 0.0;
    double origin = 0.0;   ///< coordinate of grid node 0
    bool periodic = false;
    bool relative = false; ///< boundary vertices removed (non-periodic only)

    static AxisLayout make(const FactorSpec& f, BoundaryMode mode)
    {
        f.validate();
        AxisLayout a;
        a.subdivisions = f.subdivisions;
        a.spacing = f.spacing();
        a.periodic = f.is_circle();
        a.origin = f.is_line() ? -f.extent : f.offset;
        a.relative = f.is_line() && mode == BoundaryMode::relative;
        return a;
    }

    int vertex_count() const
    {
        if (periodic) return subdivisions;
        return relative ? subdivisions - 1 : subdivisions + 1;
    }
    int edge_count() const { return subdivisions; }
    int count(bool edge) const { return edge ? edge_count() : vertex_count(); }

    int vertex_node(int i) const { return relative ? i + 1 : i; }

    double vertex_coord(int i) const
    {
        if (!periodic && vertex_node(i) * 2 == subdivisions) return 0.0;
        return origin + vertex_node(i) * spacing;
    }
    double edge_coord(int e) const
    {
        if (!periodic && 2 * e + 1 == subdivisions) return 0.0;
        return origin + (e + 0.5) * spacing;
    }
    double coord(bool edge, int i) const { return edge ? edge_coord(i) : vertex_coord(i); }

    /// Length of the dual cell of vertex i (half cells at absolute ends).
    double vertex_dual_length(int i) const
    {
        if (!periodic && !relative && (i == 0 || i == subdivisions)) return 0.5 * spacing;
        return spacing;
    }

    /// Vertex index (in this layout) at the start / end of edge e, or -1
    /// when that vertex was removed by the relative condition.
    int edge_start(int e) const
    {
        if (periodic) return e;
        return relative ? (e - 1 >= 0 ? e - 1 : -1) : e;
    }
    int edge_end(int e) const
    {
        if (periodic) return (e + 1) % subdivisions;
        if (relative) return e <= subdivisions - 2 ? e : -1;
        return e + 1;
    }
};

/// Subset of axes carrying the dx^I directions of a cell.
using Pattern = std::uint32_t;

inline int pattern_degree(Pattern m) { return __builtin_popcount(m); }
inline bool pattern_has(Pattern m, int j) { return (m >> j) & 1u; }

/// All direction patterns of degree p in lexicographic order of the sorted
/// index sets, e.g. n=3, p=2: {0,1}, {0,2}, {1,2}.
inline std::vector<Pattern> direction_patterns(int n, int p)
{
    if (p < 0 || p > n)
        throw DegreeError("degree " + std::to_string(p) + " outside [0, " + std::to_string(n) + "]");
    std::vector<Pattern> out;
    std::vector<int> idx(static_cast<std::size_t>(p));
    std::iota(idx.begin(), idx.end(), 0);
    while (true) {
        Pattern m = 0;
        for (int i : idx) m |= (1u << i);
        out.push_back(m);
        int k = p - 1;
        while (k >= 0 && idx[k] == n - p + k) --k;
        if (k < 0) break;
        ++idx[k];
        for (int l = k + 1; l < p; ++l) idx[l] = idx[l - 1] + 1;
    }
    return out;
}

/// Number of axes of `m` strictly below axis j: the Koszul sign exponent.
inline int axes_before(Pattern m, int j)
{
    return pattern_degree(m & ((1u << j) - 1u));
}

/// Sign of the permutation that sorts (I, complement of I).
inline int shuffle_sign(Pattern I, int n)
{
    int inversions = 0;
    for (int j = 0; j < n; ++j)
        if (!pattern_has(I, j)) inversions += pattern_degree(I & ~((1u << (j + 1)) - 1u));
    return (inversions % 2) ? -1 : 1;
}

struct CellIndex {
    std::vector<int> position; ///< vertex or edge index per axis
    Pattern pattern = 0;       ///< bit j set: cell extends along axis j

    int degree() const { return pattern_degree(pattern); }
    bool extends(int j) const { return pattern_has(pattern, j); }
    bool operator==(const CellIndex&) const = default;
};

/// Cells of degree p: pattern major, positions row-major (axis 0 slowest).
inline std::vector<CellIndex> enumerate_cells(const ManifoldSpec& m, int p, BoundaryMode mode)
{
    const int n = m.dimension();
    std::vector<AxisLayout> axes;
    for (int j = 0; j < n; ++j) axes.push_back(AxisLayout::make(m.factor(j), mode));
    std::vector<CellIndex> out;
    for (Pattern pat : direction_patterns(n, p)) {
        std::vector<int> ext(static_cast<std::size_t>(n));
        std::size_t total = 1;
        for (int j = 0; j < n; ++j) {
            ext[j] = axes[j].count(pattern_has(pat, j));
            total *= static_cast<std::size_t>(std::max(ext[j], 0));
        }
        if (total == 0) continue;
        std::vector<int> pos(static_cast<std::size_t>(n), 0);
        for (std::size_t t = 0; t < total; ++t) {
            out.push_back(CellIndex{pos, pat});
            for (int j = n - 1; j >= 0; --j) {
                if (++pos[j] < ext[j]) break;
                pos[j] = 0;
            }
        }
    }
    return out;
}

inline long long binomial(int n, int k)
{
    if (k < 0 || k > n) return 0;
    long long r = 1;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

} // namespace hodgelab
