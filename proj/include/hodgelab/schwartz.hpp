#pragma once

// Weighted seminorms |x^k d^alpha w| of forms in the flat (h) picture,
// Garding and seminorm-ladder ratios, and pointwise decay shells.
//
// Derivatives are centered differences of component values (cochain value
// divided by cell volume) on each pattern lattice: zero extension past the
// ends of a line, periodic on circles. x is the first line coordinate.

#include <hodgelab/operators.hpp>

#include <array>
#include <functional>

namespace hodgelab {

using MultiIndex = std::vector<int>;

namespace detail {

/// Components u = w / vol of a cochain.
inline Eigen::VectorXd components(const CochainComplex& k, const DiscreteForm& w)
{
    return w.values.cwiseQuotient(k.primal_volume(w.degree));
}

/// d/dx_j (order 1: centered, order 2: three-point) of a component vector.
inline Eigen::VectorXd difference(const CochainComplex& k, int p, const Eigen::VectorXd& u, int j, int order)
{
    const int n = k.dimension();
    const AxisLayout& a = k.axis(j);
    const double h = a.spacing;
    Eigen::VectorXd out = Eigen::VectorXd::Zero(u.size());
    std::vector<int> pos(static_cast<std::size_t>(n)), nb(static_cast<std::size_t>(n));
    for (const auto& b : k.blocks(p)) {
        const int ext = b.extent[j];
        std::fill(pos.begin(), pos.end(), 0);
        for (Index t = 0; t < b.size; ++t) {
            auto value_at = [&](int i) {
                if (a.periodic) i = (i % ext + ext) % ext;
                else if (i < 0 || i >= ext) return 0.0;
                nb = pos;
                nb[j] = i;
                return u[k.flat_index(p, b.pattern, nb.data())];
            };
            const double up = value_at(pos[j] + 1), dn = value_at(pos[j] - 1);
            out[b.offset + t] = order == 1 ? (up - dn) / (2.0 * h) : (up - 2.0 * u[b.offset + t] + dn) / (h * h);
            for (int q = n - 1; q >= 0; --q) {
                if (++pos[q] < b.extent[q]) break;
                pos[q] = 0;
            }
        }
    }
    return out;
}

/// First line coordinate at each p-cell barycenter (0 if no line axis).
inline Eigen::VectorXd first_line_coordinate(const CochainComplex& k, int p)
{
    const int j = k.manifold().first_line_axis();
    Eigen::VectorXd x = Eigen::VectorXd::Zero(k.cell_count(p));
    if (j < 0) return x;
    for (Index i = 0; i < x.size(); ++i) {
        CellIndex c = k.cell(p, i);
        x[i] = k.axis(j).coord(c.extends(j), c.position[j]);
    }
    return x;
}

/// Unweighted L2 norm of a component vector: sum (dual * primal volume) u^2.
inline double component_norm(const CochainComplex& k, int p, const Eigen::VectorXd& u)
{
    const Eigen::VectorXd cell = k.dx_mass(p).cwiseProduct(k.primal_volume(p)).cwiseProduct(k.primal_volume(p));
    return std::sqrt((cell.array() * u.array().square()).sum());
}

inline int order(const MultiIndex& alpha)
{
    int s = 0;
    for (int a : alpha) s += a;
    return s;
}

} // namespace detail

/// |(x^1)^k d^alpha w|_{L^2} for w in the flat picture, |alpha| <= 2.
inline double seminorm(const CochainComplex& k, const DiscreteForm& w, int kpow, const MultiIndex& alpha)
{
    const int n = k.dimension();
    if (kpow < 0) throw InvalidSpecError("monomial power must be >= 0");
    if (static_cast<int>(alpha.size()) > n) throw InvalidSpecError("multi-index longer than the dimension");
    for (int a : alpha)
        if (a < 0) throw InvalidSpecError("negative multi-index entry");
    if (detail::order(alpha) > 2) throw InvalidSpecError("only derivatives of order <= 2 are supported");
    const int p = w.degree;
    Eigen::VectorXd u = detail::components(k, w);
    for (int j = 0; j < static_cast<int>(alpha.size()); ++j) {
        if (alpha[j] == 2) u = detail::difference(k, p, u, j, 2);
        else if (alpha[j] == 1) u = detail::difference(k, p, u, j, 1);
    }
    if (kpow > 0) u = u.cwiseProduct(detail::first_line_coordinate(k, p).array().pow(kpow).matrix());
    return detail::component_norm(k, p, u);
}

/// All multi-indices of length n with total order <= max_order, ordered by
/// total order then lexicographically.
inline std::vector<MultiIndex> multi_indices(int n, int max_order)
{
    std::vector<MultiIndex> out;
    for (int total = 0; total <= max_order; ++total) {
        MultiIndex a(static_cast<std::size_t>(n), 0);
        std::function<void(int, int)> rec = [&](int j, int left) {
            if (j == n - 1) {
                a[j] = left;
                out.push_back(a);
                return;
            }
            for (int v = left; v >= 0; --v) {
                a[j] = v;
                rec(j + 1, left - v);
            }
        };
        if (n == 0) continue;
        rec(0, total);
    }
    return out;
}

struct SeminormEntry {
    int k = 0;
    MultiIndex alpha;
    double value = 0.0;
};

struct SeminormReport {
    int resolution = 0;
    std::vector<SeminormEntry> entries;
};

inline SeminormReport seminorm_table(const CochainComplex& k, const DiscreteForm& w, int max_k = 3, int max_order = 2)
{
    SeminormReport rep;
    rep.resolution = k.manifold().factor(0).subdivisions;
    for (int kp = 0; kp <= max_k; ++kp)
        for (const auto& a : multi_indices(k.dimension(), max_order))
            rep.entries.push_back({kp, a, seminorm(k, w, kp, a)});
    return rep;
}

/// (sum_j |d_j w|^2 + |x^1 w|^2) / (<Delta_h w, w> + |w|^2)
inline double garding_ratio(const CochainComplex& k, const DiscreteForm& w, const OperatorHandle& lap_h)
{
    const int n = k.dimension();
    double num = std::pow(seminorm(k, w, 1, MultiIndex(static_cast<std::size_t>(n), 0)), 2);
    for (int j = 0; j < n; ++j) {
        MultiIndex a(static_cast<std::size_t>(n), 0);
        a[j] = 1;
        num += std::pow(seminorm(k, w, 0, a), 2);
    }
    const double norm2 = inner_dx(k, w.degree, w.values, w.values);
    if (norm2 == 0.0) throw InvalidSpecError("garding_ratio needs a nonzero form");
    const double energy = std::max(0.0, lap_h.metric_inner(lap_h.apply(w).values, w.values));
    return num / (energy + norm2);
}

struct LadderResult {
    int l = 0;
    double lhs = 0.0;
    double rhs = 0.0;
    double ratio = 0.0;
};

/// lhs = sum_{k + |alpha| <= l} |x^k d^alpha w|^2, rhs = <Delta_h^l w, w> + |w|^2.
inline LadderResult seminorm_ladder_check(const CochainComplex& k, const DiscreteForm& w, const OperatorHandle& lap_h,
                                          int l)
{
    if (l != 1 && l != 2) throw InvalidSpecError("ladder level must be 1 or 2");
    LadderResult r;
    r.l = l;
    const int n = k.dimension();
    for (int kp = 0; kp <= l; ++kp)
        for (const auto& a : multi_indices(n, l - kp)) r.lhs += std::pow(seminorm(k, w, kp, a), 2);
    const double norm2 = inner_dx(k, w.degree, w.values, w.values);
    Eigen::VectorXd Aw = lap_h.apply(w).values;
    double top = l == 1 ? lap_h.metric_inner(Aw, w.values) : lap_h.metric_inner(Aw, Aw);
    r.rhs = std::max(0.0, top) + norm2;
    r.ratio = r.lhs / r.rhs;
    return r;
}

struct DecayShell {
    int m = 0;                           ///< shell |x_j| in [m, m+1)
    double sup_value = 0.0;
    std::array<double, 4> sup_moment{};  ///< sup |x_j^k d_j u|, k = 0..3
};

/// Shell table of sup |components| and sup |x_j^k d_j u| along axis j.
inline std::vector<DecayShell> decay_profile(const CochainComplex& k, const DiscreteForm& w, int j)
{
    if (j < 0 || j >= k.dimension() || !k.manifold().factor(j).is_line())
        throw InvalidSpecError("decay profile needs a line axis");
    const int p = w.degree;
    const Eigen::VectorXd u = detail::components(k, w);
    const Eigen::VectorXd du = detail::difference(k, p, u, j, 1);
    const int shells = static_cast<int>(std::ceil(k.manifold().factor(j).extent));
    std::vector<DecayShell> out(static_cast<std::size_t>(shells));
    for (int m = 0; m < shells; ++m) out[m].m = m;
    for (Index i = 0; i < u.size(); ++i) {
        CellIndex c = k.cell(p, i);
        const double x = std::abs(k.axis(j).coord(c.extends(j), c.position[j]));
        const int m = std::min(shells - 1, static_cast<int>(std::floor(x)));
        auto& s = out[m];
        s.sup_value = std::max(s.sup_value, std::abs(u[i]));
        for (int kp = 0; kp <= 3; ++kp) s.sup_moment[kp] = std::max(s.sup_moment[kp], std::pow(x, kp) * std::abs(du[i]));
    }
    return out;
}

struct EnvelopeReport {
    std::vector<double> x;        ///< shell midpoints
    std::vector<double> g;        ///< max over shell of log|u| + (c/2) x^2
    double max_excess = 0.0;      ///< max of g(x) - g(x_0) - (a + b log(x/x_0))
    double a = 1.0, b = 3.0;
    bool pass = false;
};

/// Envelope g = log|u| + (c/2) x_j^2 on shells of [from, to) along a line
/// axis; passes when g stays below a log-linear bound over the first shell.
inline EnvelopeReport envelope_check(const CochainComplex& k, const DiscreteForm& w, int j, double from = 2.0,
                                     double to = 6.0, double a = 1.0, double b = 3.0)
{
    if (!k.manifold().factor(j).is_line()) throw InvalidSpecError("envelope check needs a line axis");
    const double c = k.manifold().factor(j).c;
    const int p = w.degree;
    const Eigen::VectorXd u = detail::components(k, w);
    const int shells = static_cast<int>(std::round(to - from));
    EnvelopeReport rep;
    rep.a = a;
    rep.b = b;
    rep.g.assign(static_cast<std::size_t>(shells), -std::numeric_limits<double>::infinity());
    for (int m = 0; m < shells; ++m) rep.x.push_back(from + m + 0.5);
    for (Index i = 0; i < u.size(); ++i) {
        if (u[i] == 0.0) continue;
        CellIndex cell = k.cell(p, i);
        const double x = std::abs(k.axis(j).coord(cell.extends(j), cell.position[j]));
        if (x < from || x >= to) continue;
        const int m = static_cast<int>(std::floor(x - from));
        rep.g[m] = std::max(rep.g[m], std::log(std::abs(u[i])) + 0.5 * c * x * x);
    }
    rep.max_excess = -std::numeric_limits<double>::infinity();
    for (int m = 1; m < shells; ++m)
        rep.max_excess = std::max(rep.max_excess, rep.g[m] - rep.g[0] - (a + b * std::log(rep.x[m] / rep.x[0])));
    rep.pass = std::isfinite(rep.g[0]) && rep.max_excess <= 0.0;
    return rep;
}

} // namespace hodgelab
