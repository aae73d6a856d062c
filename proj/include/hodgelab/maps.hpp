#pragma once

// Extension by zero through the end compression Psi_R, the projection onto
// harmonic forms, and the pairing-matrix certificate that Pi o j is onto.

#include <hodgelab/spectral.hpp>

#include <Eigen/Dense>

namespace hodgelab {

/// Psi_R^{-1} along one end: identity for s <= R, R + 1/(1 - (s-R)) on
/// [R+1/2, R+1), and a quintic smoothstep blend of the two on [R, R+1/2].
struct EndCompression {
    double R = 0.0;

    explicit EndCompression(double core) : R(core)
    {
        if (!(core >= 0.0) || !std::isfinite(core)) throw InvalidSpecError("core radius R must be >= 0");
    }

    static double blend(double u) { return u * u * u * (10.0 - 15.0 * u + 6.0 * u * u); }
    static double blend_prime(double u) { return 30.0 * u * u * (1.0 - u) * (1.0 - u); }

    double operator()(double s) const
    {
        check(s);
        if (s <= R) return s;
        const double t = s - R;
        const double f = R + 1.0 / (1.0 - t);
        if (t >= 0.5) return f;
        const double w = blend(2.0 * t);
        return (1.0 - w) * s + w * f;
    }

    double derivative(double s) const
    {
        check(s);
        if (s <= R) return 1.0;
        const double t = s - R;
        const double fp = 1.0 / ((1.0 - t) * (1.0 - t));
        if (t >= 0.5) return fp;
        const double u = 2.0 * t;
        const double f = R + 1.0 / (1.0 - t);
        return 1.0 + 2.0 * blend_prime(u) * (f - s) + blend(u) * (fp - 1.0);
    }

    /// Sampled sup of the derivative over the blend interval [R, R+1/2].
    double sup_blend_derivative(int samples = 20001) const
    {
        double best = 0.0;
        for (int i = 0; i < samples; ++i) best = std::max(best, derivative(R + 0.5 * i / (samples - 1)));
        return best;
    }

    /// Odd extension to both ends of a line: x -> sign(x) r(|x|).
    double signed_map(double x) const { return std::copysign((*this)(std::abs(x)), x); }

private:
    void check(double s) const
    {
        if (s < 0.0) throw OutOfChartError("compression takes |coordinate| >= 0");
        if (s >= R + 1.0)
            throw OutOfChartError("s = " + std::to_string(s) + " lies outside the chart [0, R+1)");
    }
};

inline double compress_coordinate(double s, double R) { return EndCompression(R)(s); }

/// A kernel basis of one degree in the mu picture, M^mu-orthonormal.
struct KernelBasis {
    int degree = 0;
    Eigen::MatrixXd forms;

    int size() const { return static_cast<int>(forms.cols()); }
};

inline KernelBasis make_kernel_basis(const Spectrum& s, const KernelInfo& info)
{
    return {s.degree, kernel_basis(s, info)};
}

namespace detail {

using Stencil = std::vector<std::pair<int, double>>;

/// Psi_R^{-1} on a signed coordinate; +-inf once |x| reaches R+1.
inline double mapped(const EndCompression& psi, double x)
{
    if (std::abs(x) >= psi.R + 1.0) return std::copysign(std::numeric_limits<double>::infinity(), x);
    return psi.signed_map(x);
}

/// Linear interpolation weights of the vertex lattice at y. Vertices that
/// are not in the layout (relative ends, beyond +-L) carry the value 0.
inline void vertex_stencil(const AxisLayout& a, double y, Stencil& out)
{
    out.clear();
    if (!std::isfinite(y)) return;
    const double t = (y - a.origin) / a.spacing;
    if (t < 0.0 || t > a.subdivisions) return;
    int i0 = static_cast<int>(std::floor(t));
    double fr = t - i0;
    if (i0 == a.subdivisions) {
        --i0;
        fr = 1.0;
    }
    auto push = [&](int node, double wt) {
        if (wt == 0.0) return;
        const int v = a.relative ? node - 1 : node;
        if (v >= 0 && v < a.vertex_count()) out.emplace_back(v, wt);
    };
    push(i0, 1.0 - fr);
    push(i0 + 1, fr);
}

/// Fraction of each edge covered by [ya, yb]: the integral of the piecewise
/// constant density over the mapped interval, in units of edge values.
inline void edge_stencil(const AxisLayout& a, double ya, double yb, Stencil& out)
{
    out.clear();
    const double lo = a.origin, hi = a.origin + a.subdivisions * a.spacing;
    ya = std::max(ya, lo);
    yb = std::min(yb, hi);
    if (!(yb > ya)) return;
    const int e0 = std::max(0, static_cast<int>(std::floor((ya - lo) / a.spacing)));
    const int e1 = std::min(a.subdivisions - 1, static_cast<int>(std::ceil((yb - lo) / a.spacing)) - 1);
    for (int e = e0; e <= e1; ++e) {
        const double l = lo + e * a.spacing;
        const double cover = (std::min(yb, l + a.spacing) - std::max(ya, l)) / a.spacing;
        if (cover > 0.0) out.emplace_back(e, cover);
    }
}

} // namespace detail

/// The pullback (Psi_R^{-1})^* w, extended by zero. w is reconstructed as a
/// cubical Whitney form (linear along vertex directions, constant along
/// edge directions) and integrated over the image of every cell, so the
/// result is an exact cochain map: D wbar = (D w)bar. Since Psi_R^{-1}
/// sends |x| -> R+1 to infinity, cells beyond R+1 receive 0. Circle axes
/// are not compressed.
inline DiscreteForm extend_by_zero(const CochainComplex& k, const DiscreteForm& w, double R)
{
    const int n = k.dimension();
    const int p = w.degree;
    k.check_degree(p);
    if (w.size() != k.cell_count(p)) throw DegreeError("form length does not match the complex");
    std::vector<int> lines;
    for (int j = 0; j < n; ++j)
        if (k.manifold().factor(j).is_line()) {
            lines.push_back(j);
            if (R + 1.0 >= k.manifold().factor(j).extent)
                throw TruncationConflictError("R + 1 = " + std::to_string(R + 1.0) +
                                              " must stay below the truncation L = " +
                                              std::to_string(k.manifold().factor(j).extent));
        }
    const EndCompression psi(R);
    DiscreteForm out(p, Eigen::VectorXd::Zero(w.size()));
    if (lines.empty()) {
        out.values = w.values;
        return out;
    }
    const std::size_t m = lines.size();
    std::vector<detail::Stencil> wts(m);
    std::vector<int> pos(static_cast<std::size_t>(n)), src(static_cast<std::size_t>(n));
    for (const auto& b : k.blocks(p)) {
        std::fill(pos.begin(), pos.end(), 0);
        for (Index t = 0; t < b.size; ++t) {
            const Index row = b.offset + t;
            bool identity = true, empty = false;
            for (std::size_t a = 0; a < m && !empty; ++a) {
                const int j = lines[a];
                const AxisLayout& ax = k.axis(j);
                if (pattern_has(b.pattern, j)) {
                    const double xa = ax.origin + pos[j] * ax.spacing, xb = xa + ax.spacing;
                    if (std::max(std::abs(xa), std::abs(xb)) <= R) {
                        wts[a].assign(1, {pos[j], 1.0});
                        continue;
                    }
                    detail::edge_stencil(ax, detail::mapped(psi, xa), detail::mapped(psi, xb), wts[a]);
                } else {
                    const double x = ax.vertex_coord(pos[j]);
                    if (std::abs(x) <= R) {
                        wts[a].assign(1, {pos[j], 1.0});
                        continue;
                    }
                    detail::vertex_stencil(ax, detail::mapped(psi, x), wts[a]);
                }
                identity = false;
                empty = wts[a].empty();
            }
            if (identity) {
                out.values[row] = w.values[row];
            } else if (!empty) {
                // sum over the tensor product of per-axis stencils
                double acc = 0.0;
                src = pos;
                std::vector<std::size_t> ctr(m, 0);
                while (true) {
                    double wt = 1.0;
                    for (std::size_t a = 0; a < m; ++a) {
                        src[lines[a]] = wts[a][ctr[a]].first;
                        wt *= wts[a][ctr[a]].second;
                    }
                    acc += wt * w.values[k.flat_index(p, b.pattern, src.data())];
                    std::size_t a = 0;
                    for (; a < m; ++a) {
                        if (++ctr[a] < wts[a].size()) break;
                        ctr[a] = 0;
                    }
                    if (a == m) break;
                }
                out.values[row] = acc;
            }
            for (int j = n - 1; j >= 0; --j) {
                if (++pos[j] < b.extent[j]) break;
                pos[j] = 0;
            }
        }
    }
    return out;
}

/// Pi(nu) = sum_j <nu, w^j>_mu w^j
inline DiscreteForm project_kernel(const CochainComplex& k, const DiscreteForm& nu, const KernelBasis& kb)
{
    if (nu.degree != kb.degree)
        throw DegreeError("projecting a " + std::to_string(nu.degree) + "-form onto a degree-" +
                          std::to_string(kb.degree) + " kernel");
    Eigen::VectorXd out = Eigen::VectorXd::Zero(nu.size());
    for (int j = 0; j < kb.size(); ++j) out += inner_mu(k, nu.degree, nu.values, kb.forms.col(j)) * kb.forms.col(j);
    return DiscreteForm(nu.degree, out);
}

struct PairingMatrix {
    Eigen::MatrixXd A;          ///< A_ij = <wbar^i, w^j>_mu
    int size = 0;
    double max_diagonal_deviation = 0.0;
    double max_off_diagonal = 0.0;
    double epsilon = 0.0;       ///< 1/N
    double margin = 0.0;        ///< max of the two deviations
    bool invertible = false;    ///< margin < epsilon
};

inline PairingMatrix pairing_matrix(const CochainComplex& k, const KernelBasis& kb, double R,
                                    std::vector<DiscreteForm>* extended = nullptr)
{
    PairingMatrix pm;
    pm.size = kb.size();
    pm.A = Eigen::MatrixXd::Zero(pm.size, pm.size);
    std::vector<DiscreteForm> bars;
    for (int i = 0; i < pm.size; ++i) bars.push_back(extend_by_zero(k, DiscreteForm(kb.degree, kb.forms.col(i)), R));
    for (int i = 0; i < pm.size; ++i)
        for (int j = 0; j < pm.size; ++j) pm.A(i, j) = inner_mu(k, kb.degree, bars[i].values, kb.forms.col(j));
    for (int i = 0; i < pm.size; ++i)
        for (int j = 0; j < pm.size; ++j) {
            if (i == j)
                pm.max_diagonal_deviation = std::max(pm.max_diagonal_deviation, std::abs(pm.A(i, i) - 1.0));
            else
                pm.max_off_diagonal = std::max(pm.max_off_diagonal, std::abs(pm.A(i, j)));
        }
    pm.epsilon = pm.size ? 1.0 / pm.size : 0.0;
    pm.margin = std::max(pm.max_diagonal_deviation, pm.max_off_diagonal);
    pm.invertible = pm.size > 0 && pm.margin < pm.epsilon;
    if (extended) *extended = std::move(bars);
    return pm;
}

/// Integrals of a p-form against the closed (n-p)-forms d theta_S, S a set
/// of circle axes with |S| = n - p; the components involved are those
/// whose direction set is the complement of S.
inline Eigen::MatrixXd integration_pairings(const CochainComplex& k, const std::vector<DiscreteForm>& forms)
{
    const int n = k.dimension();
    if (forms.empty()) return Eigen::MatrixXd(0, 0);
    const int p = forms.front().degree;
    const Pattern full = (1u << n) - 1u;
    std::vector<Pattern> duals;
    for (Pattern S : direction_patterns(n, n - p)) {
        bool circles = true;
        for (int j = 0; j < n; ++j)
            if (pattern_has(S, j) && !k.manifold().factor(j).is_circle()) circles = false;
        if (circles) duals.push_back(S);
    }
    Eigen::MatrixXd P = Eigen::MatrixXd::Zero(static_cast<Index>(forms.size()), static_cast<Index>(duals.size()));
    for (std::size_t c = 0; c < duals.size(); ++c) {
        const Pattern I = full & ~duals[c];
        int b = k.block_of(p, I);
        if (b < 0) continue;
        const auto& blk = k.blocks(p)[static_cast<std::size_t>(b)];
        double dual_len = 1.0;
        for (int j = 0; j < n; ++j)
            if (pattern_has(duals[c], j)) dual_len *= k.axis(j).spacing;
        const int sign = shuffle_sign(I, n);
        for (std::size_t i = 0; i < forms.size(); ++i)
            P(static_cast<Index>(i), static_cast<Index>(c)) =
                sign * dual_len * forms[i].values.segment(blk.offset, blk.size).sum();
    }
    return P;
}

inline int numerical_rank(const Eigen::MatrixXd& P, double rel_tol = 1e-8)
{
    if (P.size() == 0) return 0;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(P);
    const auto& sv = svd.singularValues();
    if (sv.size() == 0 || sv[0] == 0.0) return 0;
    int r = 0;
    for (Index i = 0; i < sv.size(); ++i)
        if (sv[i] > rel_tol * sv[0]) ++r;
    return r;
}

struct SurjectivityReport {
    double R = 0.0;
    int kernel_count = 0;
    PairingMatrix pairing;
    double max_projection_error = 0.0;  ///< max_i |Pi(nu_i) - w^i|_mu
    double max_tail_ratio = 0.0;        ///< max_i |wbar^i - w^i|^2 / int_{|s|>R} |w^i|^2 dmu
    std::vector<double> tail_ratios;
    int j_rank = 0;
    double sup_blend_derivative = 0.0;
    bool certified = false;
    std::string message;
};

/// mu-mass of a form outside the core |x_j| <= R (any line axis).
inline double tail_mass(const CochainComplex& k, int p, const Eigen::VectorXd& w, double R)
{
    const int n = k.dimension();
    const Eigen::VectorXd& m = k.dx_mass(p);
    const Eigen::VectorXd& h = k.h_values(p);
    double s = 0.0;
    for (Index i = 0; i < w.size(); ++i) {
        CellIndex c = k.cell(p, i);
        bool tail = false;
        for (int j = 0; j < n; ++j)
            if (k.manifold().factor(j).is_line() && std::abs(k.axis(j).coord(c.extends(j), c.position[j])) > R)
                tail = true;
        if (tail) {
            const double v = scale_by_exp(w[i], h[i]);
            s += m[i] * v * v;
        }
    }
    return s;
}

inline SurjectivityReport surjectivity_certificate(const CochainComplex& k, const KernelBasis& kb, double R,
                                                   double tol = 1e-6)
{
    SurjectivityReport rep;
    rep.R = R;
    rep.kernel_count = kb.size();
    rep.sup_blend_derivative = EndCompression(R).sup_blend_derivative();
    std::vector<DiscreteForm> bars;
    rep.pairing = pairing_matrix(k, kb, R, &bars);
    if (kb.size() == 0) {
        rep.certified = true;
        rep.message = "empty kernel";
        return rep;
    }
    if (!rep.pairing.invertible) {
        rep.message = "pairing matrix margin " + std::to_string(rep.pairing.margin) + " >= 1/N = " +
                      std::to_string(rep.pairing.epsilon) + "; choose a larger R";
        return rep;
    }
    const int p = kb.degree;
    const Eigen::MatrixXd Ainv = rep.pairing.A.inverse();
    for (int i = 0; i < kb.size(); ++i) {
        Eigen::VectorXd nu = Eigen::VectorXd::Zero(kb.forms.rows());
        for (int j = 0; j < kb.size(); ++j) nu += Ainv(i, j) * bars[static_cast<std::size_t>(j)].values;
        DiscreteForm pi = project_kernel(k, DiscreteForm(p, nu), kb);
        rep.max_projection_error =
            std::max(rep.max_projection_error, norm_mu(k, p, pi.values - kb.forms.col(i)));

        Eigen::VectorXd diff = bars[static_cast<std::size_t>(i)].values - kb.forms.col(i);
        const double lhs = inner_mu(k, p, diff, diff);
        const double rhs = tail_mass(k, p, kb.forms.col(i), R);
        const double ratio = rhs > 0 ? lhs / rhs : (lhs > 0 ? std::numeric_limits<double>::infinity() : 0.0);
        rep.tail_ratios.push_back(ratio);
        rep.max_tail_ratio = std::max(rep.max_tail_ratio, ratio);
    }
    rep.j_rank = numerical_rank(integration_pairings(k, bars));
    rep.certified = rep.max_projection_error < tol && rep.max_tail_ratio <= 36.0 && rep.j_rank == kb.size();
    if (!rep.certified) rep.message = "surjectivity certificate failed";
    return rep;
}

struct CollarReport {
    double width = 0.0;
    double max_value = 0.0;       ///< sup of |component| of wbar in the collar
    double max_difference = 0.0;  ///< sup of first differences of components in the collar
};

/// Components of wbar and their first differences along line axes in the
/// collar R+1-width <= |x_j| < R+1: the discrete shadow of a smooth
/// extension by zero.
inline CollarReport collar_profile(const CochainComplex& k, const DiscreteForm& wbar, double R, double width)
{
    const int n = k.dimension();
    const int p = wbar.degree;
    const Eigen::VectorXd& vol = k.primal_volume(p);
    CollarReport rep;
    rep.width = width;
    std::vector<int> nb(static_cast<std::size_t>(n));
    for (Index i = 0; i < wbar.size(); ++i) {
        CellIndex c = k.cell(p, i);
        for (int j = 0; j < n; ++j) {
            if (!k.manifold().factor(j).is_line()) continue;
            const double s = std::abs(k.axis(j).coord(c.extends(j), c.position[j]));
            if (s < R + 1.0 - width || s >= R + 1.0) continue;
            const double v = wbar.values[i] / vol[i];
            rep.max_value = std::max(rep.max_value, std::abs(v));
            nb = c.position;
            nb[j] += 1;
            Index f = k.flat_index(p, c.pattern, nb.data());
            if (f >= 0) rep.max_difference = std::max(rep.max_difference, std::abs(wbar.values[f] / vol[f] - v));
        }
    }
    return rep;
}

} // namespace hodgelab
