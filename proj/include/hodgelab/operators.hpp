#pragma once

// Discrete exterior calculus on a CochainComplex: mass matrices, the
// weighted codifferential, the weighted Laplacian, its unitarily
// equivalent Schroedinger form (two independent assemblies) and the
// Hodge star onto the staggered dual complex.

#include <hodgelab/complex.hpp>

#include <Eigen/SparseCore>

#include <cmath>
#include <random>
#include <string>

namespace hodgelab {

enum class Measure { mu, dx };

/// Diagonal of M_p for the weighted (mu) or flat (dx) measure.
inline Eigen::VectorXd assemble_mass(const CochainComplex& k, int p, Measure measure)
{
    const Eigen::VectorXd& m = k.dx_mass(p);
    if (measure == Measure::dx) return m;
    const Eigen::VectorXd& h = k.h_values(p);
    Eigen::VectorXd out(m.size());
    for (Index i = 0; i < m.size(); ++i) out[i] = scale_by_exp(m[i], 2.0 * h[i]);
    return out;
}

/// log of the mass diagonal; finite even where the mass itself overflows.
inline Eigen::VectorXd log_mass(const CochainComplex& k, int p, Measure measure)
{
    Eigen::VectorXd out = k.dx_mass(p).array().log();
    if (measure == Measure::mu) out += 2.0 * k.h_values(p);
    return out;
}

inline IntSpMat assemble_coboundary(const CochainComplex& k, int p)
{
    return k.coboundary(p);
}

/// <a, b>_mu computed as sum m_dx (e^h a)(e^h b).
inline double inner_mu(const CochainComplex& k, int p, const Eigen::VectorXd& a, const Eigen::VectorXd& b)
{
    const Eigen::VectorXd& m = k.dx_mass(p);
    const Eigen::VectorXd& h = k.h_values(p);
    double s = 0.0;
    for (Index i = 0; i < m.size(); ++i) s += m[i] * scale_by_exp(a[i], h[i]) * scale_by_exp(b[i], h[i]);
    return s;
}

inline double inner_dx(const CochainComplex& k, int p, const Eigen::VectorXd& a, const Eigen::VectorXd& b)
{
    return (k.dx_mass(p).array() * a.array() * b.array()).sum();
}

inline double norm_mu(const CochainComplex& k, int p, const Eigen::VectorXd& a)
{
    return std::sqrt(std::max(0.0, inner_mu(k, p, a, a)));
}

inline double norm_dx(const CochainComplex& k, int p, const Eigen::VectorXd& a)
{
    return std::sqrt(std::max(0.0, inner_dx(k, p, a, a)));
}

/// U: multiply each coefficient by e^{h(barycenter)} (mu picture -> h picture).
inline Eigen::VectorXd to_h_picture(const CochainComplex& k, int p, const Eigen::VectorXd& v)
{
    const Eigen::VectorXd& h = k.h_values(p);
    Eigen::VectorXd out(v.size());
    for (Index i = 0; i < v.size(); ++i) out[i] = scale_by_exp(v[i], h[i]);
    return out;
}

inline Eigen::VectorXd to_mu_picture(const CochainComplex& k, int p, const Eigen::VectorXd& v)
{
    const Eigen::VectorXd& h = k.h_values(p);
    Eigen::VectorXd out(v.size());
    for (Index i = 0; i < v.size(); ++i) out[i] = scale_by_exp(v[i], -h[i]);
    return out;
}

enum class MetricKind { none, mu, dx };

/// A sparse linear map between cochain spaces. Laplacians additionally
/// record the diagonal metric (as logs) they are symmetric with respect to.
struct OperatorHandle {
    int from_degree = 0;
    int to_degree = 0;
    SpMat action;
    MetricKind metric = MetricKind::none;
    Eigen::VectorXd log_metric;
    std::string name;

    Index dimension() const { return action.cols(); }

    DiscreteForm apply(const DiscreteForm& w) const
    {
        if (w.degree != from_degree)
            throw DegreeError(name + " expects a " + std::to_string(from_degree) + "-form, got degree " +
                              std::to_string(w.degree));
        return DiscreteForm(to_degree, action * w.values);
    }

    /// M^{1/2} A M^{-1/2}, symmetric whenever A is symmetric w.r.t. M.
    SpMat symmetrized() const
    {
        if (metric == MetricKind::none || from_degree != to_degree)
            throw DegreeError("symmetrized() requires a metric-symmetric endomorphism");
        SpMat out = action;
        for (Index col = 0; col < out.outerSize(); ++col)
            for (SpMat::InnerIterator it(out, col); it; ++it)
                it.valueRef() *= std::exp(0.5 * (log_metric[it.row()] - log_metric[it.col()]));
        SpMat t = out.transpose();
        out = 0.5 * (out + t);
        return out;
    }

    double metric_inner(const Eigen::VectorXd& a, const Eigen::VectorXd& b) const
    {
        double s = 0.0;
        for (Index i = 0; i < a.size(); ++i) {
            double lh = 0.5 * log_metric[i];
            s += scale_by_exp(a[i], lh) * scale_by_exp(b[i], lh);
        }
        return s;
    }

    /// max |<Aa,b> - <a,Ab>| / (|A a||b| + |a||A b|) over random probes.
    double symmetry_defect(int probes = 8, std::uint64_t seed = 7) const
    {
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> nd;
        double worst = 0.0;
        const Index n = dimension();
        for (int t = 0; t < probes; ++t) {
            Eigen::VectorXd a(n), b(n);
            for (Index i = 0; i < n; ++i) a[i] = nd(rng);
            for (Index i = 0; i < n; ++i) b[i] = nd(rng);
            // draw probes in the metric-normalised picture
            for (Index i = 0; i < n; ++i) {
                a[i] = scale_by_exp(a[i], -0.5 * log_metric[i]);
                b[i] = scale_by_exp(b[i], -0.5 * log_metric[i]);
            }
            Eigen::VectorXd Aa = action * a, Ab = action * b;
            double lhs = metric_inner(Aa, b), rhs = metric_inner(a, Ab);
            double scale = std::sqrt(metric_inner(Aa, Aa) * metric_inner(b, b)) +
                           std::sqrt(metric_inner(a, a) * metric_inner(Ab, Ab));
            if (scale > 0) worst = std::max(worst, std::abs(lhs - rhs) / scale);
        }
        return worst;
    }
};

namespace detail {

inline double checked_exp(double x)
{
    if (x > 700.0)
        throw WeightOverflowError("weight ratio e^" + std::to_string(x) +
                                  " between neighbouring cells overflows; refine the grid");
    return std::exp(x);
}

inline SpMat to_double(const IntSpMat& D)
{
    return D.cast<double>();
}

/// Drop entries that cancel to round-off relative to the diagonal scale.
inline void prune_cancellations(SpMat& A)
{
    Eigen::VectorXd d = A.diagonal().cwiseAbs();
    A.prune([&](Index r, Index c, double v) {
        if (r == c) return true;
        return std::abs(v) > 1e-12 * std::sqrt(d[r] * d[c]);
    });
    A.makeCompressed();
}

/// Symmetric form of the Laplacian in the dx metric for weight values h:
///   A = F F^T + G^T G,
///   F_{a rho} = D_{p-1}(a, rho) m_a / sqrt(m_rho) e^{h_a - h_rho},
///   G_{tau a} = D_p(tau, a) sqrt(m_tau) e^{h_tau - h_a}.
/// With h = 0 this is the unweighted Laplacian; otherwise it equals
/// U^{-1} M_mu Delta_mu U^{-1}.
inline SpMat laplacian_form(const CochainComplex& k, int p, bool weighted)
{
    k.check_degree(p);
    const int n = k.dimension();
    const Index np = k.cell_count(p);
    const Eigen::VectorXd& m = k.dx_mass(p);
    const Eigen::VectorXd hp = weighted ? k.h_values(p) : Eigen::VectorXd::Zero(np);
    SpMat A(np, np);
    if (p > 0) {
        const IntSpMat& D = k.coboundary(p - 1);
        const Eigen::VectorXd& mr = k.dx_mass(p - 1);
        const Eigen::VectorXd hr = weighted ? k.h_values(p - 1) : Eigen::VectorXd::Zero(mr.size());
        SpMat F = to_double(D);
        for (Index col = 0; col < F.outerSize(); ++col)
            for (SpMat::InnerIterator it(F, col); it; ++it)
                it.valueRef() *= m[it.row()] / std::sqrt(mr[col]) * checked_exp(hp[it.row()] - hr[col]);
        A = F * SpMat(F.transpose());
    }
    if (p < n) {
        const IntSpMat& D = k.coboundary(p);
        const Eigen::VectorXd& mt = k.dx_mass(p + 1);
        const Eigen::VectorXd ht = weighted ? k.h_values(p + 1) : Eigen::VectorXd::Zero(mt.size());
        SpMat G = to_double(D);
        for (Index col = 0; col < G.outerSize(); ++col)
            for (SpMat::InnerIterator it(G, col); it; ++it)
                it.valueRef() *= std::sqrt(mt[it.row()]) * checked_exp(ht[it.row()] - hp[col]);
        SpMat GtG = SpMat(G.transpose()) * G;
        A = (p > 0) ? SpMat(A + GtG) : GtG;
    }
    prune_cancellations(A);
    return A;
}

inline SpMat left_scale(SpMat A, const Eigen::VectorXd& s)
{
    for (Index col = 0; col < A.outerSize(); ++col)
        for (SpMat::InnerIterator it(A, col); it; ++it) it.valueRef() *= s[it.row()];
    return A;
}

} // namespace detail

/// D_p as a floating-point operator C^p -> C^{p+1}.
inline OperatorHandle coboundary_operator(const CochainComplex& k, int p)
{
    OperatorHandle op;
    op.from_degree = p;
    op.to_degree = p + 1;
    op.action = detail::to_double(k.coboundary(p));
    op.name = "d" + std::to_string(p);
    return op;
}

/// delta_mu^p = (M_{p-1}^mu)^{-1} D_{p-1}^T M_p^mu : C^p -> C^{p-1}; zero map for p = 0.
inline OperatorHandle codifferential_mu(const CochainComplex& k, int p)
{
    k.check_degree(p);
    OperatorHandle op;
    op.from_degree = p;
    op.to_degree = p > 0 ? p - 1 : 0;
    op.name = "delta_mu" + std::to_string(p);
    if (p == 0) {
        op.action.resize(k.cell_count(0), k.cell_count(0));
        return op;
    }
    const Eigen::VectorXd& m = k.dx_mass(p);
    const Eigen::VectorXd& mr = k.dx_mass(p - 1);
    const Eigen::VectorXd& h = k.h_values(p);
    const Eigen::VectorXd& hr = k.h_values(p - 1);
    SpMat Dt = SpMat(detail::to_double(k.coboundary(p - 1)).transpose());
    for (Index col = 0; col < Dt.outerSize(); ++col)
        for (SpMat::InnerIterator it(Dt, col); it; ++it)
            it.valueRef() *= m[col] / mr[it.row()] * detail::checked_exp(2.0 * (h[col] - hr[it.row()]));
    op.action = std::move(Dt);
    return op;
}

/// Delta_mu = D delta_mu + delta_mu D on p-forms, symmetric w.r.t. M_p^mu.
inline OperatorHandle laplacian_mu(const CochainComplex& k, int p)
{
    SpMat A = detail::laplacian_form(k, p, true);
    const Eigen::VectorXd& m = k.dx_mass(p);
    const Eigen::VectorXd& h = k.h_values(p);
    // Delta_mu = U^{-1} M_dx^{-1} A U, entry (a,b) scaled by e^{h_b - h_a} / m_a
    for (Index col = 0; col < A.outerSize(); ++col)
        for (SpMat::InnerIterator it(A, col); it; ++it)
            it.valueRef() *= detail::checked_exp(h[col] - h[it.row()]) / m[it.row()];
    OperatorHandle op;
    op.from_degree = op.to_degree = p;
    op.action = std::move(A);
    op.metric = MetricKind::mu;
    op.log_metric = log_mass(k, p, Measure::mu);
    op.name = "laplacian_mu" + std::to_string(p);
    return op;
}

/// Delta_h = U Delta_mu U^{-1}, assembled directly in the flat picture.
inline OperatorHandle conjugate_to_h(const CochainComplex& k, int p)
{
    SpMat A = detail::laplacian_form(k, p, true);
    OperatorHandle op;
    op.from_degree = op.to_degree = p;
    op.action = detail::left_scale(std::move(A), k.dx_mass(p).cwiseInverse());
    op.metric = MetricKind::dx;
    op.log_metric = log_mass(k, p, Measure::dx);
    op.name = "laplacian_h" + std::to_string(p);
    return op;
}

/// Unweighted Hodge Laplacian of the complex (h = 0).
inline OperatorHandle laplacian_dx(const CochainComplex& k, int p)
{
    SpMat A = detail::laplacian_form(k, p, false);
    OperatorHandle op;
    op.from_degree = op.to_degree = p;
    op.action = detail::left_scale(std::move(A), k.dx_mass(p).cwiseInverse());
    op.metric = MetricKind::dx;
    op.log_metric = log_mass(k, p, Measure::dx);
    op.name = "laplacian" + std::to_string(p);
    return op;
}

/// Zero-order term of the flat Weitzenboeck formula for h = sum (c_j/2) x_j^2:
///   V = |dh|^2 + sum_j c_j eps_j(I),  eps_j = -1 if j in I else +1.
/// On R^n with all c_j = 1 the constant part is n - 2p.
inline Eigen::VectorXd weitzenbock_potential(const CochainComplex& k, int p)
{
    const Index np = k.cell_count(p);
    const auto& c = k.weight().exponents();
    Eigen::VectorXd V(np);
    for (const auto& b : k.blocks(p)) {
        double constant = 0.0;
        for (int j = 0; j < k.dimension(); ++j) constant += pattern_has(b.pattern, j) ? -c[j] : c[j];
        for (Index t = 0; t < b.size; ++t) {
            auto x = k.barycenter(p, b.offset + t);
            V[b.offset + t] = k.weight().grad_h_squared(x) + constant;
        }
    }
    return V;
}

/// Delta_h = Delta + |dh|^2 + A_h assembled from the flat Laplacian plus the
/// diagonal potential (flat factors, quadratic h only).
inline OperatorHandle laplacian_h_direct(const CochainComplex& k, int p)
{
    for (int j = 0; j < k.dimension(); ++j)
        if (k.manifold().factor(j).is_circle() && k.manifold().factor(j).c != 0.0)
            throw UnsupportedWeightError("direct assembly supports quadratic weights on line factors only");
    OperatorHandle op = laplacian_dx(k, p);
    Eigen::VectorXd V = weitzenbock_potential(k, p);
    SpMat Vd(V.size(), V.size());
    Vd.reserve(Eigen::VectorXi::Constant(V.size(), 1));
    for (Index i = 0; i < V.size(); ++i) Vd.insert(i, i) = V[i];
    op.action = op.action + Vd;
    op.name = "laplacian_h_direct" + std::to_string(p);
    return op;
}

/// The staggered dual model: each line Line(c, L, N) becomes
/// Line(-c, L +- spacing/2, N +- 1) so that its edges are centred on the
/// primal vertices and vice versa; circles shift by half a spacing. The
/// boundary mode flips (absolute <-> relative).
struct DualModel {
    ManifoldSpec manifold;
    BoundaryMode mode;
};

inline DualModel dual_model(const ManifoldSpec& m, BoundaryMode mode)
{
    std::vector<FactorSpec> fs;
    for (const auto& f : m.factors()) {
        const double h = f.spacing();
        if (f.is_line()) {
            if (mode == BoundaryMode::absolute)
                fs.push_back(FactorSpec::line(-f.c, f.extent + 0.5 * h, f.subdivisions + 1));
            else
                fs.push_back(FactorSpec::line(-f.c, f.extent - 0.5 * h, f.subdivisions - 1));
        } else {
            fs.push_back(FactorSpec::circle(f.extent, f.subdivisions, f.offset - 0.5 * h));
        }
    }
    BoundaryMode dm = mode == BoundaryMode::absolute ? BoundaryMode::relative : BoundaryMode::absolute;
    return {ManifoldSpec(std::move(fs)), dm};
}

/// Hodge star between a complex and its staggered dual. A cell with
/// direction set I maps to the dual cell with the same barycenter and
/// direction set I^c; the component value is preserved up to the shuffle
/// sign of (I, I^c).
class HodgeStar {
public:
    explicit HodgeStar(const CochainComplex& primal)
        : primal_(primal), dual_(make_dual(primal)) {}

    const CochainComplex& primal() const { return primal_; }
    const CochainComplex& dual() const { return dual_; }

    /// primal p-form -> dual (n-p)-form
    DiscreteForm apply(const DiscreteForm& w) const { return map(primal_, dual_, w, true); }

    /// dual q-form -> primal (n-q)-form
    DiscreteForm apply_dual(const DiscreteForm& w) const { return map(dual_, primal_, w, false); }

    /// Density-corrected star e^{2h} * star, an isometry from L^2_mu on the
    /// primal complex onto L^2 of the reciprocal measure on the dual.
    DiscreteForm apply_mu(const DiscreteForm& w) const
    {
        DiscreteForm out = apply(w);
        const Eigen::VectorXd& hd = dual_.h_values(out.degree);
        for (Index i = 0; i < out.size(); ++i) out.values[i] = scale_by_exp(out.values[i], -2.0 * hd[i]);
        return out;
    }

private:
    static CochainComplex make_dual(const CochainComplex& k)
    {
        DualModel d = dual_model(k.manifold(), k.mode());
        return CochainComplex(d.manifold, d.mode);
    }

    DiscreteForm map(const CochainComplex& from, const CochainComplex& to, const DiscreteForm& w,
                     bool forward) const
    {
        const int n = from.dimension();
        from.check_degree(w.degree);
        if (w.size() != from.cell_count(w.degree))
            throw DegreeError("form length does not match the complex");
        const int q = n - w.degree;
        DiscreteForm out(q, Eigen::VectorXd::Zero(to.cell_count(q)));
        const Pattern full = (n == 32) ? ~0u : ((1u << n) - 1u);
        std::vector<int> pos(static_cast<std::size_t>(n)), tpos(static_cast<std::size_t>(n));
        for (const auto& b : from.blocks(w.degree)) {
            const Pattern J = full & ~b.pattern;
            const int sign = shuffle_sign(b.pattern, n);
            double scale = 1.0;
            for (int j = 0; j < n; ++j) {
                double h = from.axis(j).spacing;
                scale *= pattern_has(b.pattern, j) ? 1.0 / h : h;
            }
            std::fill(pos.begin(), pos.end(), 0);
            for (Index t = 0; t < b.size; ++t) {
                for (int j = 0; j < n; ++j) {
                    tpos[j] = pos[j];
                    const AxisLayout& a = from.axis(j);
                    if (a.periodic) {
                        const int N = a.subdivisions;
                        bool edge = pattern_has(b.pattern, j);
                        // forward: primal edge e -> dual vertex e+1; backward: dual vertex v -> primal edge v-1
                        if (forward && edge) tpos[j] = (pos[j] + 1) % N;
                        if (!forward && !edge) tpos[j] = (pos[j] + N - 1) % N;
                    }
                }
                Index dst = to.flat_index(q, J, tpos.data());
                if (dst < 0) throw DegreeError("hodge star: cell has no dual partner");
                out.values[dst] = sign * scale * w.values[b.offset + t];
                for (int j = n - 1; j >= 0; --j) {
                    if (++pos[j] < b.extent[j]) break;
                    pos[j] = 0;
                }
            }
        }
        return out;
    }

    CochainComplex primal_;
    CochainComplex dual_;
};

} // namespace hodgelab
