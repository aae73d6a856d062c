#pragma once

// Low spectrum of metric-symmetric Laplacians, kernel classification with a
// spectral-gap certificate, and the smooth Hodge decomposition.
//
// The generalized problem A x = lambda M x (M diagonal) is solved in the
// symmetrized form B = M^{1/2} A M^{-1/2}. The sparsity graph of B is split
// into connected components; small components go to a dense solver, large
// ones to LOBPCG preconditioned by a shifted sparse Cholesky factor.

#include <hodgelab/operators.hpp>

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>
#ifdef HODGELAB_HAVE_CHOLMOD
#include <Eigen/CholmodSupport>
#endif

#include <algorithm>
#include <limits>
#include <memory>
#include <numeric>
#include <queue>
#include <random>

namespace hodgelab {

enum class SolverRoute { automatic, dense, iterative };

struct EigenSolveConfig {
    int k = 6;                      ///< eigenpairs requested
    double tolerance = 1e-8;        ///< residual bound |A w - lambda w|_M for unit w
    int max_iterations = 400;
    double tau_abs = 0.0;           ///< zero threshold; 0 selects 1e-8 * max diagonal
    double tau_gap = 1e3;           ///< required ratio across the gap
    std::uint64_t seed = 20240501;
    Index dense_limit = 4000;
    SolverRoute route = SolverRoute::automatic;
    double shift = 0.0;             ///< preconditioner shift; 0 selects 1e-4 * max diagonal

    void validate() const
    {
        if (k < 1) throw InvalidSpecError("eigen solve needs k >= 1");
        if (!(tolerance > 0.0)) throw InvalidSpecError("solver tolerance must be positive");
        if (tau_abs < 0.0) throw InvalidSpecError("tau_abs must be positive (or 0 for the default)");
        if (!(tau_gap > 1.0)) throw InvalidSpecError("tau_gap must exceed 1");
        if (max_iterations < 1) throw InvalidSpecError("max_iterations must be >= 1");
    }
};

struct Spectrum {
    int degree = 0;
    std::vector<double> values;     ///< ascending
    Eigen::MatrixXd forms;          ///< columns: M-orthonormal eigen-cochains
    std::vector<double> residuals;  ///< |A w_i - lambda_i w_i|_M
    Eigen::VectorXd log_metric;
    MetricKind metric = MetricKind::none;
    double max_diagonal = 0.0;      ///< largest diagonal entry of B
    std::string route;
    int iterations = 0;

    int size() const { return static_cast<int>(values.size()); }
    DiscreteForm form(int i) const { return DiscreteForm(degree, forms.col(i)); }

    double inner(const Eigen::VectorXd& a, const Eigen::VectorXd& b) const
    {
        double s = 0.0;
        for (Index i = 0; i < a.size(); ++i) {
            double lh = 0.5 * log_metric[i];
            s += scale_by_exp(a[i], lh) * scale_by_exp(b[i], lh);
        }
        return s;
    }

    /// max |<w_i, w_j>_M - delta_ij|
    double orthonormality_defect() const
    {
        double worst = 0.0;
        for (int i = 0; i < size(); ++i)
            for (int j = 0; j <= i; ++j)
                worst = std::max(worst, std::abs(inner(forms.col(i), forms.col(j)) - (i == j ? 1.0 : 0.0)));
        return worst;
    }
};

namespace detail {

/// Connected components of the sparsity graph of a symmetric matrix.
inline std::vector<std::vector<Index>> connected_components(const SpMat& B)
{
    const Index n = B.rows();
    std::vector<int> comp(static_cast<std::size_t>(n), -1);
    std::vector<std::vector<Index>> out;
    for (Index s = 0; s < n; ++s) {
        if (comp[s] >= 0) continue;
        const int id = static_cast<int>(out.size());
        out.emplace_back();
        std::vector<Index> stack{s};
        comp[s] = id;
        while (!stack.empty()) {
            Index v = stack.back();
            stack.pop_back();
            out[id].push_back(v);
            for (SpMat::InnerIterator it(B, v); it; ++it)
                if (comp[it.row()] < 0) {
                    comp[it.row()] = id;
                    stack.push_back(it.row());
                }
        }
        std::sort(out[id].begin(), out[id].end());
    }
    return out;
}

inline SpMat submatrix(const SpMat& B, const std::vector<Index>& idx)
{
    std::vector<Index> local(static_cast<std::size_t>(B.rows()), -1);
    for (std::size_t i = 0; i < idx.size(); ++i) local[idx[i]] = static_cast<Index>(i);
    std::vector<Eigen::Triplet<double>> t;
    for (std::size_t c = 0; c < idx.size(); ++c)
        for (SpMat::InnerIterator it(B, idx[c]); it; ++it)
            if (local[it.row()] >= 0) t.emplace_back(local[it.row()], static_cast<Index>(c), it.value());
    SpMat S(static_cast<Index>(idx.size()), static_cast<Index>(idx.size()));
    S.setFromTriplets(t.begin(), t.end());
    return S;
}

struct Eigenpairs {
    Eigen::VectorXd values;
    Eigen::MatrixXd vectors;
    int iterations = 0;
};

inline Eigenpairs dense_eigenpairs(const SpMat& B, int k)
{
    Eigen::MatrixXd Bd = Eigen::MatrixXd(B);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Bd);
    if (es.info() != Eigen::Success) throw SolverError("dense symmetric eigensolver failed");
    const int kk = std::min<int>(k, static_cast<int>(B.rows()));
    return {es.eigenvalues().head(kk), es.eigenvectors().leftCols(kk), 1};
}

/// Shifted sparse Cholesky used as the LOBPCG preconditioner.
class ShiftedInverse {
public:
    ShiftedInverse(const SpMat& B, double shift)
    {
        SpMat S = B;
        for (Index i = 0; i < S.rows(); ++i) S.coeffRef(i, i) += shift;
        S.makeCompressed();
#ifdef HODGELAB_HAVE_CHOLMOD
        chol_.cholmod().nmethods = 1;
        chol_.cholmod().method[0].ordering = CHOLMOD_METIS;
        chol_.cholmod().postorder = 1;
        chol_.compute(S);
        if (chol_.info() != Eigen::Success) {
            chol_.cholmod().nmethods = 0; // CHOLMOD default ordering strategy
            chol_.compute(S);
        }
        if (chol_.info() != Eigen::Success) throw SolverError("shifted Cholesky factorization failed");
#else
        chol_.compute(S);
        if (chol_.info() != Eigen::Success) throw SolverError("shifted LDLT factorization failed");
#endif
    }

    Eigen::MatrixXd solve(const Eigen::MatrixXd& R) const { return chol_.solve(R); }

private:
#ifdef HODGELAB_HAVE_CHOLMOD
    mutable Eigen::CholmodSupernodalLLT<SpMat, Eigen::Lower> chol_;
#else
    Eigen::SimplicialLDLT<SpMat, Eigen::Lower> chol_;
#endif
};

/// Orthonormal basis of span(Z) via the symmetric Gram eigendecomposition,
/// dropping directions with relative weight below `drop`.
inline Eigen::MatrixXd svqb(const Eigen::MatrixXd& Z, double drop = 1e-12)
{
    if (Z.cols() == 0) return Z;
    Eigen::VectorXd nrm = Z.colwise().norm();
    Eigen::MatrixXd Zs = Z;
    for (Index j = 0; j < Z.cols(); ++j)
        if (nrm[j] > 0) Zs.col(j) /= nrm[j];
    Eigen::MatrixXd G = Zs.transpose() * Zs;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G);
    const Eigen::VectorXd& d = es.eigenvalues();
    const double dmax = d.maxCoeff();
    std::vector<Index> keep;
    for (Index j = 0; j < d.size(); ++j)
        if (d[j] > drop * dmax) keep.push_back(j);
    Eigen::MatrixXd T(Z.cols(), static_cast<Index>(keep.size()));
    for (std::size_t c = 0; c < keep.size(); ++c)
        T.col(static_cast<Index>(c)) = es.eigenvectors().col(keep[c]) / std::sqrt(d[keep[c]]);
    return Zs * T;
}

/// LOBPCG for the k smallest eigenpairs of symmetric positive semidefinite B.
inline Eigenpairs lobpcg(const SpMat& B, int k, const EigenSolveConfig& cfg, double shift,
                         std::mt19937_64& rng)
{
    const Index n = B.rows();
    const int m = static_cast<int>(std::min<Index>(n, k + std::max(6, k)));
    ShiftedInverse T(B, shift);

    std::normal_distribution<double> nd;
    Eigen::MatrixXd X(n, m);
    for (Index j = 0; j < m; ++j)
        for (Index i = 0; i < n; ++i) X(i, j) = nd(rng);
    // start from one step of shifted inverse iteration
    X = svqb(T.solve(X));

    auto rayleigh_ritz = [&](const Eigen::MatrixXd& S, Eigen::MatrixXd& C, Eigen::VectorXd& lam) {
        Eigen::MatrixXd H = S.transpose() * (B * S);
        H = 0.5 * (H + H.transpose()).eval();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H);
        lam = es.eigenvalues().head(m);
        C = es.eigenvectors().leftCols(m);
    };

    Eigen::MatrixXd C;
    Eigen::VectorXd lam;
    rayleigh_ritz(X, C, lam);
    X = X * C;
    Eigen::MatrixXd P(n, 0);
    std::vector<double> best(static_cast<std::size_t>(k), std::numeric_limits<double>::infinity());

    for (int it = 1; it <= cfg.max_iterations; ++it) {
        Eigen::MatrixXd BX = B * X;
        Eigen::MatrixXd R = BX - X * lam.asDiagonal();
        Eigen::VectorXd res = R.colwise().norm();
        bool done = true;
        for (int i = 0; i < k; ++i) {
            best[i] = std::min(best[i], res[i]);
            if (res[i] > cfg.tolerance) done = false;
        }
        if (done) return {lam.head(k), X.leftCols(k), it};

        std::vector<Index> active;
        for (int i = 0; i < m; ++i)
            if (res[i] > 0.1 * cfg.tolerance) active.push_back(i);
        Eigen::MatrixXd Ra(n, static_cast<Index>(active.size()));
        for (std::size_t c = 0; c < active.size(); ++c) Ra.col(static_cast<Index>(c)) = R.col(active[c]);
        Eigen::MatrixXd W = T.solve(Ra);

        Eigen::MatrixXd Z(n, W.cols() + P.cols());
        Z << W, P;
        for (int pass = 0; pass < 2; ++pass) Z -= X * (X.transpose() * Z);
        Eigen::MatrixXd Q = svqb(Z);
        Q -= X * (X.transpose() * Q);
        Q = svqb(Q);

        Eigen::MatrixXd S(n, m + Q.cols());
        S << X, Q;
        rayleigh_ritz(S, C, lam);
        Eigen::MatrixXd Xn = S * C;
        P = Q * C.bottomRows(Q.cols());
        X = svqb(Xn);
        if (X.cols() < m) throw SolverError("LOBPCG basis collapsed", best);
        // re-diagonalize after the orthonormalization touch-up
        rayleigh_ritz(X, C, lam);
        X = X * C;
    }
    throw SolverError("LOBPCG did not reach tolerance within " + std::to_string(cfg.max_iterations) +
                          " iterations",
                      best);
}

} // namespace detail

/// k smallest eigenpairs of a metric-symmetric operator.
inline Spectrum solve_low_spectrum(const OperatorHandle& op, const EigenSolveConfig& cfg)
{
    cfg.validate();
    if (op.metric == MetricKind::none) throw DegreeError("operator carries no symmetry metric");
    const SpMat B = op.symmetrized();
    const Index n = B.rows();
    if (cfg.k > n)
        throw InvalidSpecError("requested " + std::to_string(cfg.k) + " eigenpairs of a " +
                               std::to_string(n) + "-dimensional operator");

    Spectrum s;
    s.degree = op.from_degree;
    s.metric = op.metric;
    s.log_metric = op.log_metric;
    s.max_diagonal = B.diagonal().maxCoeff();
    const double shift = cfg.shift > 0.0 ? cfg.shift : 1e-4 * std::max(s.max_diagonal, 1e-300);

    std::mt19937_64 rng(cfg.seed);
    auto comps = detail::connected_components(B);

    struct Pair {
        double value;
        std::size_t comp;
        Index col;
    };
    std::vector<Pair> all;
    std::vector<detail::Eigenpairs> parts(comps.size());
    bool used_dense = false, used_iter = false;
    for (std::size_t c = 0; c < comps.size(); ++c) {
        const Index nc = static_cast<Index>(comps[c].size());
        const int kc = static_cast<int>(std::min<Index>(cfg.k, nc));
        SpMat Bc = comps.size() == 1 ? B : detail::submatrix(B, comps[c]);
        bool dense = cfg.route == SolverRoute::dense ||
                     (cfg.route == SolverRoute::automatic && nc <= cfg.dense_limit) ||
                     nc <= std::max<Index>(2 * (kc + 6), 16);
        if (dense) {
            parts[c] = detail::dense_eigenpairs(Bc, kc);
            used_dense = true;
        } else {
            parts[c] = detail::lobpcg(Bc, kc, cfg, shift, rng);
            used_iter = true;
        }
        s.iterations = std::max(s.iterations, parts[c].iterations);
        for (Index i = 0; i < parts[c].values.size(); ++i) all.push_back({parts[c].values[i], c, i});
    }
    std::stable_sort(all.begin(), all.end(), [](const Pair& a, const Pair& b) { return a.value < b.value; });
    all.resize(static_cast<std::size_t>(cfg.k));
    s.route = used_dense && used_iter ? "mixed" : (used_iter ? "iterative" : "dense");

    s.forms = Eigen::MatrixXd::Zero(n, cfg.k);
    Eigen::MatrixXd Y = Eigen::MatrixXd::Zero(n, cfg.k);
    for (int i = 0; i < cfg.k; ++i) {
        const Pair& pr = all[static_cast<std::size_t>(i)];
        s.values.push_back(pr.value);
        const auto& idx = comps[pr.comp];
        for (std::size_t r = 0; r < idx.size(); ++r)
            Y(idx[r], i) = parts[pr.comp].vectors(static_cast<Index>(r), pr.col);
    }
    // deterministic sign: largest-magnitude entry positive
    for (int i = 0; i < cfg.k; ++i) {
        Index arg;
        Y.col(i).cwiseAbs().maxCoeff(&arg);
        if (Y(arg, i) < 0) Y.col(i) *= -1.0;
    }
    Eigen::MatrixXd R = B * Y - Y * Eigen::Map<Eigen::VectorXd>(s.values.data(), cfg.k).asDiagonal();
    for (int i = 0; i < cfg.k; ++i) s.residuals.push_back(R.col(i).norm());
    for (int i = 0; i < cfg.k; ++i)
        for (Index r = 0; r < n; ++r) s.forms(r, i) = scale_by_exp(Y(r, i), -0.5 * op.log_metric[r]);
    return s;
}

struct KernelInfo {
    int count = 0;
    bool certified = false;
    double ratio = 0.0;          ///< lambda_{count+1} / max(lambda_count, tau_abs)
    double tau_abs = 0.0;
    double tau_gap = 0.0;
    double last_zero = 0.0;      ///< largest eigenvalue classified as zero (0 if none)
    double first_nonzero = 0.0;
    std::string message;
};

inline double zero_threshold(const Spectrum& s, const EigenSolveConfig& cfg)
{
    return cfg.tau_abs > 0.0 ? cfg.tau_abs : 1e-8 * s.max_diagonal;
}

/// Non-throwing kernel classification; `certified` reports the gap test.
inline KernelInfo classify_kernel(const Spectrum& s, const EigenSolveConfig& cfg)
{
    KernelInfo info;
    info.tau_abs = zero_threshold(s, cfg);
    info.tau_gap = cfg.tau_gap;
    for (double v : s.values)
        if (v < info.tau_abs) ++info.count;
    if (info.count == s.size()) {
        info.message = "all " + std::to_string(s.size()) +
                       " computed eigenvalues are below the zero threshold; request more eigenpairs";
        return info;
    }
    info.last_zero = info.count > 0 ? s.values[static_cast<std::size_t>(info.count - 1)] : 0.0;
    info.first_nonzero = s.values[static_cast<std::size_t>(info.count)];
    const double below = info.count > 0 ? std::max(info.last_zero, info.tau_abs) : info.tau_abs;
    info.ratio = info.first_nonzero / below;
    info.certified = info.ratio >= info.tau_gap;
    if (!info.certified)
        info.message = "no clear spectral gap: ratio " + std::to_string(info.ratio) + " < " +
                       std::to_string(info.tau_gap);
    return info;
}

/// Kernel count with a spectral-gap certificate; throws when the gap is unclear.
inline KernelInfo kernel_dimension(const Spectrum& s, const EigenSolveConfig& cfg)
{
    KernelInfo info = classify_kernel(s, cfg);
    if (!info.certified) throw SpectralGapError(info.message);
    return info;
}

/// M-orthonormal kernel basis (first `count` eigenforms).
inline Eigen::MatrixXd kernel_basis(const Spectrum& s, const KernelInfo& info)
{
    return s.forms.leftCols(info.count);
}

struct HodgeParts {
    DiscreteForm harmonic;
    DiscreteForm exact;    ///< d phi,  phi = delta_mu Delta_mu^{-1} w
    DiscreteForm coexact;  ///< delta_mu psi, psi = d Delta_mu^{-1} w
    double solve_residual = 0.0;
    int cg_iterations = 0;
};

/// Projected conjugate gradients for B y = b on the complement of span(K)
/// (K Euclidean-orthonormal), Jacobi preconditioned.
inline Eigen::VectorXd projected_cg(const SpMat& B, const Eigen::VectorXd& b, const Eigen::MatrixXd& K,
                                    double rel_tol, int max_iter, int& iterations, double& residual)
{
    auto project = [&](Eigen::VectorXd v) {
        if (K.cols()) v -= K * (K.transpose() * v);
        return v;
    };
    Eigen::VectorXd dinv = B.diagonal().cwiseInverse();
    Eigen::VectorXd y = Eigen::VectorXd::Zero(b.size());
    Eigen::VectorXd r = project(b);
    const double bnorm = r.norm();
    if (bnorm == 0.0) {
        iterations = 0;
        residual = 0.0;
        return y;
    }
    Eigen::VectorXd z = project(dinv.cwiseProduct(r));
    Eigen::VectorXd d = z;
    double rz = r.dot(z);
    int it = 0;
    for (; it < max_iter; ++it) {
        Eigen::VectorXd Bd = project(B * d);
        double alpha = rz / d.dot(Bd);
        y += alpha * d;
        r -= alpha * Bd;
        if (r.norm() <= rel_tol * bnorm) {
            ++it;
            break;
        }
        z = project(dinv.cwiseProduct(r));
        double rz_new = r.dot(z);
        d = z + (rz_new / rz) * d;
        rz = rz_new;
    }
    iterations = it;
    residual = (project(b - B * y)).norm() / bnorm;
    if (residual > 10 * rel_tol)
        throw SolverError("projected CG stalled at relative residual " + std::to_string(residual),
                          {residual});
    return project(y);
}

/// Smooth Hodge decomposition w = harmonic + d phi + delta_mu psi from a
/// certified Delta_mu spectrum of the same degree.
inline HodgeParts hodge_decompose(const DiscreteForm& w, const Spectrum& s, const CochainComplex& k,
                                  const EigenSolveConfig& cfg, double cg_tol = 1e-12)
{
    if (s.metric != MetricKind::mu) throw DegreeError("hodge_decompose needs a Delta_mu spectrum");
    if (w.degree != s.degree) throw DegreeError("form degree does not match the spectrum");
    KernelInfo info = kernel_dimension(s, cfg);
    const int p = w.degree;
    const Eigen::MatrixXd basis = kernel_basis(s, info);

    HodgeParts out;
    Eigen::VectorXd harm = Eigen::VectorXd::Zero(w.size());
    for (int j = 0; j < info.count; ++j) harm += inner_mu(k, p, w.values, basis.col(j)) * basis.col(j);
    out.harmonic = DiscreteForm(p, harm);

    OperatorHandle lap = laplacian_mu(k, p);
    const SpMat B = lap.symmetrized();
    const Eigen::VectorXd half = 0.5 * lap.log_metric;
    auto to_sym = [&](const Eigen::VectorXd& v) {
        Eigen::VectorXd o(v.size());
        for (Index i = 0; i < v.size(); ++i) o[i] = scale_by_exp(v[i], half[i]);
        return o;
    };
    auto from_sym = [&](const Eigen::VectorXd& v) {
        Eigen::VectorXd o(v.size());
        for (Index i = 0; i < v.size(); ++i) o[i] = scale_by_exp(v[i], -half[i]);
        return o;
    };
    Eigen::MatrixXd K(w.size(), info.count);
    for (int j = 0; j < info.count; ++j) K.col(j) = to_sym(basis.col(j));
    if (info.count) K = detail::svqb(K);

    Eigen::VectorXd y = projected_cg(B, to_sym(w.values - harm), K, cg_tol,
                                     std::max<int>(1000, 20 * static_cast<int>(std::sqrt(double(w.size())))),
                                     out.cg_iterations, out.solve_residual);
    Eigen::VectorXd x = from_sym(y);

    const int n = k.dimension();
    Eigen::VectorXd exact = Eigen::VectorXd::Zero(w.size());
    Eigen::VectorXd coexact = Eigen::VectorXd::Zero(w.size());
    if (p > 0) {
        Eigen::VectorXd phi = codifferential_mu(k, p).action * x;
        exact = coboundary_operator(k, p - 1).action * phi;
    }
    if (p < n) {
        Eigen::VectorXd psi = coboundary_operator(k, p).action * x;
        coexact = codifferential_mu(k, p + 1).action * psi;
    }
    out.exact = DiscreteForm(p, exact);
    out.coexact = DiscreteForm(p, coexact);
    return out;
}

} // namespace hodgelab
