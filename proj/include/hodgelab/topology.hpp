#pragma once

// Betti numbers two ways: Poincare polynomials multiplied factorwise, and
// exact ranks of the cellular coboundaries over Q.

#include <hodgelab/complex.hpp>

#include <gmpxx.h>

#include <sstream>
#include <unordered_map>

namespace hodgelab {

enum class Flavor { ordinary, compact };

inline const char* to_string(Flavor f) { return f == Flavor::ordinary ? "ordinary" : "compact"; }

/// b_0 + b_1 t + ... + b_n t^n
struct PoincarePolynomial {
    std::vector<long long> coeffs;

    PoincarePolynomial() = default;
    explicit PoincarePolynomial(std::vector<long long> c) : coeffs(std::move(c))
    {
        for (long long v : coeffs)
            if (v < 0) throw InvalidSpecError("Betti numbers are nonnegative");
    }

    static PoincarePolynomial unit() { return PoincarePolynomial({1}); }

    int degree() const
    {
        for (int p = static_cast<int>(coeffs.size()) - 1; p >= 0; --p)
            if (coeffs[p]) return p;
        return 0;
    }
    long long operator[](int p) const
    {
        return p >= 0 && p < static_cast<int>(coeffs.size()) ? coeffs[p] : 0;
    }
    long long total() const
    {
        long long s = 0;
        for (long long v : coeffs) s += v;
        return s;
    }

    /// Coefficients padded to length n+1.
    std::vector<long long> padded(int n) const
    {
        std::vector<long long> out(static_cast<std::size_t>(n) + 1, 0);
        for (int p = 0; p <= n; ++p) out[p] = (*this)[p];
        return out;
    }

    PoincarePolynomial reversed(int n) const
    {
        auto c = padded(n);
        std::reverse(c.begin(), c.end());
        return PoincarePolynomial(std::move(c));
    }

    friend PoincarePolynomial operator*(const PoincarePolynomial& a, const PoincarePolynomial& b)
    {
        if (a.coeffs.empty() || b.coeffs.empty()) return PoincarePolynomial({0});
        std::vector<long long> c(a.coeffs.size() + b.coeffs.size() - 1, 0);
        for (std::size_t i = 0; i < a.coeffs.size(); ++i)
            for (std::size_t j = 0; j < b.coeffs.size(); ++j) c[i + j] += a.coeffs[i] * b.coeffs[j];
        return PoincarePolynomial(std::move(c));
    }

    /// Equality up to trailing zeros.
    friend bool operator==(const PoincarePolynomial& a, const PoincarePolynomial& b)
    {
        const int n = static_cast<int>(std::max(a.coeffs.size(), b.coeffs.size()));
        for (int p = 0; p < n; ++p)
            if (a[p] != b[p]) return false;
        return true;
    }

    std::string to_string() const
    {
        std::ostringstream os;
        bool first = true;
        for (std::size_t p = 0; p < coeffs.size(); ++p) {
            if (!coeffs[p]) continue;
            if (!first) os << " + ";
            first = false;
            if (coeffs[p] != 1 || p == 0) os << coeffs[p];
            if (p >= 1) os << "t";
            if (p >= 2) os << "^" << p;
        }
        if (first) os << "0";
        return os.str();
    }
};

inline PoincarePolynomial factor_polynomial(const FactorSpec& f, Flavor flavor)
{
    if (f.is_circle()) return PoincarePolynomial({1, 1});
    return flavor == Flavor::ordinary ? PoincarePolynomial({1}) : PoincarePolynomial({0, 1});
}

inline PoincarePolynomial poincare_polynomial(const ManifoldSpec& m, Flavor flavor)
{
    PoincarePolynomial out = PoincarePolynomial::unit();
    for (const auto& f : m.factors()) out = out * factor_polynomial(f, flavor);
    return out;
}

struct CohomologyTable {
    PoincarePolynomial ordinary;
    PoincarePolynomial compact;
    int n = 0;

    const PoincarePolynomial& get(Flavor f) const { return f == Flavor::ordinary ? ordinary : compact; }

    /// compact coefficients reversed equal the ordinary ones
    bool duality_holds() const { return compact.reversed(n) == ordinary; }
};

inline CohomologyTable cohomology_table(const ManifoldSpec& m)
{
    return {poincare_polynomial(m, Flavor::ordinary), poincare_polynomial(m, Flavor::compact), m.dimension()};
}

/// The point: both flavors equal 1, dimension 0.
inline CohomologyTable point_table()
{
    return {PoincarePolynomial::unit(), PoincarePolynomial::unit(), 0};
}

inline CohomologyTable kunneth_combine(const CohomologyTable& a, const CohomologyTable& b)
{
    return {a.ordinary * b.ordinary, a.compact * b.compact, a.n + b.n};
}

struct RankLimits {
    Index max_cells = 600000;         ///< cells in the largest degree
    std::size_t max_entries = 40000000; ///< stored nonzeros during elimination
};

namespace detail {

/// Exact rank over Q of a sparse integer matrix by column reduction with
/// pivots on the lowest nonzero row (the persistence-style elimination,
/// which keeps fill small on cubical coboundaries).
inline Index exact_rank(const IntSpMat& D, const RankLimits& lim)
{
    using Entry = std::pair<Index, mpq_class>;
    using Column = std::vector<Entry>; // sorted by row
    const Index cols = D.cols();
    std::vector<Column> reduced;
    std::unordered_map<Index, std::size_t> pivot_of; // low row -> reduced column
    std::size_t stored = 0;
    Index rank = 0;
    Column work, tmp;
    for (Index j = 0; j < cols; ++j) {
        work.clear();
        for (IntSpMat::InnerIterator it(D, j); it; ++it)
            if (it.value() != 0) work.emplace_back(it.row(), mpq_class(it.value()));
        std::sort(work.begin(), work.end(), [](const Entry& a, const Entry& b) { return a.first < b.first; });
        while (!work.empty()) {
            auto hit = pivot_of.find(work.back().first);
            if (hit == pivot_of.end()) break;
            const Column& other = reduced[hit->second];
            mpq_class f = work.back().second / other.back().second;
            // work -= f * other, merged by row
            tmp.clear();
            std::size_t a = 0, b = 0;
            while (a < work.size() || b < other.size()) {
                if (b == other.size() || (a < work.size() && work[a].first < other[b].first)) {
                    tmp.push_back(std::move(work[a++]));
                } else if (a == work.size() || other[b].first < work[a].first) {
                    tmp.emplace_back(other[b].first, -f * other[b].second);
                    ++b;
                } else {
                    mpq_class v = work[a].second - f * other[b].second;
                    if (sgn(v) != 0) tmp.emplace_back(work[a].first, std::move(v));
                    ++a;
                    ++b;
                }
            }
            std::swap(work, tmp);
        }
        if (work.empty()) continue;
        ++rank;
        stored += work.size();
        if (stored > lim.max_entries)
            throw SizeError("exact rank elimination exceeded " + std::to_string(lim.max_entries) +
                            " stored entries; coarsen the grid (fewer subdivisions per axis)");
        pivot_of.emplace(work.back().first, reduced.size());
        reduced.push_back(work);
    }
    return rank;
}

} // namespace detail

/// Betti numbers of the truncated complex: b_p = dim ker D_p - rank D_{p-1}.
/// Relative mode computes H_c of the model, absolute mode H.
inline PoincarePolynomial betti_from_complex(const CochainComplex& k, const RankLimits& lim = {})
{
    const int n = k.dimension();
    for (int p = 0; p <= n; ++p)
        if (k.cell_count(p) > lim.max_cells)
            throw SizeError(std::to_string(k.cell_count(p)) + " cells of degree " + std::to_string(p) +
                            " exceed the exact-rank limit of " + std::to_string(lim.max_cells) +
                            "; coarsen the grid");
    std::vector<Index> rank(static_cast<std::size_t>(n) + 1, 0);
    for (int p = 0; p < n; ++p) rank[p] = detail::exact_rank(k.coboundary(p), lim);
    std::vector<long long> b(static_cast<std::size_t>(n) + 1);
    for (int p = 0; p <= n; ++p)
        b[p] = static_cast<long long>(k.cell_count(p) - rank[p] - (p > 0 ? rank[p - 1] : 0));
    return PoincarePolynomial(std::move(b));
}

inline PoincarePolynomial betti_from_complex(const ManifoldSpec& m, BoundaryMode mode, const RankLimits& lim = {})
{
    return betti_from_complex(CochainComplex(m, mode), lim);
}

/// Flavor computed by a boundary mode on line factors.
inline Flavor flavor_of(BoundaryMode mode)
{
    return mode == BoundaryMode::relative ? Flavor::compact : Flavor::ordinary;
}

/// Betti numbers the weighted kernel should reproduce: compact for growth
/// weights, ordinary for decay (or flat) weights.
inline PoincarePolynomial expected_kernel_counts(const ManifoldSpec& m)
{
    return poincare_polynomial(m, flavor_of(default_boundary_mode(m)));
}

} // namespace hodgelab
