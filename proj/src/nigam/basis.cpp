#include "nigam/basis.hpp"

#include "nigam/csv.hpp"
#include "nigam/error.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>
#include <string>

namespace nigam::basis {

KnotGrid KnotGrid::with_basis_count(double lo, double hi, int n_basis, int degree) {
    KnotGrid g{lo, hi, n_basis - degree - 1, degree};
    g.validate();
    return g;
}

void KnotGrid::validate() const {
    if (!(std::isfinite(lo) && std::isfinite(hi) && lo < hi)) {
        std::ostringstream msg;
        msg << "knot grid requires lo < hi, got [" << lo << ", " << hi << "]";
        throw InputError(msg.str());
    }
    if (degree < 0 || degree > 7) throw InputError("knot grid degree must be in [0, 7]");
    if (n_interior < 1) throw InputError("knot grid needs at least one interior knot");
}

std::vector<double> KnotGrid::knots() const {
    std::vector<double> u;
    u.reserve(n_interior + 2 * (degree + 1));
    for (int i = 0; i <= degree; ++i) u.push_back(lo);
    const double step = (hi - lo) / (n_interior + 1);
    for (int i = 1; i <= n_interior; ++i) u.push_back(lo + step * i);
    for (int i = 0; i <= degree; ++i) u.push_back(hi);
    return u;
}

std::vector<double> KnotGrid::greville() const {
    auto u = knots();
    std::vector<double> g(basis_count());
    for (int s = 0; s < basis_count(); ++s) {
        double acc = 0.0;
        for (int k = 1; k <= degree; ++k) acc += u[s + k];
        g[s] = degree > 0 ? acc / degree : u[s];
    }
    return g;
}

namespace {

void check_inside(double x, const KnotGrid& grid) {
    if (!std::isfinite(x) || x < grid.lo || x > grid.hi) {
        std::ostringstream msg;
        msg.precision(10);
        msg << "point " << x << " outside knot span [" << grid.lo << ", " << grid.hi << "]";
        throw InputError(msg.str());
    }
}

// Index s of the knot interval [u_s, u_{s+1}) holding x; the right end maps
// to the last nonempty interval.
int find_span(double x, const std::vector<double>& u, int degree, int n_basis) {
    if (x >= u[n_basis]) return n_basis - 1;
    auto it = std::upper_bound(u.begin() + degree, u.begin() + n_basis + 1, x);
    return static_cast<int>(it - u.begin()) - 1;
}

// Nonzero basis functions of degree p at x on span s (triangular scheme).
void basis_funs(int s, double x, int p, const std::vector<double>& u, double* n) {
    std::array<double, 9> left{}, right{};
    n[0] = 1.0;
    for (int j = 1; j <= p; ++j) {
        left[j] = x - u[s + 1 - j];
        right[j] = u[s + j] - x;
        double saved = 0.0;
        for (int r = 0; r < j; ++r) {
            const double temp = n[r] / (right[r + 1] + left[j - r]);
            n[r] = saved + right[r + 1] * temp;
            saved = left[j - r] * temp;
        }
        n[j] = saved;
    }
}

} // namespace

LocalRow evaluate_row(double x, const KnotGrid& grid) {
    check_inside(x, grid);
    const auto u = grid.knots();
    const int p = grid.degree;
    const int s = find_span(x, u, p, grid.basis_count());
    LocalRow row;
    row.first = s - p;
    row.count = p + 1;
    basis_funs(s, x, p, u, row.values.data());
    return row;
}

LocalRow evaluate_derivative_row(double x, const KnotGrid& grid) {
    check_inside(x, grid);
    const auto u = grid.knots();
    const int p = grid.degree;
    const int s = find_span(x, u, p, grid.basis_count());
    LocalRow row;
    row.first = s - p;
    row.count = p + 1;
    if (p == 0) return row;

    // N'_{i,p} = p/(u_{i+p}-u_i) N_{i,p-1} - p/(u_{i+p+1}-u_{i+1}) N_{i+1,p-1}
    std::array<double, 8> lower{};
    basis_funs(s, x, p - 1, u, lower.data());
    // lower[k] is N_{s-p+1+k, p-1}, k = 0..p-1
    for (int k = 0; k <= p; ++k) {
        const int i = s - p + k;
        double d = 0.0;
        if (k >= 1) {
            const double den = u[i + p] - u[i];
            if (den > 0.0) d += p / den * lower[k - 1];
        }
        if (k <= p - 1) {
            const double den = u[i + p + 1] - u[i + 1];
            if (den > 0.0) d -= p / den * lower[k];
        }
        row.values[k] = d;
    }
    return row;
}

namespace {

BasisMatrix univariate(std::span<const double> times, const KnotGrid& grid, bool derivative) {
    grid.validate();
    BasisMatrix out;
    out.kind = derivative ? BasisKind::RegionalDerivative : BasisKind::Regional;
    out.values = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(times.size()), grid.basis_count());
    for (std::size_t i = 0; i < times.size(); ++i) {
        const LocalRow row = derivative ? evaluate_derivative_row(times[i], grid) : evaluate_row(times[i], grid);
        for (int k = 0; k < row.count; ++k)
            out.values(static_cast<Eigen::Index>(i), row.first + k) = row.values[k];
    }
    return out;
}

BasisMatrix tensor(std::span<const double> lons, std::span<const double> lats, std::span<const double> times,
                   const TensorGrids& grids, bool time_derivative) {
    if (lons.size() != lats.size() || lons.size() != times.size())
        throw InputError("tensor basis requires equally long lon, lat and time lists");
    grids.lon.validate();
    grids.lat.validate();
    grids.time.validate();

    BasisMatrix out;
    out.kind = time_derivative ? BasisKind::LocalTensorTimeDerivative : BasisKind::LocalTensor;
    out.values = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(times.size()), grids.basis_count());
    for (std::size_t i = 0; i < times.size(); ++i) {
        const LocalRow a = evaluate_row(lons[i], grids.lon);
        const LocalRow b = evaluate_row(lats[i], grids.lat);
        const LocalRow c = time_derivative ? evaluate_derivative_row(times[i], grids.time)
                                           : evaluate_row(times[i], grids.time);
        for (int ia = 0; ia < a.count; ++ia)
            for (int ib = 0; ib < b.count; ++ib)
                for (int ic = 0; ic < c.count; ++ic)
                    out.values(static_cast<Eigen::Index>(i),
                               grids.column(a.first + ia, b.first + ib, c.first + ic)) =
                        a.values[ia] * b.values[ib] * c.values[ic];
    }
    return out;
}

} // namespace

BasisMatrix bspline_basis(std::span<const double> times, const KnotGrid& grid) {
    return univariate(times, grid, false);
}

BasisMatrix bspline_derivative_basis(std::span<const double> times, const KnotGrid& grid) {
    if (grid.degree < 1) throw InputError("derivative basis requires degree >= 1");
    return univariate(times, grid, true);
}

BasisMatrix tensor_basis(std::span<const double> lons, std::span<const double> lats,
                         std::span<const double> times, const TensorGrids& grids) {
    return tensor(lons, lats, times, grids, false);
}

BasisMatrix tensor_time_derivative_basis(std::span<const double> lons, std::span<const double> lats,
                                         std::span<const double> times, const TensorGrids& grids) {
    if (grids.time.degree < 1) throw InputError("derivative basis requires degree >= 1");
    return tensor(lons, lats, times, grids, true);
}

void write_basis_csv(const BasisMatrix& basis, std::ostream& out) {
    std::vector<std::string> row;
    for (Eigen::Index j = 0; j < basis.cols(); ++j) row.push_back("b" + std::to_string(j));
    csv::write_row(out, row);
    for (Eigen::Index i = 0; i < basis.rows(); ++i) {
        row.clear();
        for (Eigen::Index j = 0; j < basis.cols(); ++j) row.push_back(csv::format_double(basis.values(i, j)));
        csv::write_row(out, row);
    }
}

} // namespace nigam::basis
