#pragma once

#include <Eigen/Dense>

#include <array>
#include <iosfwd>
#include <span>
#include <vector>

namespace nigam::basis {

// Equidistant clamped knot layout on [lo, hi]. The boundary knots are
// repeated degree+1 times, so the basis has n_interior + degree + 1 columns.
struct KnotGrid {
    double lo = 0.0;
    double hi = 1.0;
    int n_interior = 1;
    int degree = 3;

    // Grid with the given number of basis functions (n_basis >= degree + 2).
    static KnotGrid with_basis_count(double lo, double hi, int n_basis, int degree);

    int basis_count() const { return n_interior + degree + 1; }
    bool contains(double x) const { return x >= lo && x <= hi; }
    std::vector<double> knots() const;
    // Greville abscissae: coefficients equal to these reproduce f(t) = t.
    std::vector<double> greville() const;
    void validate() const;
};

// Grids for the lon x lat x time tensor product.
struct TensorGrids {
    KnotGrid lon;
    KnotGrid lat;
    KnotGrid time;

    int basis_count() const { return lon.basis_count() * lat.basis_count() * time.basis_count(); }
    // Column of kron(b_lon, b_lat, b_time) for the given per-dimension indices.
    int column(int i_lon, int i_lat, int i_time) const {
        return (i_lon * lat.basis_count() + i_lat) * time.basis_count() + i_time;
    }
};

enum class BasisKind { Regional, RegionalDerivative, LocalTensor, LocalTensorTimeDerivative };

struct BasisMatrix {
    Eigen::MatrixXd values;
    BasisKind kind = BasisKind::Regional;

    Eigen::Index rows() const { return values.rows(); }
    Eigen::Index cols() const { return values.cols(); }
};

// Nonzero stretch of one basis row: values[k] belongs to column first + k.
struct LocalRow {
    int first = 0;
    int count = 0;
    std::array<double, 8> values{};
};

// Cox-de Boor evaluation of the degree+1 functions that are nonzero at x.
// Throws InputError when x lies outside [lo, hi].
LocalRow evaluate_row(double x, const KnotGrid& grid);
LocalRow evaluate_derivative_row(double x, const KnotGrid& grid);

BasisMatrix bspline_basis(std::span<const double> times, const KnotGrid& grid);
BasisMatrix bspline_derivative_basis(std::span<const double> times, const KnotGrid& grid);

BasisMatrix tensor_basis(std::span<const double> lons, std::span<const double> lats,
                         std::span<const double> times, const TensorGrids& grids);
BasisMatrix tensor_time_derivative_basis(std::span<const double> lons, std::span<const double> lats,
                                         std::span<const double> times, const TensorGrids& grids);

// Debug dump: header b0..b{k-1}, one row per evaluation point.
void write_basis_csv(const BasisMatrix& basis, std::ostream& out);

} // namespace nigam::basis
