#pragma once

#include <utility>
#include <vector>

#include "tslab/matrix.hpp"

namespace tslab {

struct CorrStats {
    double max_offdiag_abs = 0.0;
    double min_eigenvalue = 0.0;
};

struct StandardizeResult {
    std::vector<double> values;
    double mean = 0.0;
    double sd = 1.0;
};

struct EigenPair {
    double value = 0.0;
    std::vector<double> vector;
};

struct EigenDecomposition {
    std::vector<double> values;  // ascending
    Matrix vectors;              // column k is the eigenvector of values[k]
};

// Lower-triangular Cholesky factor of a symmetric positive-definite matrix.
// Throws NotPositiveDefinite when a pivot is <= 0, NonFinite on bad input.
Matrix cholesky(const Matrix& m);

// Solves A x = b for symmetric positive-definite A via Cholesky.
std::vector<double> solve_spd(const Matrix& a, const std::vector<double>& b);

// Least-squares solution of X b = y through the normal equations, where X is
// T x p with T >= p. Throws SingularRegression when X'X is not positive
// definite at a relative tolerance.
std::vector<double> ols(const Matrix& x, const std::vector<double>& y);

// Full eigendecomposition of a symmetric matrix by the cyclic Jacobi method.
EigenDecomposition sym_eigen(const Matrix& m);

// Smallest eigenvalue of a symmetric matrix.
double sym_min_eigen(const Matrix& m);

// Smallest eigenvalue together with its eigenvector.
EigenPair sym_min_eigen_pair(const Matrix& m);

// k x k matrix with entries rho^|i-j|.
Matrix toeplitz_corr(double rho, std::size_t k);

// Rescales a series to sample mean 0 and sample variance 1 (1/(T-1)
// denominator). Throws ZeroVariance for a constant series.
StandardizeResult standardize(const std::vector<double>& series);

double mean_of(const std::vector<double>& v);
// Sample variance with the 1/(T-1) denominator.
double variance_of(const std::vector<double>& v);

// Pearson correlation matrix of the rows of X (each row one series).
Matrix correlation_matrix(const Matrix& x);

// Largest absolute off-diagonal correlation and minimum eigenvalue of the
// sample correlation matrix of the rows of X.
CorrStats corr_stats(const Matrix& x);

}  // namespace tslab
