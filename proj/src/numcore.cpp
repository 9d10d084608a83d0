#include "tslab/numcore.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tslab/errors.hpp"

namespace tslab {

namespace {

void check_symmetric(const Matrix& m, double tol = 1e-10) {
    if (m.rows() != m.cols()) throw Error("matrix is not square");
    if (!m.all_finite()) throw NonFinite("matrix has non-finite entries");
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = i + 1; j < m.cols(); ++j)
            if (std::fabs(m(i, j) - m(j, i)) > tol)
                throw Error("matrix is not symmetric within tolerance");
}

}  // namespace

Matrix cholesky(const Matrix& m) {
    check_symmetric(m);
    const std::size_t n = m.rows();
    Matrix l(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        double diag = m(j, j);
        for (std::size_t k = 0; k < j; ++k) diag -= l(j, k) * l(j, k);
        if (diag <= 0.0)
            throw NotPositiveDefinite("pivot " + std::to_string(j) + " is not positive");
        l(j, j) = std::sqrt(diag);
        for (std::size_t i = j + 1; i < n; ++i) {
            double s = m(i, j);
            for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
            l(i, j) = s / l(j, j);
        }
    }
    return l;
}

std::vector<double> solve_spd(const Matrix& a, const std::vector<double>& b) {
    const Matrix l = cholesky(a);
    const std::size_t n = l.rows();
    std::vector<double> y(n), x(n);
    for (std::size_t i = 0; i < n; ++i) {
        double s = b[i];
        for (std::size_t k = 0; k < i; ++k) s -= l(i, k) * y[k];
        y[i] = s / l(i, i);
    }
    for (std::size_t ii = n; ii-- > 0;) {
        double s = y[ii];
        for (std::size_t k = ii + 1; k < n; ++k) s -= l(k, ii) * x[k];
        x[ii] = s / l(ii, ii);
    }
    return x;
}

std::vector<double> ols(const Matrix& x, const std::vector<double>& y) {
    const std::size_t t = x.rows();
    const std::size_t p = x.cols();
    if (y.size() != t) throw Error("ols: dimension mismatch");
    Matrix gram(p, p);
    std::vector<double> xty(p, 0.0);
    for (std::size_t r = 0; r < t; ++r) {
        const double* row = x.row_ptr(r);
        for (std::size_t i = 0; i < p; ++i) {
            xty[i] += row[i] * y[r];
            for (std::size_t j = i; j < p; ++j) gram(i, j) += row[i] * row[j];
        }
    }
    double scale = 0.0;
    for (std::size_t i = 0; i < p; ++i) {
        scale = std::max(scale, gram(i, i));
        for (std::size_t j = i + 1; j < p; ++j) gram(j, i) = gram(i, j);
    }
    // Tiny ridge relative to the largest diagonal keeps near-collinear designs
    // solvable; exact rank deficiency still trips the pivot check.
    const double eps = scale * 1e-12;
    for (std::size_t i = 0; i < p; ++i) gram(i, i) += eps;
    try {
        return solve_spd(gram, xty);
    } catch (const NotPositiveDefinite&) {
        throw SingularRegression("ols: rank-deficient design");
    }
}

EigenDecomposition sym_eigen(const Matrix& m) {
    check_symmetric(m);
    const std::size_t n = m.rows();
    Matrix a = m;
    Matrix v = Matrix::identity(n);

    // Cyclic Jacobi sweeps until all off-diagonal mass is annihilated.
    const int max_sweeps = 100;
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double off = 0.0, total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            total += a(i, i) * a(i, i);
            for (std::size_t j = i + 1; j < n; ++j) off += a(i, j) * a(i, j);
        }
        total += 2.0 * off;
        if (off <= 1e-26 * std::max(total, 1e-300)) break;

        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (std::fabs(apq) < 1e-300) continue;
                const double app = a(p, p), aqq = a(q, q);
                const double tau = (aqq - app) / (2.0 * apq);
                const double sign = tau >= 0.0 ? 1.0 : -1.0;
                const double t = sign / (std::fabs(tau) + std::sqrt(1.0 + tau * tau));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a(k, p), akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a(p, k), aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double vkp = v(k, p), vkq = v(k, q);
                    v(k, p) = c * vkp - s * vkq;
                    v(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t i, std::size_t j) { return a(i, i) < a(j, j); });

    EigenDecomposition out;
    out.values.resize(n);
    out.vectors = Matrix(n, n);
    for (std::size_t k = 0; k < n; ++k) {
        out.values[k] = a(order[k], order[k]);
        for (std::size_t i = 0; i < n; ++i) out.vectors(i, k) = v(i, order[k]);
    }
    return out;
}

double sym_min_eigen(const Matrix& m) { return sym_eigen(m).values.front(); }

EigenPair sym_min_eigen_pair(const Matrix& m) {
    const EigenDecomposition ed = sym_eigen(m);
    EigenPair p;
    p.value = ed.values.front();
    p.vector.resize(m.rows());
    for (std::size_t i = 0; i < m.rows(); ++i) p.vector[i] = ed.vectors(i, 0);
    return p;
}

Matrix toeplitz_corr(double rho, std::size_t k) {
    if (!(std::fabs(rho) < 1.0)) throw InvalidRho("|rho| must be < 1");
    if (k < 1) throw Error("toeplitz_corr: k must be >= 1");
    Matrix m(k, k);
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j < k; ++j)
            m(i, j) = std::pow(rho, std::fabs(static_cast<double>(i) - static_cast<double>(j)));
    return m;
}

double mean_of(const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double variance_of(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double m = mean_of(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return s / static_cast<double>(v.size() - 1);
}

StandardizeResult standardize(const std::vector<double>& series) {
    if (series.size() < 2) throw Error("standardize: need at least 2 observations");
    StandardizeResult out;
    out.mean = mean_of(series);
    const double var = variance_of(series);
    if (var <= 0.0) throw ZeroVariance("standardize: constant series");
    out.sd = std::sqrt(var);
    out.values.resize(series.size());
    for (std::size_t i = 0; i < series.size(); ++i)
        out.values[i] = (series[i] - out.mean) / out.sd;
    return out;
}

Matrix correlation_matrix(const Matrix& x) {
    const std::size_t n = x.rows();
    const std::size_t t = x.cols();
    if (t < 3) throw Error("correlation_matrix: need T >= 3");
    Matrix z(n, t);
    for (std::size_t i = 0; i < n; ++i) {
        const StandardizeResult s = standardize(x.row(i));
        z.set_row(i, s.values);
    }
    Matrix c(n, n);
    const double denom = static_cast<double>(t - 1);
    for (std::size_t i = 0; i < n; ++i) {
        c(i, i) = 1.0;
        for (std::size_t j = i + 1; j < n; ++j) {
            double s = 0.0;
            const double* zi = z.row_ptr(i);
            const double* zj = z.row_ptr(j);
            for (std::size_t k = 0; k < t; ++k) s += zi[k] * zj[k];
            c(i, j) = c(j, i) = s / denom;
        }
    }
    return c;
}

CorrStats corr_stats(const Matrix& x) {
    const Matrix c = correlation_matrix(x);
    CorrStats out;
    for (std::size_t i = 0; i < c.rows(); ++i)
        for (std::size_t j = i + 1; j < c.cols(); ++j)
            out.max_offdiag_abs = std::max(out.max_offdiag_abs, std::fabs(c(i, j)));
    out.min_eigenvalue = sym_min_eigen(c);
    return out;
}

}  // namespace tslab
