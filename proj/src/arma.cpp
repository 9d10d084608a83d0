#include "tslab/arma.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>

#include "tslab/errors.hpp"
#include "tslab/matrix.hpp"
#include "tslab/numcore.hpp"
#include "tslab/rng.hpp"

namespace tslab {

namespace {

using cplx = std::complex<double>;

// Roots of 1 - c_1 z - ... - c_m z^m by Durand-Kerner on the reversed monic
// polynomial. Orders here never exceed ~12.
std::vector<cplx> char_roots(const std::vector<double>& coeffs) {
    std::size_t m = coeffs.size();
    while (m > 0 && std::fabs(coeffs[m - 1]) < 1e-14) --m;
    if (m == 0) return {};
    // p(z) = -c_m z^m - ... - c_1 z + 1; normalize to monic.
    std::vector<cplx> a(m + 1);
    a[0] = cplx(1.0, 0.0);
    for (std::size_t k = 1; k <= m; ++k) a[k] = cplx(-coeffs[k - 1], 0.0);
    const cplx lead = a[m];
    for (auto& v : a) v /= lead;

    auto eval = [&](const cplx& z) {
        cplx s(1.0, 0.0);  // monic leading term
        for (std::size_t k = m; k-- > 0;) s = s * z + a[k];
        return s;
    };

    std::vector<cplx> r(m);
    for (std::size_t k = 0; k < m; ++k)
        r[k] = std::pow(cplx(0.4, 0.9), static_cast<double>(k + 1));
    for (int iter = 0; iter < 500; ++iter) {
        double step = 0.0;
        for (std::size_t k = 0; k < m; ++k) {
            cplx denom(1.0, 0.0);
            for (std::size_t j = 0; j < m; ++j)
                if (j != k) denom *= (r[k] - r[j]);
            const cplx d = eval(r[k]) / denom;
            r[k] -= d;
            step = std::max(step, std::abs(d));
        }
        if (step < 1e-13) break;
    }
    return r;
}

std::vector<double> coeffs_from_roots(const std::vector<cplx>& roots) {
    // Expand prod_r (1 - z / root_r) and read off c_k from
    // 1 - c_1 z - ... - c_m z^m.
    std::vector<cplx> poly{cplx(1.0, 0.0)};
    for (const cplx& root : roots) {
        std::vector<cplx> next(poly.size() + 1, cplx(0.0, 0.0));
        for (std::size_t k = 0; k < poly.size(); ++k) {
            next[k] += poly[k];
            next[k + 1] -= poly[k] / root;
        }
        poly = next;
    }
    std::vector<double> out(poly.size() - 1);
    for (std::size_t k = 1; k < poly.size(); ++k) out[k - 1] = -poly[k].real();
    return out;
}

bool roots_outside_unit(const std::vector<double>& coeffs) {
    for (const cplx& r : char_roots(coeffs))
        if (std::abs(r) <= 1.0 + 1e-10) return false;
    return true;
}

// --- Nelder-Mead simplex minimizer -----------------------------------------

struct NmResult {
    std::vector<double> x;
    double f = 0.0;
    bool converged = false;
};

NmResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                     const std::vector<double>& x0, double step, double ftol, int max_iter) {
    const std::size_t n = x0.size();
    std::vector<std::vector<double>> pts(n + 1, x0);
    std::vector<double> fv(n + 1);
    for (std::size_t i = 0; i < n; ++i) pts[i + 1][i] += step;
    for (std::size_t i = 0; i <= n; ++i) fv[i] = f(pts[i]);

    NmResult res;
    for (int iter = 0; iter < max_iter; ++iter) {
        std::size_t lo = 0, hi = 0, next_hi = 0;
        for (std::size_t i = 1; i <= n; ++i) {
            if (fv[i] < fv[lo]) lo = i;
            if (fv[i] > fv[hi]) hi = i;
        }
        next_hi = lo;
        for (std::size_t i = 0; i <= n; ++i)
            if (i != hi && fv[i] > fv[next_hi]) next_hi = i;

        const double spread = std::fabs(fv[hi] - fv[lo]);
        if (spread <= ftol * (std::fabs(fv[lo]) + ftol)) {
            res.converged = true;
            res.x = pts[lo];
            res.f = fv[lo];
            return res;
        }

        std::vector<double> centroid(n, 0.0);
        for (std::size_t i = 0; i <= n; ++i) {
            if (i == hi) continue;
            for (std::size_t j = 0; j < n; ++j) centroid[j] += pts[i][j];
        }
        for (double& c : centroid) c /= static_cast<double>(n);

        auto blend = [&](double alpha) {
            std::vector<double> p(n);
            for (std::size_t j = 0; j < n; ++j)
                p[j] = centroid[j] + alpha * (pts[hi][j] - centroid[j]);
            return p;
        };

        std::vector<double> refl = blend(-1.0);
        double f_refl = f(refl);
        if (f_refl < fv[lo]) {
            std::vector<double> expd = blend(-2.0);
            const double f_expd = f(expd);
            if (f_expd < f_refl) {
                pts[hi] = std::move(expd);
                fv[hi] = f_expd;
            } else {
                pts[hi] = std::move(refl);
                fv[hi] = f_refl;
            }
        } else if (f_refl < fv[next_hi]) {
            pts[hi] = std::move(refl);
            fv[hi] = f_refl;
        } else {
            std::vector<double> contr = blend(0.5);
            const double f_contr = f(contr);
            if (f_contr < fv[hi]) {
                pts[hi] = std::move(contr);
                fv[hi] = f_contr;
            } else {
                for (std::size_t i = 0; i <= n; ++i) {
                    if (i == lo) continue;
                    for (std::size_t j = 0; j < n; ++j)
                        pts[i][j] = 0.5 * (pts[i][j] + pts[lo][j]);
                    fv[i] = f(pts[i]);
                }
            }
        }
    }
    std::size_t lo = 0;
    for (std::size_t i = 1; i <= n; ++i)
        if (fv[i] < fv[lo]) lo = i;
    res.x = pts[lo];
    res.f = fv[lo];
    res.converged = false;
    return res;
}

std::vector<double> center(const std::vector<double>& series, double* mean_out) {
    const double m = mean_of(series);
    if (mean_out) *mean_out = m;
    std::vector<double> z(series.size());
    for (std::size_t i = 0; i < series.size(); ++i) z[i] = series[i] - m;
    return z;
}

double css_of(const std::vector<double>& centered, const ArmaSpec& spec) {
    const std::vector<double> u = arma_filter(centered, spec);
    double s = 0.0;
    for (double v : u) s += v * v;
    return s;
}

ArmaSpec sanitized(const ArmaSpec& raw) {
    ArmaSpec s = raw;
    s.ar = reflect_to_valid(s.ar);
    s.ma = reflect_to_valid(s.ma);
    return s;
}

}  // namespace

bool is_stationary(const ArmaSpec& spec) { return roots_outside_unit(spec.ar); }
bool is_invertible(const ArmaSpec& spec) { return roots_outside_unit(spec.ma); }

std::vector<double> reflect_to_valid(const std::vector<double>& coeffs) {
    if (coeffs.empty()) return coeffs;
    bool finite = true;
    for (double c : coeffs)
        if (!std::isfinite(c)) finite = false;
    if (!finite) return std::vector<double>(coeffs.size(), 0.0);
    if (roots_outside_unit(coeffs)) return coeffs;
    std::vector<cplx> roots = char_roots(coeffs);
    for (cplx& r : roots) {
        const double mag = std::abs(r);
        if (mag <= 1.0 + 1e-10) {
            if (mag < 1e-8)
                r = cplx(1.0001, 0.0);
            else
                r = (cplx(1.0, 0.0) / std::conj(r)) * 1.0001;
        }
    }
    std::vector<double> out = coeffs_from_roots(roots);
    out.resize(coeffs.size(), 0.0);
    return out;
}

std::vector<double> simulate_arma(const ArmaSpec& spec, std::size_t t_total, std::size_t burnin,
                                  std::uint64_t seed) {
    if (!is_stationary(spec) || !is_invertible(spec))
        throw NonStationarySpec("simulate_arma: spec violates root conditions");
    if (spec.innovation_var <= 0.0) throw NonStationarySpec("simulate_arma: variance must be > 0");
    const std::size_t p = spec.p(), q = spec.q();
    const std::size_t total = t_total + burnin;
    Rng rng(seed);
    const double sd = std::sqrt(spec.innovation_var);
    std::vector<double> x(total, 0.0), u(total, 0.0);
    for (std::size_t t = 0; t < total; ++t) {
        u[t] = sd * rng.normal();
        double v = u[t];
        for (std::size_t l = 0; l < p; ++l)
            if (t > l) v += spec.ar[l] * x[t - l - 1];
        for (std::size_t k = 0; k < q; ++k)
            if (t > k) v += spec.ma[k] * u[t - k - 1];
        x[t] = v;
    }
    return std::vector<double>(x.begin() + static_cast<std::ptrdiff_t>(burnin), x.end());
}

std::vector<double> arma_filter(const std::vector<double>& centered, const ArmaSpec& spec) {
    const std::size_t t_len = centered.size();
    const std::size_t p = spec.p(), q = spec.q();
    std::vector<double> u(t_len, 0.0);
    for (std::size_t t = 0; t < t_len; ++t) {
        double e = centered[t];
        for (std::size_t l = 0; l < p; ++l)
            if (t > l) e -= spec.ar[l] * centered[t - l - 1];
        for (std::size_t k = 0; k < q; ++k)
            if (t > k) e -= spec.ma[k] * u[t - k - 1];
        u[t] = e;
    }
    return u;
}

ArmaSpec hannan_rissanen(const std::vector<double>& series, std::size_t p, std::size_t q) {
    const std::size_t t_len = series.size();
    if (t_len < 10 * (p + q + 1))
        throw Error("hannan_rissanen: series too short for requested orders");
    std::vector<double> z = center(series, nullptr);

    ArmaSpec spec;
    if (p == 0 && q == 0) {
        spec.innovation_var = std::max(variance_of(series), 1e-300);
        return spec;
    }

    std::vector<double> innov;
    std::size_t long_order = 0;
    if (q > 0) {
        // Stage 1: long autoregression to proxy the innovations.
        long_order = std::min<std::size_t>(
            static_cast<std::size_t>(std::ceil(10.0 * std::log10(static_cast<double>(t_len)))),
            t_len / 4);
        if (t_len <= long_order + q)
            throw Error("hannan_rissanen: series shorter than long-AR order");
        const std::size_t rows = t_len - long_order;
        Matrix design(rows, long_order);
        std::vector<double> resp(rows);
        for (std::size_t r = 0; r < rows; ++r) {
            const std::size_t t = r + long_order;
            resp[r] = z[t];
            for (std::size_t l = 0; l < long_order; ++l) design(r, l) = z[t - l - 1];
        }
        const std::vector<double> phi_long = ols(design, resp);
        innov.assign(t_len, 0.0);
        for (std::size_t t = long_order; t < t_len; ++t) {
            double e = z[t];
            for (std::size_t l = 0; l < long_order; ++l) e -= phi_long[l] * z[t - l - 1];
            innov[t] = e;
        }
    }

    // Stage 2: least squares on lagged series and lagged innovation proxies.
    const std::size_t start = std::max(p, q > 0 ? long_order + q : 0);
    const std::size_t rows = t_len - start;
    Matrix design(rows, p + q);
    std::vector<double> resp(rows);
    for (std::size_t r = 0; r < rows; ++r) {
        const std::size_t t = r + start;
        resp[r] = z[t];
        for (std::size_t l = 0; l < p; ++l) design(r, l) = z[t - l - 1];
        for (std::size_t k = 0; k < q; ++k) design(r, p + k) = innov[t - k - 1];
    }
    const std::vector<double> beta = ols(design, resp);
    spec.ar.assign(beta.begin(), beta.begin() + static_cast<std::ptrdiff_t>(p));
    spec.ma.assign(beta.begin() + static_cast<std::ptrdiff_t>(p), beta.end());
    spec = sanitized(spec);
    spec.innovation_var = std::max(css_of(z, spec) / static_cast<double>(t_len), 1e-300);
    return spec;
}

ArmaFit fit_arma_css(const std::vector<double>& series, const ArmaSpec& init) {
    const std::size_t t_len = series.size();
    const std::size_t p = init.p(), q = init.q();
    if (t_len < p + q + 2) throw Error("fit_arma_css: series too short");

    ArmaFit fit;
    fit.sample_size = t_len;
    std::vector<double> z = center(series, &fit.mean);

    const ArmaSpec start = sanitized(init);
    if (p + q == 0) {
        fit.spec = start;
        fit.residuals = z;
        fit.css = css_of(z, fit.spec);
        fit.spec.innovation_var =
            std::max(fit.css / static_cast<double>(std::max<std::size_t>(t_len - 1, 1)), 1e-300);
        fit.bic = static_cast<double>(t_len) * std::log(std::max(fit.css / t_len, 1e-300));
        fit.converged = true;
        return fit;
    }

    auto pack = [&](const ArmaSpec& s) {
        std::vector<double> x(s.ar);
        x.insert(x.end(), s.ma.begin(), s.ma.end());
        return x;
    };
    auto unpack = [&](const std::vector<double>& x) {
        ArmaSpec s;
        s.ar.assign(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(p));
        s.ma.assign(x.begin() + static_cast<std::ptrdiff_t>(p), x.end());
        return sanitized(s);
    };
    auto objective = [&](const std::vector<double>& x) { return css_of(z, unpack(x)); };

    const double css_init = css_of(z, start);
    const NmResult nm = nelder_mead(objective, pack(start), 0.05, 1e-10,
                                    400 * static_cast<int>(p + q));

    // Monotone refinement: never return something worse than the start point.
    if (nm.f <= css_init) {
        fit.spec = unpack(nm.x);
        fit.css = nm.f;
    } else {
        fit.spec = start;
        fit.css = css_init;
    }
    if (!std::isfinite(fit.css))
        throw Divergence("fit_arma_css: objective not finite at optimum");
    fit.converged = true;
    fit.residuals = arma_filter(z, fit.spec);
    const std::size_t dof = t_len > p + q + 1 ? t_len - 1 - p - q : 1;
    fit.spec.innovation_var = std::max(fit.css / static_cast<double>(dof), 1e-300);
    fit.bic = static_cast<double>(t_len) * std::log(std::max(fit.css / t_len, 1e-300)) +
              static_cast<double>(p + q) * std::log(static_cast<double>(t_len));
    return fit;
}

ArmaFit fit_arma(const std::vector<double>& series, std::size_t p, std::size_t q) {
    return fit_arma_css(series, hannan_rissanen(series, p, q));
}

ArmaFit select_order_bic(const std::vector<double>& series, std::size_t p_max, std::size_t q_max) {
    bool have_best = false;
    ArmaFit best;
    std::string last_error = "no candidate fitted";
    for (std::size_t p = 0; p <= p_max; ++p) {
        for (std::size_t q = 0; q <= q_max; ++q) {
            try {
                ArmaFit fit = fit_arma(series, p, q);
                const bool better =
                    !have_best || fit.bic < best.bic - 1e-12 ||
                    (std::fabs(fit.bic - best.bic) <= 1e-12 &&
                     (p + q < best.spec.p() + best.spec.q() ||
                      (p + q == best.spec.p() + best.spec.q() && p < best.spec.p())));
                if (better) {
                    best = std::move(fit);
                    have_best = true;
                }
            } catch (const Error& e) {
                last_error = e.what();
            }
        }
    }
    if (!have_best) throw Error("select_order_bic: all candidates failed: " + last_error);
    return best;
}

const std::vector<double>& arma_residuals(const ArmaFit& fit) {
    if (!fit.converged) throw Error("arma_residuals: fit did not converge");
    return fit.residuals;
}

double next_residual(const ArmaFit& fit, const std::vector<double>& series, double next_value) {
    const std::size_t t = series.size();
    const ArmaSpec& s = fit.spec;
    if (t < s.p() || fit.residuals.size() < s.q())
        throw InsufficientHistory("next_residual: not enough history");
    double e = next_value - fit.mean;
    for (std::size_t l = 0; l < s.p(); ++l) e -= s.ar[l] * (series[t - l - 1] - fit.mean);
    for (std::size_t k = 0; k < s.q(); ++k) e -= s.ma[k] * fit.residuals[t - k - 1];
    return e;
}

}  // namespace tslab
