#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "tslab/errors.hpp"
#include "tslab/lasso.hpp"
#include "tslab/numcore.hpp"
#include "tslab/rng.hpp"

using namespace tslab;

namespace {

LassoProblem random_problem(std::size_t t, std::size_t p, std::uint64_t seed,
                            double signal_coef = 0.0, std::size_t signal_count = 0) {
    Rng rng(seed);
    LassoProblem prob;
    prob.design = Matrix(t, p);
    for (std::size_t r = 0; r < t; ++r)
        for (std::size_t j = 0; j < p; ++j) prob.design(r, j) = rng.normal();
    prob.response.resize(t);
    for (std::size_t r = 0; r < t; ++r) {
        double y = rng.normal();
        for (std::size_t j = 0; j < signal_count; ++j) y += signal_coef * prob.design(r, j);
        prob.response[r] = y;
    }
    return prob;
}

// KKT residuals on the standardized scale, matching the solver's objective.
double kkt_violation(const LassoProblem& prob, const LassoFit& fit) {
    const std::size_t t = prob.design.rows();
    const std::size_t p = prob.design.cols();
    std::vector<double> resid(t);
    for (std::size_t r = 0; r < t; ++r) {
        double yhat = fit.intercept;
        for (std::size_t j = 0; j < p; ++j) yhat += fit.coefficients[j] * prob.design(r, j);
        resid[r] = prob.response[r] - yhat;
    }
    double worst = 0.0;
    for (std::size_t j = 0; j < p; ++j) {
        std::vector<double> col(t);
        for (std::size_t r = 0; r < t; ++r) col[r] = prob.design(r, j);
        const StandardizeResult s = standardize(col);
        double grad = 0.0;
        for (std::size_t r = 0; r < t; ++r) grad += s.values[r] * resid[r];
        grad /= static_cast<double>(t);
        const double mask = prob.penalty_mask.empty() ? 1.0 : prob.penalty_mask[j];
        const double lam = fit.lambda * mask;
        if (fit.coefficients[j] != 0.0)
            worst = std::max(worst, std::fabs(std::fabs(grad) - lam));
        else
            worst = std::max(worst, std::max(0.0, std::fabs(grad) - lam));
    }
    return worst;
}

}  // namespace

TEST_CASE("soft_threshold") {
    CHECK(soft_threshold(0.5, 0.5) == doctest::Approx(0.0));
    CHECK(soft_threshold(-2.0, 0.5) == doctest::Approx(-1.5));
    for (double z : {-3.0, -0.2, 0.0, 1.7})
        CHECK(soft_threshold(z, 0.0) == doctest::Approx(z));
}

TEST_CASE("lambda at lambda_max zeroes all penalized coefficients") {
    const LassoProblem prob = random_problem(80, 12, 21, 1.5, 3);
    const double lmax = lambda_max(prob);
    const LassoFit fit = fit_lasso(prob, lmax * (1.0 + 1e-12));
    CHECK(fit.df == 0);
    for (double c : fit.coefficients) CHECK(c == 0.0);
}

TEST_CASE("orthonormal design matches the soft-threshold closed form") {
    // Columns with exact X'X/T = I: scaled indicator blocks.
    const std::size_t t = 64, p = 8;
    const std::size_t block = t / p;
    LassoProblem prob;
    prob.design = Matrix(t, p);
    prob.standardize = false;
    const double scale = std::sqrt(static_cast<double>(t) / static_cast<double>(block));
    for (std::size_t j = 0; j < p; ++j)
        for (std::size_t r = j * block; r < (j + 1) * block; ++r)
            prob.design(r, j) = scale * ((r % 2 == 0) ? 1.0 : -1.0);
    // verify orthonormality before relying on it
    for (std::size_t a = 0; a < p; ++a)
        for (std::size_t b = 0; b < p; ++b) {
            double dot = 0.0;
            for (std::size_t r = 0; r < t; ++r) dot += prob.design(r, a) * prob.design(r, b);
            CHECK(dot / t == doctest::Approx(a == b ? 1.0 : 0.0).epsilon(1e-12));
        }
    Rng rng(5);
    prob.response.resize(t);
    for (std::size_t r = 0; r < t; ++r) prob.response[r] = rng.normal();
    // centered response, zero column means -> closed form applies exactly
    const double ybar = mean_of(prob.response);
    for (double& v : prob.response) v -= ybar;

    const double lambda = 0.05;
    const LassoFit fit = fit_lasso(prob, lambda);
    for (std::size_t j = 0; j < p; ++j) {
        double dot = 0.0;
        for (std::size_t r = 0; r < t; ++r) dot += prob.design(r, j) * prob.response[r];
        const double expected = soft_threshold(dot / t, lambda);
        CHECK(fit.coefficients[j] == doctest::Approx(expected).epsilon(1e-8));
    }
}

TEST_CASE("lambda zero equals least squares") {
    LassoProblem prob = random_problem(60, 5, 33, 2.0, 2);
    const LassoFit fit = fit_lasso(prob, 0.0);
    // oracle: least squares with intercept column
    Matrix design(60, 6);
    for (std::size_t r = 0; r < 60; ++r) {
        design(r, 0) = 1.0;
        for (std::size_t j = 0; j < 5; ++j) design(r, j + 1) = prob.design(r, j);
    }
    const std::vector<double> beta = oracles::least_squares(design, prob.response);
    CHECK(fit.intercept == doctest::Approx(beta[0]).epsilon(1e-6));
    for (std::size_t j = 0; j < 5; ++j)
        CHECK(fit.coefficients[j] == doctest::Approx(beta[j + 1]).epsilon(1e-6));
}

TEST_CASE("KKT conditions hold on random problems") {
    for (std::uint64_t seed = 100; seed < 140; ++seed) {
        LassoProblem prob = random_problem(50 + seed % 60, 5 + seed % 20, seed, 1.0, 3);
        const double lmax = lambda_max(prob);
        const LassoFit fit = fit_lasso(prob, 0.3 * lmax);
        REQUIRE(fit.converged);
        CHECK(kkt_violation(prob, fit) < 1e-5);
    }
}

TEST_CASE("objective never increases across sweeps") {
    LassoProblem prob = random_problem(120, 30, 71, 1.0, 5);
    const LassoFit fit = fit_lasso(prob, 0.05 * lambda_max(prob));
    for (std::size_t k = 1; k < fit.objective_trace.size(); ++k)
        CHECK(fit.objective_trace[k] <= fit.objective_trace[k - 1] + 1e-12);
}

TEST_CASE("penalty mask leaves unpenalized columns in the model") {
    LassoProblem prob = random_problem(80, 6, 13, 2.0, 2);
    prob.penalty_mask.assign(6, 1.0);
    prob.penalty_mask[0] = 0.0;
    const double lmax = lambda_max(prob);
    const LassoFit fit = fit_lasso(prob, lmax * 1.0001);
    for (std::size_t j = 1; j < 6; ++j) CHECK(fit.coefficients[j] == 0.0);
    CHECK(fit.coefficients[0] != 0.0);  // unpenalized column stays free
}

TEST_CASE("scale equivariance of selection") {
    LassoProblem prob = random_problem(100, 10, 44, 1.2, 3);
    const std::vector<double> grid = lambda_grid(prob, 40, 1e-3);
    const LassoFit base = tune_bic(prob, grid);

    LassoProblem scaled = prob;
    for (std::size_t r = 0; r < scaled.design.rows(); ++r) scaled.design(r, 2) *= 37.5;
    const LassoFit rescaled = tune_bic(scaled, lambda_grid(scaled, 40, 1e-3));

    for (std::size_t j = 0; j < 10; ++j)
        CHECK((base.coefficients[j] != 0.0) == (rescaled.coefficients[j] != 0.0));
    CHECK(rescaled.coefficients[2] == doctest::Approx(base.coefficients[2] / 37.5).epsilon(1e-4));
}

TEST_CASE("lambda_grid layout") {
    LassoProblem prob = random_problem(50, 4, 9);
    const double lmax = lambda_max(prob);
    const std::vector<double> two = lambda_grid(prob, 2, 0.1);
    CHECK(two.size() == 2);
    CHECK(two[0] == doctest::Approx(lmax));
    CHECK(two[1] == doctest::Approx(0.1 * lmax));

    const std::vector<double> grid = lambda_grid(prob, 25, 1e-3);
    for (std::size_t k = 1; k < grid.size(); ++k) {
        CHECK(grid[k] < grid[k - 1]);
        CHECK(grid[k] / grid[k - 1] ==
              doctest::Approx(grid[1] / grid[0]).epsilon(1e-12));
    }

    LassoProblem unpen = prob;
    unpen.penalty_mask.assign(4, 0.0);
    CHECK_THROWS_AS(lambda_grid(unpen, 10, 0.5), AllUnpenalized);
}

TEST_CASE("fit at the top of the grid keeps only unpenalized columns") {
    LassoProblem prob = random_problem(70, 8, 51, 1.0, 2);
    prob.penalty_mask.assign(8, 1.0);
    prob.penalty_mask[3] = 0.0;
    prob.penalty_mask[6] = 0.0;
    const std::vector<double> grid = lambda_grid(prob, 30, 1e-2);
    const LassoFit fit = fit_lasso(prob, grid[0] * (1 + 1e-10));
    std::size_t nonzero = 0;
    for (std::size_t j = 0; j < 8; ++j)
        if (fit.coefficients[j] != 0.0) {
            ++nonzero;
            CHECK(prob.penalty_mask[j] == 0.0);
        }
    CHECK(nonzero == 2);
}

TEST_CASE("warm-started path equals cold starts") {
    LassoProblem prob = random_problem(90, 15, 61, 1.5, 4);
    const std::vector<double> grid = lambda_grid(prob, 30, 1e-3);
    std::optional<std::vector<double>> warm;
    for (double lambda : grid) {
        const LassoFit w = fit_lasso(prob, lambda, warm);
        const LassoFit c = fit_lasso(prob, lambda);
        warm = w.coefficients;
        for (std::size_t j = 0; j < 15; ++j)
            CHECK(w.coefficients[j] == doctest::Approx(c.coefficients[j]).epsilon(1e-6));
    }
}

TEST_CASE("tune_bic: pure noise stays sparse") {
    int sparse = 0;
    const int n_seeds = 30;
    for (int k = 0; k < n_seeds; ++k) {
        LassoProblem prob = random_problem(200, 50, derive_seed(7100, k));
        const LassoFit fit = tune_bic(prob, default_lambda_grid(prob));
        if (fit.df <= 3) ++sparse;
    }
    CHECK(sparse >= 27);  // 90% of seeds
}

TEST_CASE("tune_bic finds a single strong signal") {
    LassoProblem prob = random_problem(150, 20, 83);
    Rng rng(84);
    for (std::size_t r = 0; r < 150; ++r)
        prob.response[r] = 3.0 * prob.design(r, 0) + 0.1 * rng.normal();
    const LassoFit fit = tune_bic(prob, default_lambda_grid(prob));
    CHECK(fit.coefficients[0] == doctest::Approx(3.0).epsilon(0.2 / 3.0));
    CHECK(fit.coefficients[0] != 0.0);
}

TEST_CASE("tune_bic with a single grid point returns that fit") {
    LassoProblem prob = random_problem(60, 6, 91, 1.0, 1);
    const double lambda = 0.4 * lambda_max(prob);
    const LassoFit tuned = tune_bic(prob, {lambda});
    const LassoFit direct = fit_lasso(prob, lambda);
    CHECK(tuned.lambda == doctest::Approx(lambda));
    for (std::size_t j = 0; j < 6; ++j)
        CHECK(tuned.coefficients[j] == doctest::Approx(direct.coefficients[j]));
}

TEST_CASE("tune_bic picks the grid minimum") {
    LassoProblem prob = random_problem(100, 12, 97, 1.0, 3);
    const std::vector<double> grid = lambda_grid(prob, 25, 1e-3);
    const LassoFit best = tune_bic(prob, grid);
    for (double lambda : grid) {
        const LassoFit fit = fit_lasso(prob, lambda);
        CHECK(best.bic <= fit.bic + 1e-9);
    }
}
