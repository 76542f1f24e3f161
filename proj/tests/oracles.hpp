#pragma once

#include "crawlsched/params.hpp"

namespace testing_oracles {

/// Regularized lower incomplete gamma P(order+1, x), an independent route
/// to the residual function.
double gamma_p_residual(int order, double x);

/// Quantile of the chi-squared distribution with dof degrees of freedom.
double chi2_quantile(double p, int dof);

/// psi and w recomputed by numerically integrating the first-CIS renewal
/// recursion on a marching grid (independent of the closed-form series).
/// Requires beta substantially larger than iota/grid_n.
double psi_quadrature(double iota, const crawl::PageParams& p, int grid_n = 2048);
double w_quadrature(double iota, const crawl::PageParams& p, int grid_n = 2048);

}  // namespace testing_oracles
