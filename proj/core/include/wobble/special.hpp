#pragma once

namespace wobble {

/// Inverse standard normal CDF, Wichura's AS241 (PPND16). Relative accuracy
/// about 1e-16 over (0, 1). Throws for p outside (0, 1).
double inv_norm_cdf(double p);

/// Standard normal CDF via erfc.
double norm_cdf(double x) noexcept;

/// I_x(a, b), the regularized incomplete beta function, by Lentz's continued
/// fraction with the symmetry switch at x = (a + 1) / (a + b + 2).
double reg_incomplete_beta(double a, double b, double x);

/// P(s, x) and Q(s, x) = 1 - P(s, x). Series below x = s + 1, continued
/// fraction above.
double reg_incomplete_gamma_lower(double s, double x);
double reg_incomplete_gamma_upper(double s, double x);

/// Upper tail of the F(d1, d2) distribution at f.
double f_dist_upper(double f, double d1, double d2);

/// Upper tail of chi-square with `df` degrees of freedom at x.
double chi2_upper(double x, double df);

/// Upper tail of the limiting Kolmogorov distribution, P(K > lambda).
/// Uses at least 100 terms of whichever series converges at lambda.
double kolmogorov_upper(double lambda);

}  // namespace wobble
