#pragma once

#include <cstdint>
#include <functional>
#include <vector>

namespace sbi {

double mean_of(const std::vector<double>& x);
double sd_of(const std::vector<double>& x);  // sample sd (n-1)
double quantile_of(std::vector<double> x, double q);
double lag1_autocorr(const std::vector<double>& x);

// Two-sample Kolmogorov-Smirnov statistic.
double ks_two_sample(std::vector<double> a, std::vector<double> b);
// One-sample KS statistic against a CDF.
double ks_one_sample(std::vector<double> x, const std::function<double(double)>& cdf);
// Asymptotic p-value for a one-sample KS statistic at sample size n.
double ks_p_value(double d, std::size_t n);

// Wasserstein-1 between two empirical distributions (quantile coupling).
double wasserstein1(std::vector<double> a, std::vector<double> b);

// Gelman-Rubin potential scale reduction over chains of equal length.
double gelman_rubin(const std::vector<std::vector<double>>& chains);

// Upper-tail p-value of a chi-square statistic with k degrees of freedom.
double chi2_p_value(double stat, double dof);

struct Histogram {
  std::vector<double> edges;   // size bins+1
  std::vector<double> counts;  // size bins
};
Histogram histogram(const std::vector<double>& x, double lo, double hi, int bins);

}  // namespace sbi
