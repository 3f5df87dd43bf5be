#pragma once

#include <span>
#include <vector>

namespace qross::stats {

double mean(std::span<const double> xs);
// Population (divide-by-n) standard deviation.
double population_std(std::span<const double> xs);
double sample_std(std::span<const double> xs);
// Linear-interpolation quantile on sorted data, q in [0, 1].
double quantile_sorted(std::span<const double> sorted, double q);
// Average ranks (ties share the mean rank).
std::vector<double> ranks(std::span<const double> xs);
double pearson(std::span<const double> xs, std::span<const double> ys);
double spearman(std::span<const double> xs, std::span<const double> ys);

double normal_cdf(double z);
double normal_pdf(double z);

}  // namespace qross::stats
