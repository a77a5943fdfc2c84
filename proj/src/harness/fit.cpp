#include "klrl/harness/fit.hpp"

#include <Eigen/QR>

#include <cmath>
#include <cstdio>

namespace klrl::harness {

std::string to_string(GrowthModel model) {
  switch (model) {
    case GrowthModel::log: return "log";
    case GrowthModel::sqrt: return "sqrt";
    case GrowthModel::inconclusive: return "inconclusive";
  }
  return "inconclusive";
}

namespace {

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double rss = 0.0;
};

LineFit fit_line(const Vector& x, const Vector& y) {
  Matrix design(x.size(), 2);
  design.col(0) = x;
  design.col(1).setOnes();
  const Vector coef = design.colPivHouseholderQr().solve(y);
  return {coef(0), coef(1), (design * coef - y).squaredNorm()};
}

}  // namespace

FitResult fit_regret_models(std::span<const double> cumulative, Index burn_in) {
  if (burn_in < 0) throw InvalidInput("fit_regret_models: burn-in must be >= 0");
  const auto n = static_cast<Index>(cumulative.size());
  if (n <= burn_in + 10) {
    throw InvalidInput("fit_regret_models: need more than burn_in + 10 points (have " +
                       std::to_string(n) + ")");
  }
  const Index m = n - burn_in;
  Vector t_log(m);
  Vector t_sqrt(m);
  Vector y(m);
  for (Index i = 0; i < m; ++i) {
    const auto t = static_cast<double>(burn_in + i + 1);
    t_log(i) = std::log(t);
    t_sqrt(i) = std::sqrt(t);
    y(i) = cumulative[static_cast<size_t>(burn_in + i)];
  }
  if (!y.allFinite()) throw InvalidInput("fit_regret_models: non-finite regret value");

  const LineFit lf = fit_line(t_log, y);
  const LineFit sf = fit_line(t_sqrt, y);
  FitResult out{lf.slope, lf.intercept, sf.slope, sf.intercept, lf.rss, sf.rss,
                GrowthModel::inconclusive, m};

  const double total = (y.array() - y.mean()).matrix().squaredNorm();
  const double scale = std::max(1.0, y.squaredNorm());
  if (total <= 1e-20 * scale) return out;
  const double tie = 1e-12 * total;
  if (lf.rss + tie < sf.rss) out.preferred = GrowthModel::log;
  else if (sf.rss + tie < lf.rss) out.preferred = GrowthModel::sqrt;
  return out;
}

std::string fit_csv_header() {
  return "points,log_a,log_b,log_rss,sqrt_c,sqrt_d,sqrt_rss,preferred";
}

std::string to_csv_row(const FitResult& fit) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%lld,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,",
                static_cast<long long>(fit.points), fit.log_a, fit.log_b, fit.log_rss, fit.sqrt_c,
                fit.sqrt_d, fit.sqrt_rss);
  return buf + to_string(fit.preferred);
}

}  // namespace klrl::harness
