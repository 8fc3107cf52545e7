#include "rerand/sampling.hpp"

#include <cmath>
#include <limits>

#include "rerand/special.hpp"

namespace rerand {

double Rng::gaussian() { return normal_quantile(uniform()); }

double Rng::laplace() {
  // inverse CDF, scaled to unit variance (standard Laplace has variance 2)
  double u = uniform();
  double raw = (u < 0.5) ? std::log(2.0 * u) : -std::log(2.0 * (1.0 - u));
  return raw / std::sqrt(2.0);
}

double Rng::student_t(double dof) {
  double z = gaussian();
  double u = uniform();
  // chi2 draw by inverse CDF; dof 2 has the closed form -2 log(1-u)
  double c = (dof == 2.0) ? -2.0 * std::log1p(-u) : chi2_quantile(u, dof);
  return z / std::sqrt(c / dof);
}

ZSampler ZSampler::parse(const std::string& text) {
  ZSampler s;
  if (text == "gaussian") {
    s.family = Family::gaussian;
  } else if (text == "laplace") {
    s.family = Family::laplace;
  } else if (text.rfind("t:", 0) == 0) {
    s.family = Family::student_t;
    try {
      s.dof = std::stod(text.substr(2));
    } catch (const std::exception&) {
      throw validation_error("z distribution: cannot parse dof in '" + text + "'");
    }
    require(s.dof > 0.0, "z distribution: student t dof must be positive");
  } else {
    throw validation_error("unknown z distribution '" + text +
                           "' (expected gaussian|laplace|t:<dof>)");
  }
  return s;
}

std::string ZSampler::name() const {
  switch (family) {
    case Family::gaussian: return "gaussian";
    case Family::laplace: return "laplace";
    case Family::student_t: return "t:" + std::to_string(dof);
    case Family::custom: return "custom";
  }
  return "?";
}

double ZSampler::excess_kurtosis() const {
  switch (family) {
    case Family::gaussian: return 0.0;
    case Family::laplace: return 3.0;
    case Family::student_t:
      if (dof > 4.0) return 6.0 / (dof - 4.0);
      return std::numeric_limits<double>::quiet_NaN();
    case Family::custom: {
      if (table.size() == 0) return std::numeric_limits<double>::quiet_NaN();
      double m = table.mean();
      double v = (table.array() - m).square().mean();
      double k4 = (table.array() - m).pow(4).mean();
      return k4 / (v * v) - 3.0;
    }
  }
  return 0.0;
}

void ZSampler::validate() const {
  if (family == Family::student_t)
    require(dof > 0.0, "z distribution: student t dof must be positive");
  if (family == Family::custom)
    require(table.rows() > 0, "z distribution: custom table is empty");
}

void ZSampler::draw(Rng& rng, Eigen::Ref<Vector> z) const {
  const Index n = z.size();
  switch (family) {
    case Family::gaussian:
      for (Index i = 0; i < n; ++i) z[i] = rng.gaussian();
      return;
    case Family::laplace:
      for (Index i = 0; i < n; ++i) z[i] = rng.laplace();
      return;
    case Family::student_t: {
      double scale = 1.0;
      if (standardized && dof > 2.0) scale = std::sqrt((dof - 2.0) / dof);
      for (Index i = 0; i < n; ++i) z[i] = scale * rng.student_t(dof);
      return;
    }
    case Family::custom: {
      require(table.cols() == n, "z distribution: custom table has " +
                                     std::to_string(table.cols()) +
                                     " columns, expected " + std::to_string(n));
      Index row = static_cast<Index>(rng.below(static_cast<std::uint64_t>(table.rows())));
      z = table.row(row).transpose();
      return;
    }
  }
}

}  // namespace rerand
