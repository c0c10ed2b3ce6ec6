#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "phenosim/core/rng.hpp"

namespace phenosim {

// ---------------------------------------------------------------------------
// special functions

// Regularized incomplete beta I_x(a, b) via the Lentz continued fraction.
inline double incomplete_beta(double a, double b, double x) {
  if (x < 0.0 || x > 1.0) throw std::invalid_argument("x outside [0,1]");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;

  auto cont_frac = [](double a, double b, double x) {
    const double tiny = 1e-300;
    double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0, d = 1.0 - qab * x / qap;
    if (std::abs(d) < tiny) d = tiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= 500; ++m) {
      double m2 = 2.0 * m;
      double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
      d = 1.0 + aa * d;
      if (std::abs(d) < tiny) d = tiny;
      c = 1.0 + aa / c;
      if (std::abs(c) < tiny) c = tiny;
      d = 1.0 / d;
      h *= d * c;
      aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
      d = 1.0 + aa * d;
      if (std::abs(d) < tiny) d = tiny;
      c = 1.0 + aa / c;
      if (std::abs(c) < tiny) c = tiny;
      d = 1.0 / d;
      double del = d * c;
      h *= del;
      if (std::abs(del - 1.0) < 1e-14) break;
    }
    return h;
  };

  double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                    a * std::log(x) + b * std::log1p(-x);
  double front = std::exp(ln_front);
  if (x < (a + 1.0) / (a + b + 2.0))
    return front * cont_frac(a, b, x) / a;
  return 1.0 - std::exp(std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                        b * std::log1p(-x) + a * std::log(x)) *
                   cont_frac(b, a, 1.0 - x) / b;
}

// Upper-tail probability of the F distribution.
inline double f_upper_tail(double f, double df1, double df2) {
  if (f <= 0.0) return 1.0;
  double x = df2 / (df2 + df1 * f);
  return incomplete_beta(0.5 * df2, 0.5 * df1, x);
}

// ---------------------------------------------------------------------------
// linear regression

struct RegressionResult {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  double loocv_mae = 0.0;
  std::size_t n = 0;
};

namespace detail {
inline void ols_coefficients(const std::vector<double>& x,
                             const std::vector<double>& y, double& slope,
                             double& intercept) {
  std::size_t n = x.size();
  double mean_x = 0.0, mean_y = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mean_x += x[i];
    mean_y += y[i];
  }
  mean_x /= double(n);
  mean_y /= double(n);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mean_x) * (x[i] - mean_x);
    sxy += (x[i] - mean_x) * (y[i] - mean_y);
  }
  if (sxx <= 0.0) throw std::invalid_argument("degenerate regressor");
  slope = sxy / sxx;
  intercept = mean_y - slope * mean_x;
}
}  // namespace detail

// Leave-one-out MAE by the hat-matrix shortcut e_i / (1 - h_i); the explicit
// n-refit loop lives in the test suite as its oracle.
inline double loocv_mae(const std::vector<double>& x,
                        const std::vector<double>& y) {
  std::size_t n = x.size();
  if (n < 4 || y.size() != n)
    throw std::invalid_argument("need at least 4 samples");
  double slope, intercept;
  detail::ols_coefficients(x, y, slope, intercept);
  double mean_x = 0.0;
  for (double v : x) mean_x += v;
  mean_x /= double(n);
  double sxx = 0.0;
  for (double v : x) sxx += (v - mean_x) * (v - mean_x);

  double mae = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double h = 1.0 / double(n) + (x[i] - mean_x) * (x[i] - mean_x) / sxx;
    if (h >= 1.0 - 1e-12)
      throw std::invalid_argument("leave-one-out subset degenerate");
    double residual = y[i] - (slope * x[i] + intercept);
    mae += std::abs(residual / (1.0 - h));
  }
  return mae / double(n);
}

inline RegressionResult ols_fit(const std::vector<double>& x,
                                const std::vector<double>& y) {
  if (x.size() < 3 || x.size() != y.size())
    throw std::invalid_argument("need at least 3 paired samples");
  RegressionResult res;
  res.n = x.size();
  detail::ols_coefficients(x, y, res.slope, res.intercept);
  double mean_y = 0.0;
  for (double v : y) mean_y += v;
  mean_y /= double(y.size());
  double sse = 0.0, sst = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double e = y[i] - (res.slope * x[i] + res.intercept);
    sse += e * e;
    sst += (y[i] - mean_y) * (y[i] - mean_y);
  }
  res.r2 = sst > 0.0 ? 1.0 - sse / sst : 1.0;
  res.loocv_mae = x.size() >= 4 ? loocv_mae(x, y) : 0.0;
  return res;
}

// ---------------------------------------------------------------------------
// one-way ANOVA

struct AnovaResult {
  double f_stat = 0.0;
  std::size_t df_between = 0;
  std::size_t df_within = 0;
  double p_value = 1.0;
};

inline AnovaResult anova_oneway(const std::vector<std::vector<double>>& groups) {
  if (groups.size() < 2) throw std::invalid_argument("need >= 2 groups");
  std::size_t n = 0;
  double grand = 0.0;
  for (const auto& g : groups) {
    if (g.size() < 2) throw std::invalid_argument("group with < 2 samples");
    for (double v : g) grand += v;
    n += g.size();
  }
  if (n <= groups.size()) throw std::invalid_argument("degenerate grouping");
  grand /= double(n);

  double ssb = 0.0, ssw = 0.0;
  for (const auto& g : groups) {
    double mean = 0.0;
    for (double v : g) mean += v;
    mean /= double(g.size());
    ssb += double(g.size()) * (mean - grand) * (mean - grand);
    for (double v : g) ssw += (v - mean) * (v - mean);
  }
  AnovaResult res;
  res.df_between = groups.size() - 1;
  res.df_within = n - groups.size();
  double msb = ssb / double(res.df_between);
  double msw = ssw / double(res.df_within);
  if (msw <= 0.0) {
    res.f_stat = ssb > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
    res.p_value = ssb > 0.0 ? 0.0 : 1.0;
    return res;
  }
  res.f_stat = msb / msw;
  res.p_value = f_upper_tail(res.f_stat, double(res.df_between),
                             double(res.df_within));
  return res;
}

// ---------------------------------------------------------------------------
// occlusion-compensated mass model m(X) = rho X / (1 - k (rho X)^{1/3})

struct OcclusionFit {
  double rho = 0.0;  // g per metric unit
  double k = 0.0;    // occlusion coefficient, g^{-1/3}
  double sse = 0.0;
  std::size_t n = 0;
};

inline double predict_occ(const OcclusionFit& fit, double x) {
  double naive = fit.rho * x;
  double denom = 1.0 - fit.k * std::cbrt(naive);
  if (denom <= 0.0) throw std::domain_error("outside model domain");
  return naive / denom;
}

namespace detail {

struct OcclusionEval {
  double sse;
  bool feasible;
};

inline OcclusionEval occlusion_sse(const std::vector<double>& x,
                                   const std::vector<double>& m, double rho,
                                   double k) {
  if (rho <= 0.0) return {0.0, false};
  double sse = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double naive = rho * x[i];
    double denom = 1.0 - k * std::cbrt(naive);
    if (denom < 0.05) return {0.0, false};  // domain guard
    double e = m[i] - naive / denom;
    sse += e * e;
  }
  return {sse, true};
}

}  // namespace detail

// Damped Gauss-Newton from a multistart around (through-origin slope, k = 0);
// the start with the best converged SSE wins (ties to the lowest start index).
inline OcclusionFit fit_occlusion_model(const std::vector<double>& x,
                                        const std::vector<double>& m,
                                        std::uint64_t seed = 12345) {
  if (x.size() < 5 || x.size() != m.size())
    throw std::invalid_argument("need at least 5 paired samples");
  for (std::size_t i = 0; i < x.size(); ++i)
    if (x[i] <= 0.0 || m[i] <= 0.0)
      throw std::invalid_argument("samples must be positive");

  double sxx = 0.0, sxm = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += x[i] * x[i];
    sxm += x[i] * m[i];
  }
  double rho0 = sxm / sxx;

  std::vector<std::array<double, 2>> starts{{rho0, 0.0}};
  Rng rng(seed);
  for (int s = 0; s < 8; ++s)
    starts.push_back({rho0 * rng.uniform(0.5, 2.0), rng.uniform(0.0, 0.3)});

  auto refine = [&](double rho, double k, OcclusionFit& out) {
    auto eval = detail::occlusion_sse(x, m, rho, k);
    if (!eval.feasible) return false;
    double lambda = 1e-6;
    for (int iter = 0; iter < 200; ++iter) {
      // residuals r_i = m_i - f_i and Jacobian wrt (rho, k)
      double jtj00 = 0, jtj01 = 0, jtj11 = 0, jtr0 = 0, jtr1 = 0;
      for (std::size_t i = 0; i < x.size(); ++i) {
        double naive = rho * x[i];
        double croot = std::cbrt(naive);
        double denom = 1.0 - k * croot;
        double f = naive / denom;
        double r = m[i] - f;
        // df/drho and df/dk
        double dcroot_drho = croot / (3.0 * rho);
        double df_drho =
            x[i] / denom + naive * k * dcroot_drho / (denom * denom);
        double df_dk = naive * croot / (denom * denom);
        jtj00 += df_drho * df_drho;
        jtj01 += df_drho * df_dk;
        jtj11 += df_dk * df_dk;
        jtr0 += df_drho * r;
        jtr1 += df_dk * r;
      }
      bool stepped = false;
      for (int tries = 0; tries < 30; ++tries) {
        double a00 = jtj00 * (1.0 + lambda), a11 = jtj11 * (1.0 + lambda);
        double det = a00 * a11 - jtj01 * jtj01;
        if (std::abs(det) < 1e-300) break;
        double d_rho = (a11 * jtr0 - jtj01 * jtr1) / det;
        double d_k = (a00 * jtr1 - jtj01 * jtr0) / det;
        auto cand = detail::occlusion_sse(x, m, rho + d_rho, k + d_k);
        if (cand.feasible && cand.sse <= eval.sse) {
          double step = std::abs(d_rho) / std::max(1e-30, std::abs(rho)) +
                        std::abs(d_k) / std::max(1.0, std::abs(k));
          rho += d_rho;
          k += d_k;
          eval = cand;
          lambda = std::max(1e-12, lambda * 0.5);
          stepped = true;
          if (step < 1e-10) iter = 200;  // converged
          break;
        }
        lambda *= 10.0;
      }
      if (!stepped) break;
    }
    out.rho = rho;
    out.k = k;
    out.sse = eval.sse;
    out.n = x.size();
    return true;
  };

  bool any = false;
  OcclusionFit best;
  for (const auto& s : starts) {
    OcclusionFit fit;
    if (!refine(s[0], s[1], fit)) continue;
    if (!any || fit.sse < best.sse) {
      best = fit;
      any = true;
    }
  }
  if (!any) throw std::runtime_error("occlusion model infeasible");
  return best;
}

}  // namespace phenosim
