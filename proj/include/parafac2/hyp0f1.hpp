#ifndef PARAFAC2_HYP0F1_HPP_
#define PARAFAC2_HYP0F1_HPP_

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <utility>
#include <vector>

#include "parafac2/common.hpp"

// Evaluation of log 0F1(J/2; S^2/4) for a diagonal matrix argument given by
// singular values S, as needed by the matrix von Mises-Fisher normalizer.
//
// Three regimes, blended smoothly so downstream coordinate-ascent sees one
// continuous function of S:
//   - an exact truncated zonal-polynomial series (small to moderate ||S||),
//   - a per-singular-value decomposition with exact scalar Bessel factors and
//     pairwise interaction terms (Laplace regime, arbitrary magnitudes),
//   - closed-form large-S asymptotics inside the scalar factors.
// Gradients are central finite differences of the same composite, so the
// reported moments are the exact gradient of the reported log-normalizer.

namespace parafac2::hyp0f1 {

namespace detail {

inline double logaddexp(double a, double b) {
  if (a == -std::numeric_limits<double>::infinity()) return b;
  if (b == -std::numeric_limits<double>::infinity()) return a;
  const double m = std::max(a, b);
  return m + std::log1p(std::exp(-std::abs(a - b)));
}

// --- scalar log 0F1(c; s^2/4) ----------------------------------------------

inline double log0f1_scalar_series(double c, double s) {
  const double x = 0.25 * s * s;
  if (x == 0.0) return 0.0;
  double log_term = 0.0;
  double log_sum = 0.0;
  const int kmax = 20000;
  for (int k = 0; k < kmax; ++k) {
    log_term += std::log(x) - std::log(c + k) - std::log(k + 1.0);
    log_sum = logaddexp(log_sum, log_term);
    if (log_term < log_sum - 42.0 && (k + 1.0) * (k + 1.0) > x) return log_sum;
  }
  throw Error(ErrorCode::ApproximationOutOfRange,
              "scalar 0F1 series did not stagnate");
}

// log I_nu(nu z) by Olver's uniform asymptotic expansion (DLMF 10.41.3).
inline double log_bessel_i_olver(double nu, double z) {
  const double w = std::sqrt(1.0 + z * z);
  const double eta = w + std::log(z / (1.0 + w));
  const double t = 1.0 / w;
  const double t2 = t * t;
  const double u1 = t * (3.0 - 5.0 * t2) / 24.0;
  const double u2 = t2 * (81.0 - 462.0 * t2 + 385.0 * t2 * t2) / 1152.0;
  const double u3 = t * t2 *
                    (30375.0 - 369603.0 * t2 + 765765.0 * t2 * t2 -
                     425425.0 * t2 * t2 * t2) /
                    414720.0;
  const double u4 = t2 * t2 *
                    (4465125.0 - 94121676.0 * t2 + 349922430.0 * t2 * t2 -
                     446185740.0 * t2 * t2 * t2 + 185910725.0 * t2 * t2 * t2 * t2) /
                    39813120.0;
  const double corr = 1.0 + u1 / nu + u2 / (nu * nu) + u3 / (nu * nu * nu) +
                      u4 / (nu * nu * nu * nu);
  return nu * eta - 0.5 * std::log(2.0 * M_PI * nu) - 0.5 * std::log(w) +
         std::log(corr);
}

// log I_nu(s) for s >> nu^2 (Hankel's expansion), adaptive term count.
inline double log_bessel_i_large_arg(double nu, double s) {
  const double mu = 4.0 * nu * nu;
  double term = 1.0;
  double sum = 1.0;
  double prev_abs = std::numeric_limits<double>::infinity();
  for (int k = 1; k <= 12; ++k) {
    term *= -(mu - (2.0 * k - 1.0) * (2.0 * k - 1.0)) / (8.0 * s * k);
    if (std::abs(term) >= prev_abs) break;  // asymptotic series turning point
    sum += term;
    prev_abs = std::abs(term);
  }
  return s - 0.5 * std::log(2.0 * M_PI * s) + std::log(sum);
}

inline double log0f1_scalar(double c, double s) {
  s = std::abs(s);
  if (!(std::isfinite(c) && std::isfinite(s)))
    throw Error(ErrorCode::ApproximationOutOfRange, "non-finite 0F1 argument");
  if (s > 1e12)
    throw Error(ErrorCode::ApproximationOutOfRange,
                "singular value above supported envelope 1e12");
  const double nu = c - 1.0;
  if (s <= 50.0 || (nu < 8.0 && s <= 600.0)) return log0f1_scalar_series(c, s);
  const double log_i = (nu >= 8.0) ? log_bessel_i_olver(nu, s / nu)
                                   : log_bessel_i_large_arg(nu, s);
  return std::lgamma(c) + log_i - nu * std::log(0.5 * s);
}

// d/ds log 0F1(c; s^2/4) = I_c(s)/I_{c-1}(s); exact series ratio in the
// series regime, Bessel ratio from the matching asymptotic otherwise.
inline double dlog0f1_scalar(double c, double s) {
  s = std::abs(s);
  if (s == 0.0) return 0.0;
  const double nu = c - 1.0;
  double g;
  if (s <= 50.0 || (nu < 8.0 && s <= 600.0)) {
    g = (s / (2.0 * c)) *
        std::exp(log0f1_scalar_series(c + 1.0, s) - log0f1_scalar_series(c, s));
  } else {
    const double log_hi = (nu + 1.0 >= 8.0) ? log_bessel_i_olver(nu + 1.0, s / (nu + 1.0))
                                            : log_bessel_i_large_arg(nu + 1.0, s);
    const double log_lo = (nu >= 8.0) ? log_bessel_i_olver(nu, s / nu)
                                      : log_bessel_i_large_arg(nu, s);
    g = std::exp(log_hi - log_lo);
  }
  return std::clamp(g, 0.0, 1.0 - 1e-15);
}

// --- zonal polynomial series -------------------------------------------------

using Partition = std::vector<int>;  // descending parts, no trailing zeros

inline long double rho_stat(const Partition& p) {
  long double r = 0.0L;
  for (std::size_t i = 0; i < p.size(); ++i)
    r += static_cast<long double>(p[i]) * (p[i] - static_cast<long double>(i + 1));
  return r;
}

// true iff a is dominated by b (same weight assumed): partial sums of a <= b's
inline bool dominated(const Partition& a, const Partition& b) {
  int sa = 0, sb = 0;
  const std::size_t n = std::max(a.size(), b.size());
  for (std::size_t i = 0; i < n; ++i) {
    sa += i < a.size() ? a[i] : 0;
    sb += i < b.size() ? b[i] : 0;
    if (sa > sb) return false;
  }
  return true;
}

inline void enumerate_partitions(int k, int max_parts, int max_first, Partition& cur,
                                 std::vector<Partition>& out) {
  if (k == 0) {
    out.push_back(cur);
    return;
  }
  if (max_parts == 0) return;
  for (int first = std::min(k, max_first); first >= 1; --first) {
    cur.push_back(first);
    enumerate_partitions(k - first, max_parts - 1, first, cur, out);
    cur.pop_back();
  }
}

// number of distinct arrangements of partition lam in `slots` positions
inline double arrangements(const Partition& lam, int slots) {
  if (static_cast<int>(lam.size()) > slots) return 0.0;
  double log_count = std::lgamma(slots + 1.0) -
                     std::lgamma(slots - static_cast<double>(lam.size()) + 1.0);
  std::size_t i = 0;
  while (i < lam.size()) {
    std::size_t j = i;
    while (j < lam.size() && lam[j] == lam[i]) ++j;
    log_count -= std::lgamma(static_cast<double>(j - i) + 1.0);
    i = j;
  }
  return std::exp(log_count);
}

inline double log_pochhammer_partition(double a, const Partition& p) {
  double r = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double base = a - 0.5 * static_cast<double>(i);
    r += std::lgamma(base + p[i]) - std::lgamma(base);
  }
  return r;
}

// log C_kappa(I_p) with p = number of parts of kappa (classical closed form)
inline double log_zonal_at_identity(const Partition& kappa) {
  const int p = static_cast<int>(kappa.size());
  int k = 0;
  for (int part : kappa) k += part;
  double r = 2.0 * k * std::log(2.0) + std::lgamma(k + 1.0) +
             log_pochhammer_partition(0.5 * p, kappa);
  for (int i = 1; i <= p; ++i)
    for (int j = i + 1; j <= p; ++j)
      r += std::log(2.0 * kappa[i - 1] - 2.0 * kappa[j - 1] - i + j);
  for (int i = 1; i <= p; ++i)
    r -= std::lgamma(2.0 * kappa[i - 1] + p - i + 1.0);
  return r;
}

// Aggregated zonal weights for one degree at fixed series parameter c:
//   W_lambda = sum_kappa C_{kappa,lambda} / (c)_kappa, stored times e^{beta}.
struct DegreeWeights {
  std::vector<Partition> partitions;  // descending lex order
  std::vector<double> scaled_weight;  // per lambda, includes e^{beta} shift
  double beta = 0.0;                  // log-scale shift
};

// Builds the monomial-basis zonal coefficients of all partitions of degree k
// (at most max_parts parts) via the Laplace-Beltrami recurrence, normalized
// through C_kappa(I_p), then folds in (c)_kappa to their aggregate weights.
inline DegreeWeights build_degree_weights(int k, int max_parts, double c) {
  DegreeWeights dw;
  Partition cur;
  enumerate_partitions(k, max_parts, k, cur, dw.partitions);
  // descending lexicographic order is compatible with dominance
  std::sort(dw.partitions.begin(), dw.partitions.end(),
            [](const Partition& a, const Partition& b) { return a > b; });
  const int n = static_cast<int>(dw.partitions.size());
  std::map<Partition, int> index;
  for (int i = 0; i < n; ++i) index[dw.partitions[i]] = i;

  std::vector<double> lpoch(n);
  double beta = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i) {
    lpoch[i] = log_pochhammer_partition(c, dw.partitions[i]);
    beta = std::max(beta, lpoch[i]);
  }
  dw.beta = beta;
  dw.scaled_weight.assign(n, 0.0);

  std::vector<double> craw(n);
  std::vector<int> dominated_idx;
  for (int a = 0; a < n; ++a) {
    const Partition& kappa = dw.partitions[a];
    const long double rho_kappa = rho_stat(kappa);
    dominated_idx.clear();
    craw[a] = 1.0;
    dominated_idx.push_back(a);
    for (int bi = a + 1; bi < n; ++bi) {
      const Partition& lam = dw.partitions[bi];
      if (!dominated(lam, kappa)) continue;
      // sum over single moves lam -> mu with lam < mu <= kappa
      double acc = 0.0;
      const int len = static_cast<int>(lam.size());
      Partition mu;
      for (int j = 1; j < len; ++j) {
        for (int i = 0; i < j; ++i) {
          for (int t = 1; t <= lam[j]; ++t) {
            mu.assign(lam.begin(), lam.end());
            mu[i] += t;
            mu[j] -= t;
            std::sort(mu.begin(), mu.end(), std::greater<int>());
            while (!mu.empty() && mu.back() == 0) mu.pop_back();
            if (!dominated(mu, kappa)) continue;
            auto it = index.find(mu);
            if (it == index.end()) continue;  // more parts than cap: weight 0
            acc += ((lam[i] + t) - (lam[j] - t)) * craw[it->second];
          }
        }
      }
      const long double denom = rho_kappa - rho_stat(lam);
      craw[bi] = acc / static_cast<double>(denom);
      if (craw[bi] != 0.0) dominated_idx.push_back(bi);
    }
    // pin the scale through C_kappa(I_p), p = #parts
    const int p = static_cast<int>(kappa.size());
    double chat = 0.0;
    for (int idx : dominated_idx) {
      if (static_cast<int>(dw.partitions[idx].size()) <= p)
        chat += craw[idx] * arrangements(dw.partitions[idx], p);
    }
    const double log_scale = log_zonal_at_identity(kappa) - std::log(chat);
    const double factor = std::exp(log_scale + beta - lpoch[a]);
    for (int idx : dominated_idx) dw.scaled_weight[idx] += factor * craw[idx];
  }
  return dw;
}

struct ZonalCache {
  std::mutex mu;
  // key: (max_parts, c in half-integer steps); value: weights per degree.
  // unique_ptr elements keep built tables address-stable while the vector grows.
  std::map<std::pair<int, long>, std::vector<std::unique_ptr<DegreeWeights>>> tables;
};

inline ZonalCache& zonal_cache() {
  static ZonalCache cache;
  return cache;
}

inline int zonal_degree_budget(int max_parts) {
  switch (max_parts) {
    case 1: return 400;
    case 2: return 300;
    case 3: return 210;
    case 4: return 150;
    default: return 70;
  }
}

// Exact truncated zonal series for log 0F1(c; diag(x)), x_i = s_i^2/4.
inline double log0f1_zonal(double c, const std::vector<double>& svals) {
  const int m = static_cast<int>(svals.size());
  std::vector<double> x(svals.size());
  double xmax = 0.0;
  for (std::size_t i = 0; i < svals.size(); ++i) {
    x[i] = 0.25 * svals[i] * svals[i];
    xmax = std::max(xmax, x[i]);
  }
  if (xmax == 0.0) return 0.0;
  const double log_eta = std::log(xmax);
  std::vector<double> y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] / xmax;

  const int budget = zonal_degree_budget(m);
  // power table for monomial evaluation
  std::vector<std::vector<double>> ypow(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    ypow[i].resize(budget + 1);
    ypow[i][0] = 1.0;
    for (int e = 1; e <= budget; ++e) ypow[i][e] = ypow[i][e - 1] * y[i];
  }

  auto& cache = zonal_cache();
  const long ckey = std::lround(c * 2.0);
  std::vector<std::unique_ptr<DegreeWeights>>* table;
  {
    std::lock_guard<std::mutex> lock(cache.mu);
    table = &cache.tables[{m, ckey}];
  }

  double total = 0.0;  // log of accumulated sum; degree-0 term is 1
  int stagnant = 0;
  std::vector<int> perm(m);
  for (int k = 1; k <= budget; ++k) {
    const DegreeWeights* dwp;
    {
      std::lock_guard<std::mutex> lock(cache.mu);
      while (static_cast<int>(table->size()) < k)
        table->push_back(std::make_unique<DegreeWeights>(
            build_degree_weights(static_cast<int>(table->size()) + 1, m, c)));
      dwp = (*table)[k - 1].get();
    }
    const DegreeWeights& dw = *dwp;
    double inner = 0.0;
    for (std::size_t li = 0; li < dw.partitions.size(); ++li) {
      const double w = dw.scaled_weight[li];
      if (w == 0.0) continue;
      const Partition& lam = dw.partitions[li];
      if (static_cast<int>(lam.size()) > m) continue;
      // monomial m_lambda(y): sum over distinct arrangements
      std::fill(perm.begin(), perm.end(), 0);
      for (std::size_t i = 0; i < lam.size(); ++i) perm[i] = lam[i];
      std::sort(perm.begin(), perm.end());
      double mono = 0.0;
      do {
        double prod = 1.0;
        for (int i = 0; i < m; ++i) prod *= ypow[i][perm[i]];
        mono += prod;
      } while (std::next_permutation(perm.begin(), perm.end()));
      inner += w * mono;
    }
    double log_term = -std::numeric_limits<double>::infinity();
    if (inner > 0.0)
      log_term = std::log(inner) - dw.beta + k * log_eta - std::lgamma(k + 1.0);
    total = logaddexp(total, log_term);
    if (log_term < total - 42.0) {
      if (++stagnant >= 3) return total;
    } else {
      stagnant = 0;
    }
  }
  throw Error(ErrorCode::ApproximationOutOfRange,
              "zonal series did not stagnate within degree budget");
}

// --- blended composite --------------------------------------------------------

inline double smoothstep(double x) {
  x = std::clamp(x, 0.0, 1.0);
  return x * x * (3.0 - 2.0 * x);
}

// Pair interaction at dimension jp: exact M=2 value minus its own scalar
// factors. Exact series for moderate norms, Laplace / scale-split beyond.
inline double pair_interaction(int jp, double a, double b) {
  const double u2 = std::hypot(a, b);
  const double w_series = 1.0 - smoothstep((u2 - 60.0) / 15.0);
  double val = 0.0;
  if (w_series > 0.0) {
    const double exact = log0f1_zonal(0.5 * jp, {a, b});
    val += w_series * (exact - log0f1_scalar(0.5 * (jp - 1), a) -
                       log0f1_scalar(0.5 * (jp - 1), b));
  }
  if (w_series < 1.0) {
    const double hi = std::max(a, b), lo = std::min(a, b);
    const double ratio = hi > 0.0 ? lo / hi : 1.0;
    const double w_split = 1.0 - smoothstep((ratio - 0.10) / 0.15);
    double approx = 0.0;
    if (w_split > 0.0) {
      const double split =
          log0f1_scalar(0.5 * jp, hi) - log0f1_scalar(0.5 * (jp - 1), hi);
      approx += w_split * split;
    }
    if (w_split < 1.0) {
      const double laplace = -0.5 * std::log(0.5 * (a + b)) + 0.5 * std::log(2.0) +
                             std::lgamma(0.5 * jp) - std::lgamma(0.5 * (jp - 1));
      approx += (1.0 - w_split) * laplace;
    }
    val += (1.0 - w_series) * approx;
  }
  return val;
}

}  // namespace detail

// log 0F1(J/2; diag(s)^2/4) for the J x M matrix von Mises-Fisher normalizer.
inline double log0f1_matrix(int J, const std::vector<double>& svals) {
  const int m = static_cast<int>(svals.size());
  if (m < 1 || J < m)
    throw Error(ErrorCode::ShapeMismatch, "need J >= M >= 1 in 0F1 evaluation");
  for (double s : svals)
    if (!std::isfinite(s) || std::abs(s) > 1e12)
      throw Error(ErrorCode::ApproximationOutOfRange,
                  "singular value outside supported envelope");
  if (m == 1) return detail::log0f1_scalar(0.5 * J, svals[0]);

  double u = 0.0;
  for (double s : svals) u += s * s;
  u = std::sqrt(u);
  const double ulo = m <= 4 ? 36.0 : 10.0;
  const double uhi = m <= 4 ? 48.0 : 16.0;
  const double w_series = 1.0 - detail::smoothstep((u - ulo) / (uhi - ulo));

  double val = 0.0;
  if (w_series > 0.0) val += w_series * detail::log0f1_zonal(0.5 * J, svals);
  if (w_series < 1.0) {
    double approx = 0.0;
    const double c_single = 0.5 * (J - m + 1);
    for (double s : svals) approx += detail::log0f1_scalar(c_single, s);
    for (int i = 0; i < m; ++i)
      for (int j = i + 1; j < m; ++j)
        approx += detail::pair_interaction(J - m + 2, svals[i], svals[j]);
    val += (1.0 - w_series) * approx;
  }
  return val;
}

// Partial derivatives with respect to each singular value. Exact series ratio
// for M = 1; central finite differences of the composite otherwise, step
// h = max(1e-5, 1e-5 s) as recorded in fit diagnostics.
inline std::vector<double> grad_log0f1_matrix(int J, const std::vector<double>& svals) {
  const int m = static_cast<int>(svals.size());
  std::vector<double> g(svals.size(), 0.0);
  if (m == 1) {
    g[0] = detail::dlog0f1_scalar(0.5 * J, svals[0]);
    return g;
  }
  std::vector<double> work = svals;
  for (int i = 0; i < m; ++i) {
    const double h = std::max(1e-5, 1e-5 * std::abs(svals[i]));
    work[i] = svals[i] + h;
    const double up = log0f1_matrix(J, work);
    // the function is even in each singular value; reflect below zero
    work[i] = std::abs(svals[i] - h);
    const double down = log0f1_matrix(J, work);
    work[i] = svals[i];
    g[i] = std::clamp((up - down) / (2.0 * h), 0.0, 1.0 - 1e-15);
  }
  return g;
}

}  // namespace parafac2::hyp0f1

#endif  // PARAFAC2_HYP0F1_HPP_
