#pragma once

// Reference implementations written straight from the definitions. They do
// not call into epa's numeric code and trade speed for obviousness.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <numbers>
#include <vector>

namespace oracle {

using Vec = std::vector<double>;
using Rows = std::vector<Vec>;

inline double norm_of(const Vec& v, int which) {  // 0 = l1, 1 = l2, 2 = linf
  double acc = 0.0;
  for (double x : v) {
    if (which == 0) acc += std::fabs(x);
    if (which == 1) acc += x * x;
    if (which == 2) acc = std::max(acc, std::fabs(x));
  }
  return which == 1 ? std::sqrt(acc) : acc;
}

inline double cosine(const Vec& a, const Vec& b) {
  double ab = 0.0, aa = 0.0, bb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  return ab / (std::sqrt(aa) * std::sqrt(bb));
}

inline Vec diff(const Vec& a, const Vec& b) {
  Vec out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
  return out;
}

// ---------------------------------------------------------------------------
// Substitution grid

struct Sub {
  std::size_t position;
  std::uint32_t original;
  std::uint32_t replacement;
  double shift;
};

/// Evaluates every (position, candidate) pair; the best candidate per position
/// is the highest cosine, first seen (lowest id) on ties.
inline std::vector<Sub> brute_minimal(const std::vector<std::uint32_t>& tokens, const Rows& emb,
                                      std::size_t k, int norm,
                                      const std::function<bool(std::uint32_t)>& candidate,
                                      const std::function<bool(std::size_t, std::uint32_t)>& owned) {
  std::vector<Sub> all;
  for (std::size_t p = 0; p < tokens.size(); ++p) {
    const std::uint32_t t = tokens[p];
    if (!owned(p, t)) continue;
    bool found = false;
    std::uint32_t best = 0;
    double best_sim = 0.0;
    for (std::uint32_t c = 0; c < emb.size(); ++c) {
      if (c == t || !candidate(c)) continue;
      const double s = cosine(emb[t], emb[c]);
      if (!found || s > best_sim) {
        found = true;
        best = c;
        best_sim = s;
      }
    }
    if (!found) continue;
    // Full-matrix difference: only row p is nonzero.
    Vec flat;
    for (std::size_t q = 0; q < tokens.size(); ++q) {
      const Vec& orig = emb[tokens[q]];
      const Vec& pert = q == p ? emb[best] : emb[tokens[q]];
      for (std::size_t j = 0; j < orig.size(); ++j) flat.push_back(orig[j] - pert[j]);
    }
    all.push_back({p, t, best, norm_of(flat, norm)});
  }
  // Selection sort keeps the grid scan free of comparator subtleties.
  std::vector<Sub> ranked;
  std::vector<bool> taken(all.size(), false);
  while (ranked.size() < std::min(k, all.size())) {
    std::size_t pick = all.size();
    for (std::size_t i = 0; i < all.size(); ++i) {
      if (taken[i]) continue;
      if (pick == all.size() || all[i].shift < all[pick].shift) pick = i;
    }
    taken[pick] = true;
    ranked.push_back(all[pick]);
  }
  return ranked;
}

// ---------------------------------------------------------------------------
// Statistics

/// Pairwise form: r = sum_{i<j} dx dy / sqrt(sum dx^2 sum dy^2).
inline double pearson(const Vec& x, const Vec& y) {
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t j = i + 1; j < x.size(); ++j) {
      const double dx = x[i] - x[j];
      const double dy = y[i] - y[j];
      sxy += dx * dy;
      sxx += dx * dx;
      syy += dy * dy;
    }
  return sxy / std::sqrt(sxx * syy);
}

/// rank_i = #{x_j < x_i} + (#{x_j == x_i} + 1) / 2
inline Vec ranks(const Vec& x) {
  Vec r(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    double less = 0.0, equal = 0.0;
    for (double v : x) {
      if (v < x[i]) less += 1.0;
      if (v == x[i]) equal += 1.0;
    }
    r[i] = less + (equal + 1.0) / 2.0;
  }
  return r;
}

inline double spearman(const Vec& x, const Vec& y) { return pearson(ranks(x), ranks(y)); }

/// Student t CDF for integer dof from the finite trigonometric series
/// (Abramowitz & Stegun 26.7.3 / 26.7.4).
inline double t_cdf(double t, long dof) {
  const double theta = std::atan(t / std::sqrt(static_cast<double>(dof)));
  const double c2 = std::cos(theta) * std::cos(theta);
  const double s = std::sin(theta);
  double a;
  if (dof % 2 == 1) {
    double sum = 0.0;
    if (dof > 1) {
      double term = 1.0;
      sum = 1.0;
      for (long j = 2; j <= dof - 3; j += 2) {
        term *= c2 * static_cast<double>(j) / static_cast<double>(j + 1);
        sum += term;
      }
      sum *= s * std::cos(theta);
    }
    a = 2.0 / std::numbers::pi * (theta + sum);
  } else {
    double term = 1.0, sum = 1.0;
    for (long j = 1; j <= dof - 3; j += 2) {
      term *= c2 * static_cast<double>(j) / static_cast<double>(j + 1);
      sum += term;
    }
    a = s * sum;
  }
  return 0.5 + 0.5 * a;
}

inline double t_quantile(double p, long dof) {
  double lo = -1e4, hi = 1e4;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (t_cdf(mid, dof) < p)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

struct Fit {
  double slope, intercept, residual_se, slope_se, ci_lo, ci_hi;
  double inv[2][2];  // (X^T X)^-1
  double t;

  /// Half-width of the mean-response band via x0^T (X^T X)^-1 x0.
  double band_half(double x0) const {
    const double h = inv[0][0] + 2.0 * inv[0][1] * x0 + inv[1][1] * x0 * x0;
    return t * residual_se * std::sqrt(h);
  }
};

/// Normal equations with raw sums.
inline Fit ols(const Vec& x, const Vec& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  const double det = n * sxx - sx * sx;
  Fit f{};
  f.slope = (n * sxy - sx * sy) / det;
  f.intercept = (sy - f.slope * sx) / n;
  double rss = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - f.intercept - f.slope * x[i];
    rss += r * r;
  }
  f.residual_se = std::sqrt(rss / (n - 2));
  f.inv[0][0] = sxx / det;
  f.inv[0][1] = f.inv[1][0] = -sx / det;
  f.inv[1][1] = n / det;
  f.slope_se = f.residual_se * std::sqrt(f.inv[1][1]);
  f.t = t_quantile(0.975, static_cast<long>(x.size()) - 2);
  f.ci_lo = f.slope - f.t * f.slope_se;
  f.ci_hi = f.slope + f.t * f.slope_se;
  return f;
}

struct MeanCi {
  double mean, lower, upper;
};

inline MeanCi mean_ci(const Vec& v) {
  const double n = static_cast<double>(v.size());
  double sum = 0;
  for (double x : v) sum += x;
  const double m = sum / n;
  double ss = 0;
  for (double x : v) ss += (x - m) * (x - m);
  const double half = t_quantile(0.975, static_cast<long>(v.size()) - 1) * std::sqrt(ss / (n - 1)) /
                      std::sqrt(n);
  return {m, m - half, m + half};
}

// ---------------------------------------------------------------------------
// Encoder

struct Layer {
  Rows wq, wk, wv, wo, w1, w2;
  Vec bq, bk, bv, bo, b1, b2, g1, be1, g2, be2;
};

struct Model {
  Rows tok, pos;
  Vec g0, be0;
  std::vector<Layer> layers;
  std::size_t heads = 1;
  double eps = 1e-12;
};

inline Vec affine(const Vec& x, const Rows& w, const Vec& b) {
  Vec y(b);
  for (std::size_t o = 0; o < y.size(); ++o)
    for (std::size_t i = 0; i < x.size(); ++i) y[o] += x[i] * w[i][o];
  return y;
}

inline Vec ln(const Vec& x, const Vec& g, const Vec& b, double eps, bool on) {
  if (!on) return x;
  double mean = 0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(x.size());
  double var = 0;
  for (double v : x) var += (v - mean) * (v - mean);
  var /= static_cast<double>(x.size());
  Vec y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = g[i] * (x[i] - mean) / std::sqrt(var + eps) + b[i];
  return y;
}

inline double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x / std::sqrt(2.0))); }

struct Trace {
  std::vector<Rows> states;         // raw, h0, ..., hL
  std::vector<std::vector<Rows>> attn;  // [layer][head] n x n
};

/// One position and one head at a time, every sum written out.
inline Trace forward(const Model& m, const std::vector<std::uint32_t>& x, bool layer_norm) {
  const std::size_t n = x.size();
  const std::size_t d = m.tok[0].size();
  const std::size_t dh = d / m.heads;
  Trace tr;
  Rows raw(n), h(n);
  for (std::size_t j = 0; j < n; ++j) {
    raw[j] = m.tok[x[j]];
    Vec s(d);
    for (std::size_t c = 0; c < d; ++c) s[c] = m.tok[x[j]][c] + m.pos[j][c];
    h[j] = ln(s, m.g0, m.be0, m.eps, layer_norm);
  }
  tr.states.push_back(raw);
  tr.states.push_back(h);
  for (const Layer& L : m.layers) {
    Rows q(n), k(n), v(n);
    for (std::size_t j = 0; j < n; ++j) {
      q[j] = affine(h[j], L.wq, L.bq);
      k[j] = affine(h[j], L.wk, L.bk);
      v[j] = affine(h[j], L.wv, L.bv);
    }
    Rows ctx(n, Vec(d, 0.0));
    std::vector<Rows> probs;
    for (std::size_t hd = 0; hd < m.heads; ++hd) {
      Rows p(n, Vec(n));
      for (std::size_t i = 0; i < n; ++i) {
        Vec score(n);
        double top = -INFINITY;
        for (std::size_t j = 0; j < n; ++j) {
          double s = 0;
          for (std::size_t c = hd * dh; c < (hd + 1) * dh; ++c) s += q[i][c] * k[j][c];
          score[j] = s / std::sqrt(static_cast<double>(dh));
          top = std::max(top, score[j]);
        }
        double z = 0;
        for (std::size_t j = 0; j < n; ++j) z += std::exp(score[j] - top);
        for (std::size_t j = 0; j < n; ++j) p[i][j] = std::exp(score[j] - top) / z;
        for (std::size_t c = hd * dh; c < (hd + 1) * dh; ++c)
          for (std::size_t j = 0; j < n; ++j) ctx[i][c] += p[i][j] * v[j][c];
      }
      probs.push_back(p);
    }
    tr.attn.push_back(probs);
    Rows next(n);
    for (std::size_t i = 0; i < n; ++i) {
      const Vec att = affine(ctx[i], L.wo, L.bo);
      Vec r(d);
      for (std::size_t c = 0; c < d; ++c) r[c] = h[i][c] + att[c];
      const Vec a = ln(r, L.g1, L.be1, m.eps, layer_norm);
      Vec f = affine(a, L.w1, L.b1);
      for (double& u : f) u = gelu(u);
      const Vec g = affine(f, L.w2, L.b2);
      Vec r2(d);
      for (std::size_t c = 0; c < d; ++c) r2[c] = a[c] + g[c];
      next[i] = ln(r2, L.g2, L.be2, m.eps, layer_norm);
    }
    h = next;
    tr.states.push_back(h);
  }
  return tr;
}

// ---------------------------------------------------------------------------
// Probe

struct Ranked {
  std::uint32_t id;
  double sim;
};

/// Full cosine scan of one hidden row against every table row, sorted by
/// similarity descending, then id.
inline std::vector<Ranked> probe_row(const Vec& h, const Rows& emb, std::size_t m) {
  std::vector<Ranked> all;
  for (std::uint32_t t = 0; t < emb.size(); ++t) all.push_back({t, cosine(h, emb[t])});
  std::stable_sort(all.begin(), all.end(),
                   [](const Ranked& a, const Ranked& b) { return a.sim > b.sim; });
  all.resize(std::min(m, all.size()));
  return all;
}

}  // namespace oracle
