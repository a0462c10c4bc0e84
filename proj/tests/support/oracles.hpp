#pragma once

// Reference implementations written directly from the defining equations.
// They favour obviousness over speed and share no code with the library.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace prosobench::oracle {

/// Smallest |A - B| / mean(A, B) over all two-way partitions with both sides non-empty.
inline double best_split_imbalance(const std::vector<std::size_t>& sizes) {
  const std::size_t n = sizes.size();
  double total = 0.0;
  for (auto s : sizes) total += static_cast<double>(s);
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t mask = 1; mask + 1 < (std::size_t{1} << n); ++mask) {
    double a = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      if (mask & (std::size_t{1} << i)) a += static_cast<double>(sizes[i]);
    const double b = total - a;
    best = std::min(best, std::abs(a - b) / (0.5 * total));
  }
  return best;
}

/// Least squares by the normal equations and Gauss-Jordan elimination with
/// partial pivoting. Rows of `x` are observations.
inline std::vector<double> least_squares(const std::vector<std::vector<double>>& x, const std::vector<double>& y) {
  const std::size_t p = x.front().size();
  std::vector<std::vector<double>> a(p, std::vector<double>(p + 1, 0.0));
  for (std::size_t r = 0; r < x.size(); ++r)
    for (std::size_t i = 0; i < p; ++i) {
      for (std::size_t j = 0; j < p; ++j) a[i][j] += x[r][i] * x[r][j];
      a[i][p] += x[r][i] * y[r];
    }
  for (std::size_t c = 0; c < p; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < p; ++r)
      if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
    std::swap(a[c], a[piv]);
    for (std::size_t r = 0; r < p; ++r) {
      if (r == c) continue;
      const double f = a[r][c] / a[c][c];
      for (std::size_t k = c; k <= p; ++k) a[r][k] -= f * a[c][k];
    }
  }
  std::vector<double> beta(p);
  for (std::size_t i = 0; i < p; ++i) beta[i] = a[i][p] / a[i][i];
  return beta;
}

inline double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

/// Interpolated Kneser-Ney written as the textbook recursion. Utterances
/// must already be mapped to the vocabulary (rare words replaced by <unk>);
/// each is padded with order-1 "<s>" and every window ending on a real word
/// is counted. `vocab_size` counts every predictable symbol including <unk>.
class LiteralKneserNey {
 public:
  using Words = std::vector<std::string>;

  LiteralKneserNey(const std::vector<Words>& utterances, int order, double discount, std::size_t vocab_size)
      : order_(order), d_(discount), vocab_size_(vocab_size) {
    for (const auto& u : utterances) {
      Words seq(static_cast<std::size_t>(order - 1), "<s>");
      seq.insert(seq.end(), u.begin(), u.end());
      for (std::size_t end = static_cast<std::size_t>(order - 1); end < seq.size(); ++end)
        windows_.emplace_back(seq.begin() + static_cast<std::ptrdiff_t>(end + 1 - static_cast<std::size_t>(order)),
                              seq.begin() + static_cast<std::ptrdiff_t>(end + 1));
    }
  }

  /// p(w | h) with |h| = order - 1.
  double probability(const std::string& w, const Words& h) const { return level(w, h, true); }

 private:
  static bool ends_with(const Words& window, const Words& tail) {
    if (tail.size() > window.size()) return false;
    return std::equal(tail.begin(), tail.end(), window.end() - static_cast<std::ptrdiff_t>(tail.size()));
  }

  // c(g w): number of windows ending in g w
  double raw_count(const Words& gw) const {
    double c = 0.0;
    for (const auto& win : windows_) c += ends_with(win, gw);
    return c;
  }

  // N1+(. g w): distinct symbols preceding g w at the position just before it
  double continuation(const Words& gw) const {
    std::set<std::string> left;
    for (const auto& win : windows_)
      if (ends_with(win, gw) && win.size() > gw.size()) left.insert(win[win.size() - gw.size() - 1]);
    return static_cast<double>(left.size());
  }

  // numerator function per word at this level, and the followers of g
  double level(const std::string& w, const Words& h, bool top) const {
    const Words g = h;
    const bool is_unigram = g.empty();
    auto numer = [&](const std::string& v) {
      Words gv = g;
      gv.push_back(v);
      return top ? raw_count(gv) : continuation(gv);
    };
    std::map<std::string, double> followers;
    for (const auto& win : windows_) {
      if (g.size() + 1 > win.size()) continue;
      Words ctx(win.end() - static_cast<std::ptrdiff_t>(g.size() + 1), win.end() - 1);
      if (ctx == g) followers.emplace(win.back(), 0.0);
    }
    double total = 0.0;
    std::size_t distinct = 0;
    for (auto& [v, c] : followers) {
      c = numer(v);
      total += c;
      if (c > 0) ++distinct;
    }
    const double lower = is_unigram ? 1.0 / static_cast<double>(vocab_size_)
                                    : level(w, Words(g.begin() + 1, g.end()), false);
    if (total <= 0.0) return lower;
    const double cw = followers.contains(w) ? followers.at(w) : 0.0;
    return std::max(cw - d_, 0.0) / total + d_ * static_cast<double>(distinct) / total * lower;
  }

  int order_;
  double d_;
  std::size_t vocab_size_;
  std::vector<Words> windows_;
};

}  // namespace prosobench::oracle
