#include "fusion_oracle.hpp"

#include <cmath>

namespace oracle {

double entropy_bits(const std::vector<double>& p) {
  double h = 0.0;
  for (double x : p) {
    if (x > 0.0) h -= x * std::log(x) / std::log(2.0);
  }
  return h;
}

double bjs(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> mid(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) mid[i] = (a[i] + b[i]) / 2.0;
  return entropy_bits(mid) - entropy_bits(a) / 2.0 - entropy_bits(b) / 2.0;
}

std::vector<double> dempster(const std::vector<double>& a, const std::vector<double>& b) {
  // Conflict mass summed over every disjoint pair of singletons.
  double conflict = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < b.size(); ++j) {
      if (i != j) conflict += a[i] * b[j];
    }
  }
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i] / (1.0 - conflict);
  return out;
}

std::vector<double> fuse(const Rows& rows) {
  const std::size_t k = rows.size();
  const std::size_t n = rows[0].size();

  std::vector<double> avg(k, 0.0);
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      if (i != j) avg[i] += bjs(rows[i], rows[j]);
    }
    avg[i] /= static_cast<double>(k - 1);
  }

  std::vector<double> crd(k);
  double crd_total = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    crd[i] = 1.0 / (avg[i] < 1e-12 ? 1e-12 : avg[i]);
    crd_total += crd[i];
  }
  for (auto& c : crd) c /= crd_total;

  std::vector<double> iv(k);
  double iv_total = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    double ed = 0.0;
    for (double m : rows[i]) {
      if (m > 0.0) ed -= m * std::log2(m / (std::pow(2.0, 1.0) - 1.0));
    }
    iv[i] = std::exp(ed);
    iv_total += iv[i];
  }

  std::vector<double> w(k);
  double w_total = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    w[i] = crd[i] * (iv[i] / iv_total);
    w_total += w[i];
  }

  std::vector<double> wae(n, 0.0);
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t a = 0; a < n; ++a) wae[a] += (w[i] / w_total) * rows[i][a];
  }

  std::vector<double> combined = wae;
  for (std::size_t t = 0; t + 1 < k; ++t) combined = dempster(combined, wae);
  double total = 0.0;
  for (double x : combined) total += x;
  for (auto& x : combined) x /= total;
  return combined;
}

}  // namespace oracle
