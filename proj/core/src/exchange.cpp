#include "nlab/exchange.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace nlab {

namespace {

std::string fmt(double v) {
  if (std::isinf(v)) return "inf";
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

ExchangeMatrix::ExchangeMatrix(const RawMatrix& raw) {
  ValidationReport wf = matrix_wellformed(raw);
  if (!wf.ok())
    throw std::invalid_argument("malformed exchange matrix: " +
                                wf.violations.front().detail);
  d_ = static_cast<int>(raw.size());
  a_.reserve(static_cast<size_t>(d_) * d_);
  for (const auto& row : raw)
    for (double v : row) a_.emplace_back(v);
}

RawMatrix ExchangeMatrix::raw() const {
  RawMatrix out(d_, std::vector<double>(d_));
  for (int i = 0; i < d_; ++i)
    for (int j = 0; j < d_; ++j) out[i][j] = at(i, j).raw();
  return out;
}

ValidationReport matrix_wellformed(const RawMatrix& raw) {
  ValidationReport rep;
  const int d = static_cast<int>(raw.size());
  if (d == 0) {
    rep.add("shape", {}, "", "matrix is empty");
    return rep;
  }
  for (int i = 0; i < d; ++i) {
    if (static_cast<int>(raw[i].size()) != d) {
      rep.add("shape", {i + 1}, "",
              "row " + std::to_string(i + 1) + " has " +
                  std::to_string(raw[i].size()) + " entries, expected " +
                  std::to_string(d));
      return rep;
    }
  }
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      double v = raw[i][j];
      if (std::isnan(v))
        rep.add("entry", {i + 1, j + 1}, "", "entry is NaN");
      else if (v < 0.0)
        rep.add("entry", {i + 1, j + 1}, "", "entry is negative: " + fmt(v));
    }
  return rep;
}

ValidationReport validate_exchange_matrix(const RawMatrix& raw, double tol) {
  ValidationReport rep = matrix_wellformed(raw);
  if (!rep.ok()) return rep;
  return validate_exchange_matrix(ExchangeMatrix(raw), tol);
}

ValidationReport validate_exchange_matrix(const ExchangeMatrix& m, double tol) {
  ValidationReport rep;
  const int d = m.d();
  for (int i = 0; i < d; ++i) {
    XReal v = m.at(i, i);
    if (v.is_inf() || !rel_close(v.raw(), 1.0, tol))
      rep.add("diagonal", {i + 1}, "",
              "diagonal entry is " + fmt(v.raw()) + ", expected 1");
  }
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      if (i == j) continue;
      bool z = m.at(i, j).is_zero(), inf = m.at(j, i).is_inf();
      if (z != inf)
        rep.add("duality", {i + 1, j + 1}, "",
                "entry (" + std::to_string(i + 1) + "," +
                    std::to_string(j + 1) + ") = " + fmt(m.at(i, j).raw()) +
                    " but (" + std::to_string(j + 1) + "," +
                    std::to_string(i + 1) + ") = " + fmt(m.at(j, i).raw()));
    }
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      for (int k = 0; k < d; ++k) {
        XReal a = m.at(i, j), b = m.at(j, k), c = m.at(i, k);
        if (a.product_undefined_with(b)) continue;  // 0 * inf carries no law
        XReal prod = a * b;
        bool bad;
        if (prod.is_inf() || c.is_inf())
          bad = prod.is_inf() != c.is_inf();
        else
          bad = !rel_close(prod.raw(), c.raw(), tol);
        if (bad)
          rep.add("chain", {i + 1, j + 1, k + 1}, "",
                  "(" + std::to_string(i + 1) + "," + std::to_string(j + 1) +
                      ")*(" + std::to_string(j + 1) + "," +
                      std::to_string(k + 1) + ") = " + fmt(prod.raw()) +
                      " but (" + std::to_string(i + 1) + "," +
                      std::to_string(k + 1) + ") = " + fmt(c.raw()));
      }
  return rep;
}

ExchangeMatrix from_price_vector(const std::vector<double>& prices) {
  const int d = static_cast<int>(prices.size());
  if (d == 0) throw std::invalid_argument("empty price vector");
  for (double p : prices)
    if (!(p > 0.0) || std::isinf(p) || std::isnan(p))
      throw std::invalid_argument("prices must be finite and > 0");
  RawMatrix raw(d, std::vector<double>(d));
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) raw[i][j] = prices[j] / prices[i];
  return ExchangeMatrix(raw);
}

std::vector<int> active_set(const ExchangeMatrix& m) {
  std::vector<int> out;
  for (int i = 0; i < m.d(); ++i) {
    bool finite = true;
    for (int j = 0; j < m.d(); ++j)
      if (m.at(i, j).is_inf()) {
        finite = false;
        break;
      }
    if (finite) out.push_back(i);
  }
  return out;
}

int strongest_currency(const ExchangeMatrix& m) {
  // Slack absorbes float fuzz among equally strong currencies; the smallest
  // qualifying index wins ties.
  constexpr double slack = 1e-12;
  for (int i = 0; i < m.d(); ++i) {
    bool all_le = true;
    for (int j = 0; j < m.d(); ++j)
      if (!(m.at(i, j).raw() <= 1.0 + slack)) {
        all_le = false;
        break;
      }
    if (all_le) return i;
  }
  throw std::domain_error(
      "no strongest currency: the matrix violates the chain rule");
}

std::vector<double> basket_prices(const ExchangeMatrix& m) {
  std::vector<double> out(m.d());
  for (int i = 0; i < m.d(); ++i) {
    XReal sum(0.0);
    for (int j = 0; j < m.d(); ++j) sum = sum + m.at(i, j);
    out[i] = sum.is_inf() ? 0.0 : 1.0 / sum.raw();
  }
  return out;
}

ValidationReport validate_basket_prices(const std::vector<double>& b,
                                        double tol) {
  ValidationReport rep;
  if (b.empty()) {
    rep.add("range", {}, "", "empty vector");
    return rep;
  }
  double sum = 0.0;
  for (int i = 0; i < static_cast<int>(b.size()); ++i) {
    if (std::isnan(b[i]) || b[i] < 0.0 || b[i] > 1.0 + tol)
      rep.add("range", {i + 1}, "", "entry " + fmt(b[i]) + " outside [0, 1]");
    else
      sum += b[i];
  }
  if (rep.ok() && std::abs(sum - 1.0) > tol)
    rep.add("sum", {}, "", "entries sum to " + fmt(sum) + ", expected 1");
  return rep;
}

RecoveredRates recover_rates(const std::vector<double>& b) {
  ValidationReport rep = validate_basket_prices(b);
  if (!rep.ok())
    throw std::invalid_argument("invalid basket prices: " +
                                rep.violations.front().detail);
  const int d = static_cast<int>(b.size());
  RawMatrix raw(d, std::vector<double>(d));
  std::vector<std::pair<int, int>> indeterminate;
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      if (i == j) {
        raw[i][j] = 1.0;
      } else if (b[i] > 0.0) {
        raw[i][j] = b[j] / b[i];
      } else if (b[j] > 0.0) {
        raw[i][j] = std::numeric_limits<double>::infinity();
      } else {
        // two dead currencies: their cross rate is not pinned down by the
        // basket; keep 1 so the grid stays well-formed, and say so
        raw[i][j] = 1.0;
        if (i < j) indeterminate.emplace_back(i, j);
      }
    }
  return {ExchangeMatrix(raw), std::move(indeterminate)};
}

ValidationReport validate_value_vector(const ExchangeMatrix& m,
                                       const std::vector<XReal>& v,
                                       double tol) {
  ValidationReport rep;
  if (static_cast<int>(v.size()) != m.d()) {
    rep.add("value_vector", {}, "",
            "value vector has " + std::to_string(v.size()) +
                " entries, matrix has " + std::to_string(m.d()));
    return rep;
  }
  for (int i = 0; i < m.d(); ++i)
    for (int j = 0; j < m.d(); ++j) {
      if (i == j) continue;
      XReal s = m.at(i, j);
      if (s.product_undefined_with(v[j])) continue;
      XReal lhs = s * v[j];
      bool bad;
      if (lhs.is_inf() || v[i].is_inf())
        bad = lhs.is_inf() != v[i].is_inf();
      else
        bad = !rel_close(lhs.raw(), v[i].raw(), tol);
      if (bad)
        rep.add("value_vector", {i + 1, j + 1}, "",
                "s(" + std::to_string(i + 1) + "," + std::to_string(j + 1) +
                    ")*v[" + std::to_string(j + 1) + "] = " + fmt(lhs.raw()) +
                    " but v[" + std::to_string(i + 1) + "] = " +
                    fmt(v[i].raw()));
    }
  return rep;
}

std::vector<XReal> unit_claim(const ExchangeMatrix& m_T, int i) {
  if (i < 0 || i >= m_T.d())
    throw std::invalid_argument("currency index out of range");
  std::vector<XReal> out;
  out.reserve(m_T.d());
  for (int j = 0; j < m_T.d(); ++j) out.push_back(m_T.at(j, i));
  return out;
}

double basket_claim_value(const ExchangeMatrix& m, const std::vector<XReal>& c,
                          double tol) {
  if (static_cast<int>(c.size()) != m.d())
    throw std::invalid_argument("claim size does not match matrix dimension");
  std::vector<int> act = active_set(m);
  if (act.empty())
    throw std::domain_error("no active currency: invalid exchange matrix");
  std::vector<double> b = basket_prices(m);
  double sum = 0.0;
  bool have_first = false;
  double first = 0.0;
  for (int i : act) {
    if (c[i].is_inf())
      throw IntegrabilityError("claim pays +inf in active currency " +
                               std::to_string(i + 1));
    double v = b[i] * c[i].raw();
    if (!have_first) {
      first = v;
      have_first = true;
    } else if (!rel_close(first, v, tol)) {
      throw std::domain_error(
          "claim values disagree across active currencies: " + fmt(first) +
          " vs " + fmt(v) + " (currency " + std::to_string(i + 1) + ")");
    }
    sum += v;
  }
  return sum / static_cast<double>(act.size());
}

}  // namespace nlab
