#include "kaclab/measure.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "kaclab/csv.hpp"

namespace kaclab {

Measure1D Measure1D::atoms(std::vector<double> positions, std::vector<double> weights) {
  if (positions.size() != weights.size())
    throw std::invalid_argument("Measure1D::atoms: size mismatch");
  std::vector<std::size_t> order(positions.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return positions[a] < positions[b]; });
  Measure1D m;
  m.kind_ = Kind::Atoms;
  m.positions_.reserve(order.size());
  m.weights_.reserve(order.size());
  for (std::size_t k : order) {
    m.positions_.push_back(positions[k]);
    m.weights_.push_back(weights[k]);
  }
  m.validate();
  m.refresh_mass();
  return m;
}

Measure1D Measure1D::equal_atoms(std::span<const double> positions) {
  if (positions.empty()) throw std::invalid_argument("Measure1D::equal_atoms: empty sample");
  std::vector<double> w(positions.size(), 1.0 / static_cast<double>(positions.size()));
  return atoms(std::vector<double>(positions.begin(), positions.end()), std::move(w));
}

Measure1D Measure1D::grid(const VelocityGrid& grid, std::vector<double> density) {
  if (density.size() != grid.size())
    throw std::invalid_argument("Measure1D::grid: density size does not match grid");
  Measure1D m;
  m.kind_ = Kind::Grid;
  m.grid_ = grid;
  m.weights_ = std::move(density);
  m.validate();
  m.refresh_mass();
  return m;
}

Measure1D Measure1D::gaussian(double temperature, const VelocityGrid& g) {
  if (!(temperature > 0.0)) throw std::invalid_argument("gaussian: temperature must be positive");
  std::vector<double> d(g.size());
  const double norm = 1.0 / std::sqrt(2.0 * M_PI * temperature);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double v = g.at(i);
    d[i] = norm * std::exp(-v * v / (2.0 * temperature));
  }
  Measure1D m = grid(g, std::move(d));
  return m.scaled(1.0 / m.mass());
}

void Measure1D::validate() const {
  for (std::size_t i = 0; i < weights_.size(); ++i) {
    if (!std::isfinite(weights_[i]) || weights_[i] < 0.0)
      throw std::invalid_argument("Measure1D: weights must be finite and nonnegative");
    if (kind_ == Kind::Atoms && !std::isfinite(positions_[i]))
      throw std::invalid_argument("Measure1D: positions must be finite");
  }
}

void Measure1D::refresh_mass() {
  mass_ = 0.0;
  if (kind_ == Kind::Atoms) {
    for (double w : weights_) mass_ += w;
  } else {
    for (std::size_t i = 0; i < weights_.size(); ++i) mass_ += grid_.weight(i) * weights_[i];
  }
}

double Measure1D::abs_moment(double r) const {
  double s = 0.0;
  if (kind_ == Kind::Atoms) {
    for (std::size_t i = 0; i < weights_.size(); ++i) s += weights_[i] * std::pow(std::abs(positions_[i]), r);
  } else {
    for (std::size_t i = 0; i < weights_.size(); ++i)
      s += grid_.weight(i) * weights_[i] * std::pow(std::abs(grid_.at(i)), r);
  }
  return s;
}

double Measure1D::moment(int r) const {
  double s = 0.0;
  const std::size_t n = weights_.size();
  for (std::size_t i = 0; i < n; ++i) {
    const double v = kind_ == Kind::Atoms ? positions_[i] : grid_.at(i);
    const double w = kind_ == Kind::Atoms ? weights_[i] : grid_.weight(i) * weights_[i];
    s += w * std::pow(v, r);
  }
  return s;
}

double Measure1D::cdf(double x) const {
  if (kind_ == Kind::Atoms) {
    double s = 0.0;
    for (std::size_t i = 0; i < positions_.size() && positions_[i] <= x; ++i) s += weights_[i];
    return s;
  }
  const double dv = grid_.dv();
  const double p = (x + grid_.v_max) / dv;
  if (p < 0.0) return 0.0;
  const std::size_t last = grid_.size() - 1;
  double s = 0.0;
  std::size_t i = 0;
  for (; i < last && static_cast<double>(i + 1) <= p; ++i) s += 0.5 * dv * (weights_[i] + weights_[i + 1]);
  if (i >= last) return s;
  // linear CDF inside a cell, matching the quantile's interpolation
  const double frac = p - static_cast<double>(i);
  return s + frac * 0.5 * dv * (weights_[i] + weights_[i + 1]);
}

Measure1D Measure1D::merged() const {
  if (kind_ == Kind::Grid) return *this;
  Measure1D m;
  m.kind_ = Kind::Atoms;
  for (std::size_t i = 0; i < positions_.size(); ++i) {
    if (!m.positions_.empty() && m.positions_.back() == positions_[i]) {
      m.weights_.back() += weights_[i];
    } else {
      m.positions_.push_back(positions_[i]);
      m.weights_.push_back(weights_[i]);
    }
  }
  m.refresh_mass();
  return m;
}

Measure1D Measure1D::scaled(double factor) const {
  if (!(factor >= 0.0)) throw std::invalid_argument("Measure1D::scaled: negative factor");
  Measure1D m = *this;
  for (double& w : m.weights_) w *= factor;
  m.refresh_mass();
  return m;
}

Measure1D Measure1D::symmetrized() const {
  if (kind_ == Kind::Grid) {
    Measure1D m = *this;
    const std::size_t n = weights_.size();
    for (std::size_t i = 0; i < n; ++i) m.weights_[i] = 0.5 * (weights_[i] + weights_[n - 1 - i]);
    m.refresh_mass();
    return m;
  }
  std::vector<double> p, w;
  for (std::size_t i = 0; i < positions_.size(); ++i) {
    p.push_back(positions_[i]);
    w.push_back(0.5 * weights_[i]);
    p.push_back(-positions_[i]);
    w.push_back(0.5 * weights_[i]);
  }
  return atoms(std::move(p), std::move(w)).merged();
}

namespace {

void deposit(std::vector<double>& out, const VelocityGrid& g, double x, double w) {
  const double last = static_cast<double>(g.size() - 1);
  double p = (x + g.v_max) / g.dv();
  p = std::clamp(p, 0.0, last);
  const auto i = static_cast<std::size_t>(std::floor(p));
  if (i + 1 >= g.size()) {
    out.back() += w;
    return;
  }
  const double f = p - static_cast<double>(i);
  out[i] += (1.0 - f) * w;
  out[i + 1] += f * w;
}

}  // namespace

std::vector<double> Measure1D::node_masses(const VelocityGrid& target) const {
  std::vector<double> out(target.size(), 0.0);
  if (kind_ == Kind::Grid && grid_ == target) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = weights_[i] * grid_.weight(i);
    return out;
  }
  for (std::size_t i = 0; i < weights_.size(); ++i) {
    if (kind_ == Kind::Atoms)
      deposit(out, target, positions_[i], weights_[i]);
    else
      deposit(out, target, grid_.at(i), weights_[i] * grid_.weight(i));
  }
  return out;
}

QuantileFn Measure1D::quantile() const {
  if (!(mass_ > 0.0)) throw std::invalid_argument("Measure1D::quantile: zero mass");
  std::vector<double> v, fl, fr;
  if (kind_ == Kind::Atoms) {
    const Measure1D m = merged();
    double s = 0.0;
    for (std::size_t i = 0; i < m.positions_.size(); ++i) {
      v.push_back(m.positions_[i]);
      fl.push_back(s);
      s += m.weights_[i];
      fr.push_back(s);
    }
  } else {
    double s = 0.0;
    for (std::size_t i = 0; i < weights_.size(); ++i) {
      if (i > 0) s += 0.5 * grid_.dv() * (weights_[i - 1] + weights_[i]);
      v.push_back(grid_.at(i));
      fl.push_back(s);
      fr.push_back(s);
    }
  }
  return QuantileFn::from_knots(v, fl, fr);
}

void write_measure_csv(std::ostream& out, const Measure1D& m) {
  if (m.is_atoms()) {
    CsvWriter w(out, {"v", "weight"});
    for (std::size_t i = 0; i < m.positions().size(); ++i) w.row({m.positions()[i], m.weights()[i]});
  } else {
    CsvWriter w(out, {"v", "density"});
    const auto& g = m.velocity_grid();
    for (std::size_t i = 0; i < g.size(); ++i) w.row({g.at(i), m.density()[i]});
  }
}

Measure1D read_measure_csv(std::istream& in) {
  const CsvTable t = read_csv(in);
  if (t.header.size() != 2 || t.header[0] != "v")
    throw std::runtime_error("measure csv: expected header v,weight or v,density");
  std::vector<double> v, w;
  for (const auto& r : t.rows) {
    v.push_back(r[0]);
    w.push_back(r[1]);
  }
  if (t.header[1] == "weight") return Measure1D::atoms(std::move(v), std::move(w));
  if (t.header[1] != "density") throw std::runtime_error("measure csv: unknown column " + t.header[1]);
  if (v.size() < 3 || v.size() % 2 == 0)
    throw std::runtime_error("measure csv: grid needs an odd number (>= 3) of nodes");
  VelocityGrid g{-v.front(), (v.size() - 1) / 2};
  for (std::size_t i = 0; i < v.size(); ++i)
    if (std::abs(v[i] - g.at(i)) > 1e-9 * g.v_max)
      throw std::runtime_error("measure csv: grid nodes must be uniform and symmetric");
  return Measure1D::grid(g, std::move(w));
}

// ---------------------------------------------------------------------------

QuantileFn QuantileFn::from_knots(std::span<const double> v, std::span<const double> f_left,
                                  std::span<const double> f_right) {
  const std::size_t n = v.size();
  if (n == 0 || f_left.size() != n || f_right.size() != n)
    throw std::invalid_argument("QuantileFn: knot arrays must be nonempty and equal length");
  const double total = f_right[n - 1];
  if (!(total > 0.0)) throw std::invalid_argument("QuantileFn: zero total mass");
  QuantileFn q;
  double prev = 0.0;  // running max keeps the CDF monotone under rounding
  auto push = [&](double u0, double u1, double q0, double q1) {
    if (u1 > u0) q.pieces_.push_back({u0, u1, q0, q1});
  };
  for (std::size_t a = 0; a < n; ++a) {
    if (a > 0 && !(v[a] > v[a - 1])) throw std::invalid_argument("QuantileFn: knots must increase");
    const double l = std::max(prev, f_left[a] / total);
    const double r = std::max(l, f_right[a] / total);
    if (a > 0) push(prev, l, v[a - 1], v[a]);
    else push(0.0, l, v[0], v[0]);
    push(l, r, v[a], v[a]);
    prev = r;
  }
  if (q.pieces_.empty()) throw std::invalid_argument("QuantileFn: degenerate knots");
  q.pieces_.back().u1 = 1.0;
  return q;
}

QuantileFn QuantileFn::point_mass(double x) {
  QuantileFn q;
  q.pieces_.push_back({0.0, 1.0, x, x});
  return q;
}

QuantileFn QuantileFn::uniform(double a, double b) {
  if (!(b > a)) throw std::invalid_argument("QuantileFn::uniform: need a < b");
  QuantileFn q;
  q.pieces_.push_back({0.0, 1.0, a, b});
  return q;
}

std::size_t QuantileFn::locate(double u) const {
  auto it = std::lower_bound(pieces_.begin(), pieces_.end(), u,
                             [](const QuantilePiece& p, double x) { return p.u1 < x; });
  if (it == pieces_.end()) --it;
  return static_cast<std::size_t>(it - pieces_.begin());
}

namespace {

inline double eval_piece(const QuantilePiece& p, double u) {
  if (p.q1 == p.q0) return p.q0;
  const double s = std::clamp((u - p.u0) / (p.u1 - p.u0), 0.0, 1.0);
  return p.q0 + (p.q1 - p.q0) * s;
}

inline double sq_linear(double du, double d0, double d1) {
  return du * (d0 * d0 + d0 * d1 + d1 * d1) / 3.0;
}

}  // namespace

double QuantileFn::operator()(double u) const {
  if (pieces_.empty()) throw std::logic_error("QuantileFn: empty");
  return eval_piece(pieces_[locate(u)], u);
}

double QuantileFn::mean() const {
  double s = 0.0;
  for (const auto& p : pieces_) s += (p.u1 - p.u0) * 0.5 * (p.q0 + p.q1);
  return s;
}

double QuantileFn::second_moment() const {
  double s = 0.0;
  for (const auto& p : pieces_) s += sq_linear(p.u1 - p.u0, p.q0, p.q1);
  return s;
}

double w2_squared(const QuantileFn& a, const QuantileFn& b) {
  const auto& pa = a.pieces_;
  const auto& pb = b.pieces_;
  if (pa.empty() || pb.empty()) throw std::invalid_argument("w2_squared: empty quantile");
  std::size_t ia = 0, ib = 0;
  double u = 0.0, sum = 0.0;
  while (ia < pa.size() && ib < pb.size()) {
    const double end = std::min(pa[ia].u1, pb[ib].u1);
    if (end > u) {
      const double d0 = eval_piece(pa[ia], u) - eval_piece(pb[ib], u);
      const double d1 = eval_piece(pa[ia], end) - eval_piece(pb[ib], end);
      sum += sq_linear(end - u, d0, d1);
      u = end;
    }
    if (pa[ia].u1 <= u) ++ia;
    if (ib < pb.size() && pb[ib].u1 <= u) ++ib;
  }
  return sum;
}

double w2_sorted_quantile(std::span<const double> x, const QuantileFn& q) {
  const auto& pq = q.pieces_;
  const std::size_t n = x.size();
  if (n == 0) throw std::invalid_argument("w2: empty sample");
  if (pq.empty()) throw std::invalid_argument("w2: empty quantile");
  const double inv = 1.0 / static_cast<double>(n);
  std::size_t i = 0, p = 0;
  double u = 0.0, sum = 0.0;
  while (i < n && p < pq.size()) {
    const double ue = i + 1 == n ? 1.0 : static_cast<double>(i + 1) * inv;
    const double end = std::min(ue, pq[p].u1);
    if (end > u) {
      sum += sq_linear(end - u, x[i] - eval_piece(pq[p], u), x[i] - eval_piece(pq[p], end));
      u = end;
    }
    if (ue <= u) ++i;
    if (p < pq.size() && pq[p].u1 <= u) ++p;
  }
  return sum;
}

}  // namespace kaclab
