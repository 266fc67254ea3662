#include "qelm/rydberg.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace qelm {

void ChainSpec::validate() const {
  if (n < 1) throw std::invalid_argument("ChainSpec: n must be >= 1");
  if (!(spacing_um > 0.0)) throw std::invalid_argument("ChainSpec: spacing must be positive");
  if (!(c6 > 0.0)) throw std::invalid_argument("ChainSpec: C must be positive");
  if (!(v_threshold >= 0.0)) throw std::invalid_argument("ChainSpec: v_threshold must be non-negative");
  if (detunings.size() != n) {
    throw std::invalid_argument("ChainSpec: " + std::to_string(detunings.size()) + " detunings for " +
                                std::to_string(n) + " sites");
  }
  if (!std::isfinite(omega) || !std::isfinite(phi)) throw std::invalid_argument("ChainSpec: non-finite drive");
  for (double d : detunings) {
    if (!std::isfinite(d)) throw std::invalid_argument("ChainSpec: non-finite detuning");
  }
}

ChainSpec ChainSpec::uniform(std::size_t n, double omega, double spacing_um) {
  ChainSpec s;
  s.n = n;
  s.omega = omega;
  s.spacing_um = spacing_um;
  s.detunings.assign(n, 0.0);
  return s;
}

std::size_t InteractionTable::max_separation() const {
  std::size_t r = 0;
  for (const auto& p : pairs) r = std::max(r, p.k - p.j);
  return r;
}

std::vector<std::pair<std::size_t, std::size_t>> InteractionTable::index_pairs() const {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) out.emplace_back(p.j, p.k);
  return out;
}

MpoOperator::MpoOperator(std::vector<DenseTensor> sites) : sites_(std::move(sites)) {
  if (sites_.empty()) throw std::invalid_argument("MpoOperator: at least one site required");
  for (std::size_t i = 0; i < sites_.size(); ++i) {
    const auto& w = sites_[i];
    if (w.rank() != 4 || w.extent(1) != 2 || w.extent(2) != 2) {
      throw std::invalid_argument("MpoOperator: site tensors must be (a, 2, 2, b)");
    }
    if (i + 1 < sites_.size() && w.extent(3) != sites_[i + 1].extent(0)) {
      throw std::invalid_argument("MpoOperator: bond mismatch at site " + std::to_string(i));
    }
  }
  if (sites_.front().extent(0) != 1 || sites_.back().extent(3) != 1) {
    throw std::invalid_argument("MpoOperator: boundary bonds must have extent 1");
  }
}

std::vector<std::size_t> MpoOperator::bond_dims() const {
  std::vector<std::size_t> d;
  for (std::size_t i = 0; i + 1 < sites_.size(); ++i) d.push_back(sites_[i].extent(3));
  return d;
}

double interaction_strength(const ChainSpec& spec, std::size_t separation) {
  const double r = spec.spacing_um * static_cast<double>(separation);
  return spec.c6 / std::pow(r, 6);
}

InteractionTable build_interactions(const ChainSpec& spec) {
  spec.validate();
  InteractionTable table;
  for (std::size_t j = 0; j < spec.n; ++j) {
    for (std::size_t k = j + 1; k < spec.n; ++k) {
      const double v = interaction_strength(spec, k - j);
      if (v >= spec.v_threshold) table.pairs.push_back({j, k, v});
    }
  }
  return table;
}

namespace {

using Op2 = Eigen::Matrix2cd;

Op2 local_field(const ChainSpec& spec, std::size_t site) {
  const cplx i{0.0, 1.0};
  Op2 x, y, num;
  x << 0, 1, 1, 0;
  y << 0, -i, i, 0;
  num << 1, 0, 0, 0;
  return 0.5 * spec.omega * (std::cos(spec.phi) * x - std::sin(spec.phi) * y) - spec.detunings[site] * num;
}

void put(DenseTensor& w, std::size_t a, std::size_t b, const Op2& op) {
  for (std::size_t s = 0; s < 2; ++s) {
    for (std::size_t t = 0; t < 2; ++t) w({a, s, t, b}) += op(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(t));
  }
}

}  // namespace

MpoOperator build_mpo(const ChainSpec& spec, const InteractionTable& table) {
  spec.validate();
  const std::size_t n = spec.n;
  const std::size_t r = table.max_separation();
  const std::size_t dim = r + 2;
  const std::size_t done = r + 1;

  // weight[k][sep] = V between site k-sep and site k.
  std::vector<std::vector<double>> closing(n, std::vector<double>(r + 1, 0.0));
  for (const auto& p : table.pairs) {
    if (p.j >= p.k || p.k >= n) throw std::invalid_argument("build_mpo: invalid interaction pair");
    closing[p.k][p.k - p.j] += p.v;
  }

  Op2 id = Op2::Identity();
  Op2 num;
  num << 1, 0, 0, 0;

  std::vector<DenseTensor> sites;
  for (std::size_t site = 0; site < n; ++site) {
    const std::size_t left = (site == 0) ? 1 : dim;
    const std::size_t right = (site + 1 == n) ? 1 : dim;
    DenseTensor w({left, 2, 2, right});
    // Map automaton states to this tensor's bond indices at the boundaries.
    auto lidx = [&](std::size_t state) -> std::ptrdiff_t {
      if (site == 0) return state == 0 ? 0 : -1;
      return static_cast<std::ptrdiff_t>(state);
    };
    auto ridx = [&](std::size_t state) -> std::ptrdiff_t {
      if (site + 1 == n) return state == done ? 0 : -1;
      return static_cast<std::ptrdiff_t>(state);
    };
    auto add = [&](std::size_t from, std::size_t to, const Op2& op) {
      const auto a = lidx(from), b = ridx(to);
      if (a >= 0 && b >= 0) put(w, static_cast<std::size_t>(a), static_cast<std::size_t>(b), op);
    };

    add(0, 0, id);
    add(done, done, id);
    add(0, done, local_field(spec, site));
    if (r >= 1) {
      add(0, 1, num);
      for (std::size_t sep = 1; sep < r; ++sep) add(sep, sep + 1, id);
      for (std::size_t sep = 1; sep <= r; ++sep) {
        if (closing[site][sep] != 0.0) add(sep, done, closing[site][sep] * num);
      }
    }
    sites.push_back(std::move(w));
  }
  return MpoOperator(std::move(sites));
}

MpoOperator zero_mpo(std::size_t n) {
  if (n < 1) throw std::invalid_argument("zero_mpo: n must be >= 1");
  return MpoOperator(std::vector<DenseTensor>(n, DenseTensor({1, 2, 2, 1})));
}

Eigen::MatrixXcd mpo_to_dense(const MpoOperator& mpo) {
  const std::size_t n = mpo.size();
  if (n > 12) throw std::invalid_argument("mpo_to_dense: n > 12 is too large for a dense expansion");
  // acc[b] is the partial operator on sites 0..i with open right bond b.
  std::vector<Eigen::MatrixXcd> acc(1, Eigen::MatrixXcd::Identity(1, 1));
  for (std::size_t i = 0; i < n; ++i) {
    const DenseTensor& w = mpo.site(i);
    std::vector<Eigen::MatrixXcd> next(w.extent(3));
    const Eigen::Index dim = acc[0].rows() * 2;
    for (auto& m : next) m = Eigen::MatrixXcd::Zero(dim, dim);
    for (std::size_t a = 0; a < w.extent(0); ++a) {
      for (std::size_t b = 0; b < w.extent(3); ++b) {
        Eigen::Matrix2cd op;
        bool nonzero = false;
        for (std::size_t s = 0; s < 2; ++s) {
          for (std::size_t t = 0; t < 2; ++t) {
            op(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(t)) = w({a, s, t, b});
            nonzero = nonzero || w({a, s, t, b}) != cplx{0.0, 0.0};
          }
        }
        if (!nonzero) continue;
        const Eigen::MatrixXcd& left = acc[a];
        for (Eigen::Index s = 0; s < 2; ++s) {
          for (Eigen::Index t = 0; t < 2; ++t) {
            if (op(s, t) == cplx{0.0, 0.0}) continue;
            // Kronecker product left (x) op: row = r*2 + s, col = c*2 + t.
            for (Eigen::Index rr = 0; rr < left.rows(); ++rr) {
              for (Eigen::Index cc = 0; cc < left.cols(); ++cc) next[b](rr * 2 + s, cc * 2 + t) += left(rr, cc) * op(s, t);
            }
          }
        }
      }
    }
    acc = std::move(next);
  }
  return acc[0];
}

double blockade_radius(const ChainSpec& spec) {
  if (!(spec.omega > 0.0)) throw std::invalid_argument("blockade_radius: omega must be positive");
  return std::pow(spec.c6 / spec.omega, 1.0 / 6.0);
}

ChainSpec encode_detunings(const ChainSpec& spec, const std::vector<double>& features) {
  if (features.size() != spec.n) {
    throw std::invalid_argument("encode_detunings: " + std::to_string(features.size()) + " features for " +
                                std::to_string(spec.n) + " sites");
  }
  ChainSpec out = spec;
  out.detunings = features;
  return out;
}

}  // namespace qelm
