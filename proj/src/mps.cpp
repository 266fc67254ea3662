#include "qelm/mps.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace qelm {

namespace {

using StridedSlice = Eigen::Map<const MatrixXcdR, 0, Eigen::OuterStride<>>;

/// Physical slice A[:, s, :] of a site tensor as a (left x right) matrix.
StridedSlice slice(const DenseTensor& a, std::size_t s) {
  const auto dl = static_cast<Eigen::Index>(a.extent(0));
  const auto dr = static_cast<Eigen::Index>(a.extent(2));
  return {a.data().data() + static_cast<Eigen::Index>(s) * dr, dl, dr, Eigen::OuterStride<>(2 * dr)};
}

using Diag2 = std::array<double, 2>;
constexpr Diag2 kIdentity{1.0, 1.0};
constexpr Diag2 kPauliZ{1.0, -1.0};

/// E' = sum_s o_s A_s^dagger E A_s
Eigen::MatrixXcd transfer_left(const Eigen::MatrixXcd& e, const DenseTensor& a, const Diag2& o) {
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(a.extent(2)),
                                                static_cast<Eigen::Index>(a.extent(2)));
  for (std::size_t s = 0; s < kPhysDim; ++s) {
    const auto as = slice(a, s);
    out.noalias() += o[s] * (as.adjoint() * (e * as));
  }
  return out;
}

/// R' = sum_s o_s conj(A_s) R A_s^T
Eigen::MatrixXcd transfer_right(const Eigen::MatrixXcd& r, const DenseTensor& a, const Diag2& o) {
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(a.extent(0)),
                                                static_cast<Eigen::Index>(a.extent(0)));
  for (std::size_t s = 0; s < kPhysDim; ++s) {
    const auto as = slice(a, s);
    out.noalias() += o[s] * (as.conjugate() * (r * as.transpose()));
  }
  return out;
}

double close(const Eigen::MatrixXcd& e, const Eigen::MatrixXcd& r) { return e.cwiseProduct(r).sum().real(); }

struct Environments {
  std::vector<Eigen::MatrixXcd> left;   // left[i]: sites < i contracted
  std::vector<Eigen::MatrixXcd> right;  // right[i]: sites >= i contracted
  double norm2 = 0.0;
};

Environments build_environments(const MpsState& st) {
  const std::size_t n = st.size();
  Environments env;
  env.left.resize(n + 1);
  env.right.resize(n + 1);
  env.left[0] = Eigen::MatrixXcd::Identity(1, 1);
  for (std::size_t i = 0; i < n; ++i) env.left[i + 1] = transfer_left(env.left[i], st.site(i), kIdentity);
  env.right[n] = Eigen::MatrixXcd::Identity(1, 1);
  for (std::size_t i = n; i-- > 0;) env.right[i] = transfer_right(env.right[i + 1], st.site(i), kIdentity);
  env.norm2 = env.left[n](0, 0).real();
  if (!(env.norm2 > 0.0)) throw std::invalid_argument("MPS has zero norm");
  return env;
}

void check_site(const MpsState& st, std::size_t i) {
  if (i >= st.size()) {
    throw std::out_of_range("site index " + std::to_string(i) + " out of range for " + std::to_string(st.size()) +
                            "-site MPS");
  }
}

}  // namespace

MpsState::MpsState(std::vector<DenseTensor> sites) : sites_(std::move(sites)) { check_bonds(); }

void MpsState::check_bonds() const {
  if (sites_.empty()) throw std::invalid_argument("MpsState: at least one site required");
  for (std::size_t i = 0; i < sites_.size(); ++i) {
    const auto& t = sites_[i];
    if (t.rank() != 3 || t.extent(1) != kPhysDim) throw std::invalid_argument("MpsState: site tensors must be (l, 2, r)");
    if (i + 1 < sites_.size() && t.extent(2) != sites_[i + 1].extent(0)) {
      throw std::invalid_argument("MpsState: bond mismatch between sites " + std::to_string(i) + " and " +
                                  std::to_string(i + 1));
    }
  }
  if (sites_.front().extent(0) != 1 || sites_.back().extent(2) != 1) {
    throw std::invalid_argument("MpsState: boundary bonds must have extent 1");
  }
}

DenseTensor& MpsState::mutable_site(std::size_t i) {
  center_.reset();
  schmidt_valid_ = false;
  return sites_.at(i);
}

std::vector<DenseTensor>& MpsState::mutable_sites() {
  center_.reset();
  schmidt_valid_ = false;
  return sites_;
}

std::vector<std::size_t> MpsState::bond_dims() const {
  std::vector<std::size_t> dims;
  for (std::size_t i = 0; i + 1 < sites_.size(); ++i) dims.push_back(sites_[i].extent(2));
  return dims;
}

std::size_t MpsState::max_bond_dim() const {
  std::size_t m = 1;
  for (std::size_t d : bond_dims()) m = std::max(m, d);
  return m;
}

void MpsState::mark_center(std::size_t center) {
  check_bonds();
  center_ = center;
  schmidt_valid_ = false;
  schmidt_.clear();
}

void MpsState::set_canonical(std::size_t center, std::vector<std::vector<double>> schmidt) {
  check_bonds();
  if (schmidt.size() + 1 != sites_.size()) throw std::invalid_argument("set_canonical: one Schmidt vector per bond");
  center_ = center;
  schmidt_ = std::move(schmidt);
  schmidt_valid_ = true;
}

double EntropyProfile::half_chain() const {
  if (bond_entropy.empty()) return 0.0;
  // Bond b separates sites [0, b] from the rest; the half cut keeps n/2 sites on the left.
  return bond_entropy[(bond_entropy.size() + 1) / 2 - 1];
}

double EntropyProfile::max() const {
  double m = 0.0;
  for (double s : bond_entropy) m = std::max(m, s);
  return m;
}

MpsState product_state(const std::vector<LocalState>& locals) {
  if (locals.empty()) throw std::invalid_argument("product_state: n must be >= 1");
  std::vector<DenseTensor> sites;
  for (const auto& v : locals) {
    const double nrm = std::sqrt(std::norm(v[0]) + std::norm(v[1]));
    if (nrm == 0.0) throw std::invalid_argument("product_state: zero local vector");
    sites.emplace_back(DenseTensor::Shape{1, 2, 1}, std::vector<cplx>{v[0] / nrm, v[1] / nrm});
  }
  MpsState st(std::move(sites));
  st.set_canonical(0, std::vector<std::vector<double>>(locals.size() - 1, std::vector<double>{1.0}));
  return st;
}

MpsState product_state(std::size_t n, const LocalState& local) {
  return product_state(std::vector<LocalState>(n, local));
}

MpsState all_up_state(std::size_t n) { return product_state(n, LocalState{1.0, 0.0}); }

MpsState canonicalize(const MpsState& state, std::size_t center) {
  check_site(state, center);
  const std::size_t n = state.size();
  std::vector<DenseTensor> sites = state.sites();

  // Right-canonicalize everything except site 0.
  for (std::size_t i = n; i-- > 1;) {
    LqResult f = lq(sites[i], 1);
    sites[i] = std::move(f.q);
    sites[i - 1] = contract(sites[i - 1], {2}, f.l, {0});
  }
  const double nrm = sites[0].norm();
  if (!(nrm > 0.0) || !std::isfinite(nrm)) throw std::invalid_argument("canonicalize: state has zero norm");
  sites[0] *= cplx{1.0 / nrm, 0.0};

  // Left sweep with exact SVDs records the Schmidt spectrum of every bond.
  std::vector<std::vector<double>> schmidt(n - 1);
  const TruncationParams keep_all{std::numeric_limits<std::size_t>::max(), 0.0};
  for (std::size_t i = 0; i + 1 < n; ++i) {
    SvdResult f = truncated_svd(sites[i], 2, keep_all);
    sites[i] = std::move(f.u);
    DenseTensor sv = std::move(f.vh);
    auto m = sv.as_matrix(1);
    for (Eigen::Index k = 0; k < m.rows(); ++k) m.row(k) *= f.singular_values[static_cast<std::size_t>(k)];
    sites[i + 1] = contract(sv, {1}, sites[i + 1], {0});
    schmidt[i] = std::move(f.singular_values);
  }
  // Walk the center back to the requested site.
  for (std::size_t i = n - 1; i > center; --i) {
    LqResult f = lq(sites[i], 1);
    sites[i] = std::move(f.q);
    sites[i - 1] = contract(sites[i - 1], {2}, f.l, {0});
  }
  MpsState out(std::move(sites));
  out.set_canonical(center, std::move(schmidt));
  return out;
}

double norm_squared(const MpsState& state) {
  Eigen::MatrixXcd e = Eigen::MatrixXcd::Identity(1, 1);
  for (const auto& a : state.sites()) e = transfer_left(e, a, kIdentity);
  return e(0, 0).real();
}

double expect_z(const MpsState& state, std::size_t site) {
  check_site(state, site);
  const Environments env = build_environments(state);
  return close(transfer_left(env.left[site], state.site(site), kPauliZ), env.right[site + 1]) / env.norm2;
}

double expect_zz(const MpsState& state, std::size_t i, std::size_t j) {
  check_site(state, i);
  check_site(state, j);
  if (i == j) throw std::invalid_argument("expect_zz: sites must differ");
  if (i > j) std::swap(i, j);
  const Environments env = build_environments(state);
  Eigen::MatrixXcd e = transfer_left(env.left[i], state.site(i), kPauliZ);
  for (std::size_t k = i + 1; k < j; ++k) e = transfer_left(e, state.site(k), kIdentity);
  e = transfer_left(e, state.site(j), kPauliZ);
  return close(e, env.right[j + 1]) / env.norm2;
}

double expect_x(const MpsState& state, std::size_t site) {
  check_site(state, site);
  const Environments env = build_environments(state);
  const DenseTensor& a = state.site(site);
  // X swaps the physical slices: sum_s A_{1-s}^dagger E A_s.
  Eigen::MatrixXcd e = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(a.extent(2)),
                                              static_cast<Eigen::Index>(a.extent(2)));
  for (std::size_t s = 0; s < kPhysDim; ++s) e.noalias() += slice(a, 1 - s).adjoint() * (env.left[site] * slice(a, s));
  return close(e, env.right[site + 1]) / env.norm2;
}

ZCorrelators measure_z_correlators(const MpsState& state,
                                   const std::vector<std::pair<std::size_t, std::size_t>>& pairs) {
  const std::size_t n = state.size();
  const Environments env = build_environments(state);
  ZCorrelators out;
  out.z.resize(n);
  out.zz.assign(pairs.size(), 0.0);

  // Group pair requests by their left site so each left site walks right once.
  std::vector<std::vector<std::pair<std::size_t, std::size_t>>> by_left(n);  // (j, output slot)
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    auto [i, j] = pairs[p];
    check_site(state, i);
    check_site(state, j);
    if (i >= j) throw std::invalid_argument("measure_z_correlators: pairs must satisfy i < j");
    by_left[i].emplace_back(j, p);
  }
  for (std::size_t i = 0; i < n; ++i) {
    Eigen::MatrixXcd e = transfer_left(env.left[i], state.site(i), kPauliZ);
    out.z[i] = close(e, env.right[i + 1]) / env.norm2;
    auto& reqs = by_left[i];
    if (reqs.empty()) continue;
    std::sort(reqs.begin(), reqs.end());
    std::size_t k = i + 1;
    for (const auto& [j, slot] : reqs) {
      for (; k < j; ++k) e = transfer_left(e, state.site(k), kIdentity);
      out.zz[slot] = close(transfer_left(e, state.site(j), kPauliZ), env.right[j + 1]) / env.norm2;
    }
  }
  return out;
}

EntropyProfile entanglement_entropy(const MpsState& state) {
  if (!state.is_canonical()) {
    throw std::logic_error("entanglement_entropy: Schmidt values are stale; canonicalize the state first");
  }
  EntropyProfile prof;
  for (const auto& sv : state.bond_singular_values()) {
    double total = 0.0;
    for (double sigma : sv) total += sigma * sigma;
    double s = 0.0;
    for (double sigma : sv) {
      const double p = sigma * sigma / total;
      if (p > 0.0) s -= p * std::log(p);
    }
    prof.bond_entropy.push_back(std::max(s, 0.0));
  }
  return prof;
}

Eigen::VectorXcd to_statevector(const MpsState& state) {
  MatrixXcdR acc = state.site(0).as_matrix(2);  // (2, D)
  for (std::size_t i = 1; i < state.size(); ++i) {
    const DenseTensor& a = state.site(i);
    MatrixXcdR next = acc * a.as_matrix(1);  // (dim, 2*Dr)
    acc = Eigen::Map<MatrixXcdR>(next.data(), next.rows() * 2, static_cast<Eigen::Index>(a.extent(2)));
  }
  return Eigen::Map<Eigen::VectorXcd>(acc.data(), acc.size());
}

MpsState from_statevector(const Eigen::VectorXcd& psi, std::size_t n) {
  if (n == 0 || psi.size() != (Eigen::Index{1} << n)) throw std::invalid_argument("from_statevector: size is not 2^n");
  std::vector<DenseTensor> sites;
  DenseTensor rest({1, static_cast<std::size_t>(psi.size())});
  rest.as_vector() = psi;
  const TruncationParams keep_all{std::numeric_limits<std::size_t>::max(), 0.0};
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const std::size_t dl = rest.extent(0);
    const std::size_t tail = rest.size() / (dl * 2);
    rest = std::move(rest).reshaped({dl, 2, tail});
    SvdResult f = truncated_svd(rest, 2, keep_all);
    sites.push_back(std::move(f.u));
    auto m = f.vh.as_matrix(1);
    for (Eigen::Index k = 0; k < m.rows(); ++k) m.row(k) *= f.singular_values[static_cast<std::size_t>(k)];
    rest = std::move(f.vh);
  }
  const std::size_t last_left = rest.extent(0);
  sites.push_back(std::move(rest).reshaped({last_left, 2, 1}));
  return MpsState(std::move(sites));
}

}  // namespace qelm
