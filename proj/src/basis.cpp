#include "navslip/basis.hpp"

#include "navslip/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <limits>
#include <tuple>

namespace navslip {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct Profile {
  double f = 0.0, df = 0.0, d2f = 0.0;
};

Profile eval_profile(const std::vector<double>& coeffs, double h, double z) {
  const int degree = static_cast<int>(coeffs.size()) - 1;
  Profile p;
  if (degree < 0) return p;
  const LegendreTable t = legendre_table(degree, z / h);
  for (int n = 0; n <= degree; ++n) {
    p.f += coeffs[n] * t.p[n];
    p.df += coeffs[n] * t.dp[n];
    p.d2f += coeffs[n] * t.d2p[n];
  }
  p.df /= h;
  p.d2f /= h * h;
  return p;
}

std::array<double, 3> physical_wavevector(const BasisMode& mode, const DomainSpec& d) {
  std::array<double, 3> k{};
  for (int a = 0; a < 3; ++a) k[a] = kTwoPi * mode.wavevector[a] / d.lengths[a];
  if (d.geometry == Geometry::Slab) k[2] = 0.0;
  return k;
}

ModeSample sample_with_profile(const BasisMode& mode, const std::array<double, 3>& k,
                               const std::array<double, 3>& x, const Profile& pr) {
  ModeSample s;
  const double theta = k[0] * x[0] + k[1] * x[1] + k[2] * x[2];
  const double cs = std::cos(theta), sn = std::sin(theta);
  const double c = mode.trig == Trig::Cos ? cs : sn;
  const double cp = mode.trig == Trig::Cos ? -sn : cs;
  const double cpp = -c;
  auto& u = s.value;
  auto& g = s.gradient;
  switch (mode.kind) {
    case ModeKind::TorusWave:
      for (int i = 0; i < 3; ++i) {
        u[i] = mode.amplitude[i] * c;
        for (int d = 0; d < 3; ++d) g[i][d] = mode.amplitude[i] * cp * k[d];
      }
      break;
    case ModeKind::Mean:
      for (int i = 0; i < 3; ++i) {
        u[i] = mode.amplitude[i] * pr.f;
        g[i][2] = mode.amplitude[i] * pr.df;
      }
      break;
    case ModeKind::Toroidal: {
      const double kn = std::hypot(k[0], k[1]);
      const std::array<double, 3> t{-k[1] / kn, k[0] / kn, 0.0};
      for (int i = 0; i < 3; ++i) {
        u[i] = t[i] * pr.f * c;
        g[i][0] = t[i] * pr.f * cp * k[0];
        g[i][1] = t[i] * pr.f * cp * k[1];
        g[i][2] = t[i] * pr.df * c;
      }
      break;
    }
    case ModeKind::Poloidal: {
      const double k2 = k[0] * k[0] + k[1] * k[1];
      for (int i = 0; i < 2; ++i) {
        u[i] = k[i] / k2 * pr.df * cp;
        g[i][0] = k[i] * k[0] / k2 * pr.df * cpp;
        g[i][1] = k[i] * k[1] / k2 * pr.df * cpp;
        g[i][2] = k[i] / k2 * pr.d2f * cp;
      }
      u[2] = pr.f * c;
      g[2][0] = pr.f * cp * k[0];
      g[2][1] = pr.f * cp * k[1];
      g[2][2] = pr.df * c;
      break;
    }
  }
  return s;
}

// ---------------------------------------------------------------------------
// Torus

std::array<double, 3> polarization(const std::array<double, 3>& kappa, int which) {
  const double kn = std::sqrt(kappa[0] * kappa[0] + kappa[1] * kappa[1] + kappa[2] * kappa[2]);
  const std::array<double, 3> kh{kappa[0] / kn, kappa[1] / kn, kappa[2] / kn};
  int ref = 0;
  for (int a = 1; a < 3; ++a)
    if (std::abs(kh[a]) < std::abs(kh[ref])) ref = a;
  std::array<double, 3> e1{0.0, 0.0, 0.0};
  e1[ref] = 1.0;
  const double proj = kh[ref];
  for (int a = 0; a < 3; ++a) e1[a] -= proj * kh[a];
  const double n1 = std::sqrt(e1[0] * e1[0] + e1[1] * e1[1] + e1[2] * e1[2]);
  for (double& v : e1) v /= n1;
  if (which == 0) return e1;
  return {kh[1] * e1[2] - kh[2] * e1[1], kh[2] * e1[0] - kh[0] * e1[2],
          kh[0] * e1[1] - kh[1] * e1[0]};
}

bool in_half_space(const std::array<int, 3>& k) {
  for (int v : k) {
    if (v > 0) return true;
    if (v < 0) return false;
  }
  return false;  // zero vector excluded
}

// Deterministic total order: energy, then descending wavevector, then the
// discrete labels.
bool mode_less(const BasisMode& a, const BasisMode& b) {
  if (a.h1_energy != b.h1_energy) return a.h1_energy < b.h1_energy;
  const auto ka = std::make_tuple(-a.wavevector[0], -a.wavevector[1], -a.wavevector[2],
                                  a.vertical_index, static_cast<int>(a.kind),
                                  static_cast<int>(a.trig), a.polarization);
  const auto kb = std::make_tuple(-b.wavevector[0], -b.wavevector[1], -b.wavevector[2],
                                  b.vertical_index, static_cast<int>(b.kind),
                                  static_cast<int>(b.trig), b.polarization);
  return ka < kb;
}

std::vector<BasisMode> torus_modes(const DomainSpec& d, int m) {
  const double norm = std::sqrt(2.0 / d.volume());
  for (int R = 1;; ++R) {
    std::vector<BasisMode> all;
    for (int k1 = -R; k1 <= R; ++k1)
      for (int k2 = -R; k2 <= R; ++k2)
        for (int k3 = -R; k3 <= R; ++k3) {
          const std::array<int, 3> k{k1, k2, k3};
          if (!in_half_space(k)) continue;
          std::array<double, 3> kappa{};
          double k2sum = 0.0;
          for (int a = 0; a < 3; ++a) {
            kappa[a] = kTwoPi * k[a] / d.lengths[a];
            k2sum += kappa[a] * kappa[a];
          }
          for (Trig trig : {Trig::Cos, Trig::Sin})
            for (int pol = 0; pol < 2; ++pol) {
              BasisMode w;
              w.kind = ModeKind::TorusWave;
              w.trig = trig;
              w.wavevector = k;
              w.polarization = pol;
              const auto e = polarization(kappa, pol);
              for (int a = 0; a < 3; ++a) w.amplitude[a] = norm * e[a];
              w.h1_energy = k2sum;
              w.vertical_eigenvalue = kappa[2] * kappa[2];
              all.push_back(w);
            }
        }
    // Any wavevector outside the cube has some |k_a| >= R + 1.
    double complete = std::numeric_limits<double>::infinity();
    for (int a = 0; a < 3; ++a)
      complete = std::min(complete, std::pow(kTwoPi * (R + 1) / d.lengths[a], 2));
    const auto covered = std::count_if(all.begin(), all.end(),
                                       [&](const BasisMode& w) { return w.h1_energy < complete; });
    if (covered >= m) {
      std::sort(all.begin(), all.end(), mode_less);
      all.resize(m);
      return all;
    }
  }
}

// ---------------------------------------------------------------------------
// Slab

struct VerticalPair {
  std::vector<double> coeffs;  // normalized for a unit-L2 3D mode
  double eigenvalue = 0.0;     // of ((.,.)) + boundary form, 3D normalized
  double h1 = 0.0;
  double boundary = 0.0;
};

enum class Family { Tangential, Poloidal };

// Solves the vertical problem for horizontal wavenumber squared k2 with
// Legendre degree P; returns the admitted (resolved) eigenpairs in ascending
// order.
std::vector<VerticalPair> vertical_modes(const DomainSpec& d, Family fam, double k2, int P,
                                         bool mean_mode) {
  const double h = d.half_height();
  const double alpha = d.friction;
  const int nb = P + 1;
  const Rule1D rule = gauss_lobatto(P + 4);

  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(nb, nb);
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(nb, nb);
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(nb, nb);
  for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
    const LegendreTable t = legendre_table(P, rule.nodes[q]);
    const double w = h * rule.weights[q];
    for (int a = 0; a < nb; ++a) {
      const double pa = t.p[a], da = t.dp[a] / h, dda = t.d2p[a] / (h * h);
      for (int b = 0; b < nb; ++b) {
        const double pb = t.p[b], db = t.dp[b] / h, ddb = t.d2p[b] / (h * h);
        if (fam == Family::Tangential) {
          M(a, b) += w * pa * pb;
          H(a, b) += w * (da * db + k2 * pa * pb);
        } else {
          M(a, b) += w * (k2 * pa * pb + da * db);
          H(a, b) += w * (k2 * k2 * pa * pb + 2.0 * k2 * da * db + dda * ddb);
        }
      }
    }
  }
  const LegendreTable top = legendre_table(P, 1.0);
  const LegendreTable bot = legendre_table(P, -1.0);
  Eigen::MatrixXd C;
  if (fam == Family::Tangential) {
    C.resize(2, nb);
    for (int a = 0; a < nb; ++a) {
      C(0, a) = top.dp[a] / h + alpha * top.p[a];
      C(1, a) = -bot.dp[a] / h + alpha * bot.p[a];
    }
    for (int a = 0; a < nb; ++a)
      for (int b = 0; b < nb; ++b)
        B(a, b) = alpha * (top.p[a] * top.p[b] + bot.p[a] * bot.p[b]);
  } else {
    C.resize(4, nb);
    for (int a = 0; a < nb; ++a) {
      C(0, a) = top.p[a];
      C(1, a) = bot.p[a];
      C(2, a) = top.d2p[a] / (h * h) + alpha * top.dp[a] / h;
      C(3, a) = -bot.d2p[a] / (h * h) + alpha * bot.dp[a] / h;
    }
    for (int a = 0; a < nb; ++a)
      for (int b = 0; b < nb; ++b)
        B(a, b) = alpha * (top.dp[a] * top.dp[b] + bot.dp[a] * bot.dp[b]) / (h * h);
  }
  for (int r = 0; r < C.rows(); ++r) C.row(r) /= C.row(r).norm();

  // Orthonormal null space of the constraint rows.
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(C.transpose());
  const Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(nb, nb);
  const Eigen::MatrixXd Z = Q.rightCols(nb - C.rows());

  const Eigen::MatrixXd K = H + B;
  Eigen::MatrixXd Kr = Z.transpose() * K * Z;
  Eigen::MatrixXd Mr = Z.transpose() * M * Z;
  Kr = 0.5 * (Kr + Kr.transpose()).eval();
  Mr = 0.5 * (Mr + Mr.transpose()).eval();
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(Kr, Mr);
  if (es.info() != Eigen::Success) {
    std::ostringstream os;
    os << "vertical eigensolver failed for |k|^2 = " << k2 << " ("
       << (fam == Family::Tangential ? "tangential" : "poloidal") << " family)";
    throw std::runtime_error(os.str());
  }

  const int admitted = static_cast<int>(Z.cols()) / 2;
  std::vector<Eigen::VectorXd> vecs;
  for (int j = 0; j < admitted; ++j) vecs.push_back(Z * es.eigenvectors().col(j));

  // Modified Gram-Schmidt in the M inner product, two passes.
  for (int pass = 0; pass < 2; ++pass) {
    for (std::size_t i = 0; i < vecs.size(); ++i) {
      for (std::size_t j = 0; j < i; ++j) vecs[i] -= vecs[j].dot(M * vecs[i]) * vecs[j];
      vecs[i] /= std::sqrt(vecs[i].dot(M * vecs[i]));
    }
  }

  const double area = d.lengths[0] * d.lengths[1];
  // 3D L2 norm^2 = factor * c^T M c
  const double factor = mean_mode ? area : (fam == Family::Tangential ? 0.5 * area : 0.5 * area / k2);
  const double energy_factor = mean_mode ? area : 0.5 * area;
  const double energy_scale = fam == Family::Poloidal ? 1.0 / k2 : 1.0;

  std::vector<VerticalPair> out;
  for (auto& v : vecs) {
    // sign convention: first significant coefficient positive
    const double vmax = v.cwiseAbs().maxCoeff();
    for (int a = 0; a < v.size(); ++a) {
      if (std::abs(v(a)) > 1e-8 * vmax) {
        if (v(a) < 0) v = -v;
        break;
      }
    }
    v /= std::sqrt(factor);
    VerticalPair p;
    p.coeffs.assign(v.data(), v.data() + v.size());
    p.h1 = energy_factor * energy_scale * v.dot(H * v);
    p.boundary = energy_factor * energy_scale * v.dot(B * v);
    p.eigenvalue = p.h1 + p.boundary;
    out.push_back(std::move(p));
  }
  return out;
}

struct SlabCandidates {
  std::vector<BasisMode> modes;
  double complete = 0.0;  // every mode with h1 below this is present
  bool horizontal_limited = false;
};

SlabCandidates slab_candidates(const DomainSpec& d, int R, int P) {
  SlabCandidates out;
  const double alpha = d.friction;
  std::map<std::pair<double, int>, std::vector<VerticalPair>> cache;
  auto solve = [&](double k2, Family fam, bool mean) -> const std::vector<VerticalPair>& {
    const auto key = std::make_pair(k2, static_cast<int>(fam) + (mean ? 2 : 0));
    auto it = cache.find(key);
    if (it == cache.end()) it = cache.emplace(key, vertical_modes(d, fam, k2, P, mean)).first;
    return it->second;
  };

  double vertical_limit = std::numeric_limits<double>::infinity();
  double max_boundary = 0.0;
  auto track = [&](const std::vector<VerticalPair>& pairs) {
    for (const auto& p : pairs) max_boundary = std::max(max_boundary, p.boundary);
    if (!pairs.empty()) vertical_limit = std::min(vertical_limit, pairs.back().eigenvalue);
  };

  for (int k1 = -R; k1 <= R; ++k1)
    for (int k2i = -R; k2i <= R; ++k2i) {
      const std::array<int, 3> k{k1, k2i, 0};
      const bool mean = k1 == 0 && k2i == 0;
      if (!mean && !in_half_space(k)) continue;
      const double kx = kTwoPi * k1 / d.lengths[0];
      const double ky = kTwoPi * k2i / d.lengths[1];
      const double ksq = kx * kx + ky * ky;
      if (mean) {
        const auto& pairs = solve(0.0, Family::Tangential, true);
        track(pairs);
        for (std::size_t n = 0; n < pairs.size(); ++n) {
          // alpha = 0 leaves a constant mean flow with zero energy; exclude it
          if (alpha == 0.0 && pairs[n].eigenvalue < 1e-10) continue;
          for (int dir = 0; dir < 2; ++dir) {
            BasisMode w;
            w.kind = ModeKind::Mean;
            w.trig = Trig::Cos;
            w.wavevector = k;
            w.vertical_index = static_cast<int>(n);
            w.polarization = dir;
            w.amplitude = {dir == 0 ? 1.0 : 0.0, dir == 1 ? 1.0 : 0.0, 0.0};
            w.profile = pairs[n].coeffs;
            w.h1_energy = pairs[n].h1;
            w.boundary_energy = pairs[n].boundary;
            w.vertical_eigenvalue = pairs[n].eigenvalue;
            out.modes.push_back(w);
          }
        }
        continue;
      }
      for (Family fam : {Family::Tangential, Family::Poloidal}) {
        const auto& pairs = solve(ksq, fam, false);
        track(pairs);
        for (std::size_t n = 0; n < pairs.size(); ++n)
          for (Trig trig : {Trig::Cos, Trig::Sin}) {
            BasisMode w;
            w.kind = fam == Family::Tangential ? ModeKind::Toroidal : ModeKind::Poloidal;
            w.trig = trig;
            w.wavevector = k;
            w.vertical_index = static_cast<int>(n);
            w.profile = pairs[n].coeffs;
            w.h1_energy = pairs[n].h1;
            w.boundary_energy = pairs[n].boundary;
            w.vertical_eigenvalue = pairs[n].eigenvalue - ksq;
            out.modes.push_back(w);
          }
      }
    }
  double horizontal = std::numeric_limits<double>::infinity();
  for (int a = 0; a < 2; ++a)
    horizontal = std::min(horizontal, std::pow(kTwoPi * (R + 1) / d.lengths[a], 2));
  // h1 >= |k|^2 for every slab mode; unadmitted vertical modes have
  // h1 >= eigenvalue - boundary energy.
  const double vertical = vertical_limit - 2.0 * max_boundary;
  out.complete = std::min(horizontal, vertical);
  out.horizontal_limited = horizontal <= vertical;
  return out;
}

std::vector<BasisMode> slab_modes(const DomainSpec& d, int m, int& degree) {
  int P = 24;
  int R = 1;
  for (int attempt = 0; attempt < 64; ++attempt) {
    SlabCandidates c = slab_candidates(d, R, P);
    const auto covered = std::count_if(c.modes.begin(), c.modes.end(),
                                       [&](const BasisMode& w) { return w.h1_energy < c.complete; });
    if (covered < m) {
      if (c.horizontal_limited)
        ++R;
      else
        P += 16;
      continue;
    }
    std::sort(c.modes.begin(), c.modes.end(), mode_less);
    c.modes.resize(m);
    int nv = 0;
    for (const auto& w : c.modes) nv = std::max(nv, w.vertical_index + 1);
    const int wanted = std::max(24, 2 * nv + 8);
    if (P < wanted) {
      P = wanted;
      continue;
    }
    degree = P;
    return c.modes;
  }
  throw std::runtime_error("slab basis construction did not converge");
}

}  // namespace

std::string to_string(ModeKind k) {
  switch (k) {
    case ModeKind::TorusWave: return "torus-wave";
    case ModeKind::Toroidal: return "toroidal";
    case ModeKind::Poloidal: return "poloidal";
    case ModeKind::Mean: return "mean";
  }
  return "unknown";
}

ModeSample sample_mode(const BasisMode& mode, const DomainSpec& domain,
                       const std::array<double, 3>& x) {
  Profile pr;
  if (domain.geometry == Geometry::Slab) pr = eval_profile(mode.profile, domain.half_height(), x[2]);
  return sample_with_profile(mode, physical_wavevector(mode, domain), x, pr);
}

QuadratureGrid resolved_grid(const BasisSet& basis, double oversampling) {
  std::array<int, 3> n{};
  const auto& K = basis.resolution.max_wavenumber;
  for (int a = 0; a < 3; ++a) n[a] = static_cast<int>(std::ceil(oversampling * (2 * K[a] + 1) - 1e-12));
  if (basis.domain.geometry == Geometry::Slab)
    n[2] = static_cast<int>(std::ceil(oversampling * (basis.resolution.profile_degree + 1) - 1e-12));
  return make_grid(basis.domain, n, oversampling);
}

BasisSet build_basis(const DomainSpec& domain, int m, const GridRequest& request) {
  domain.validate();
  if (m < 1) throw std::invalid_argument("build_basis: m must be >= 1");
  if (!(request.oversampling >= 1.0))
    throw std::invalid_argument("build_basis: oversampling factor must be >= 1");
  BasisSet basis;
  basis.domain = domain;
  int degree = 0;
  if (domain.geometry == Geometry::Torus)
    basis.modes = torus_modes(domain, m);
  else
    basis.modes = slab_modes(domain, m, degree);
  for (int j = 0; j < m; ++j) basis.modes[j].index = j;

  basis.resolution.profile_degree = degree;
  for (const auto& w : basis.modes)
    for (int a = 0; a < 3; ++a)
      basis.resolution.max_wavenumber[a] =
          std::max(basis.resolution.max_wavenumber[a], std::abs(w.wavevector[a]));

  QuadratureGrid grid = resolved_grid(basis, request.oversampling);
  std::array<int, 3> n = grid.n;
  bool custom = false;
  for (int a = 0; a < 3; ++a) {
    if (request.nodes[a] <= 0) continue;
    custom = true;
    n[a] = request.nodes[a];
    const bool vertical = a == 2 && domain.geometry == Geometry::Slab;
    const int needed = vertical ? degree + 2 : 2 * basis.resolution.max_wavenumber[a] + 1;
    if (n[a] < needed) {
      std::ostringstream os;
      os << "grid too coarse for m = " << m << ": axis " << a << " has " << n[a]
         << " nodes, at least " << needed << " required";
      throw std::invalid_argument(os.str());
    }
  }
  basis.grid = custom ? make_grid(domain, n, request.oversampling) : grid;
  refresh_grams(basis);
  return basis;
}

// ---------------------------------------------------------------------------

FieldSampler::FieldSampler(const BasisSet& basis, const QuadratureGrid& grid)
    : domain_(basis.domain), grid_(grid), modes_(basis.size()) {
  const std::size_t Q = grid.size();
  weights_.resize(Q);
  for (std::size_t q = 0; q < Q; ++q) weights_(q) = grid.weight(q);
  for (auto& v : value_) v.setZero(Q, modes_);
  for (auto& g : gradient_) g.setZero(Q, modes_);

  const bool slab = domain_.geometry == Geometry::Slab;
  const double h = domain_.half_height();
  for (int j = 0; j < modes_; ++j) {
    const BasisMode& mode = basis.modes[j];
    const auto k = physical_wavevector(mode, domain_);
    for (int i3 = 0; i3 < grid.n[2]; ++i3) {
      const double z = grid.coords[2][i3];
      const Profile pr = slab ? eval_profile(mode.profile, h, z) : Profile{};
      for (int i2 = 0; i2 < grid.n[1]; ++i2)
        for (int i1 = 0; i1 < grid.n[0]; ++i1) {
          const std::size_t q = grid.index(i1, i2, i3);
          const ModeSample s =
              sample_with_profile(mode, k, {grid.coords[0][i1], grid.coords[1][i2], z}, pr);
          for (int c = 0; c < 3; ++c) {
            value_[c](q, j) = s.value[c];
            for (int d = 0; d < 3; ++d) gradient_[3 * c + d](q, j) = s.gradient[c][d];
          }
        }
    }
  }
  if (slab) {
    for (int side = 0; side < 2; ++side) {
      const int i3 = side == 0 ? 0 : grid.n[2] - 1;
      for (int i2 = 0; i2 < grid.n[1]; ++i2)
        for (int i1 = 0; i1 < grid.n[0]; ++i1) walls_[side].push_back(grid.index(i1, i2, i3));
    }
  }
}

double FieldSampler::wall_weight(std::size_t q) const {
  const std::size_t i1 = q % grid_.n[0];
  const std::size_t i2 = (q / grid_.n[0]) % grid_.n[1];
  return grid_.axis_weights[0][i1] * grid_.axis_weights[1][i2];
}

VelocityField FieldSampler::evaluate(const Eigen::VectorXd& coeffs) const {
  if (coeffs.size() != modes_) throw std::invalid_argument("evaluate: coefficient length mismatch");
  VelocityField u(nodes(), 3);
  for (int c = 0; c < 3; ++c) u.col(c).noalias() = value_[c] * coeffs;
  return u;
}

std::array<Eigen::VectorXd, 9> FieldSampler::evaluate_gradient(const Eigen::VectorXd& coeffs) const {
  if (coeffs.size() != modes_) throw std::invalid_argument("evaluate: coefficient length mismatch");
  std::array<Eigen::VectorXd, 9> g;
  for (int i = 0; i < 9; ++i) g[i].noalias() = gradient_[i] * coeffs;
  return g;
}

Eigen::VectorXd FieldSampler::project(const VelocityField& field) const {
  if (static_cast<std::size_t>(field.rows()) != nodes())
    throw std::invalid_argument("project: field is not sampled on this grid");
  Eigen::VectorXd out = Eigen::VectorXd::Zero(modes_);
  for (int c = 0; c < 3; ++c) {
    const Eigen::VectorXd wf = weights_.cwiseProduct(field.col(c));
    out.noalias() += value_[c].transpose() * wf;
  }
  return out;
}

void refresh_grams(BasisSet& basis) {
  const FieldSampler s(basis);
  const int m = basis.size();
  basis.h1_gram.setZero(m, m);
  for (int i = 0; i < 9; ++i) {
    const Eigen::MatrixXd wg = s.weights().asDiagonal() * s.gradient(i / 3, i % 3);
    basis.h1_gram.noalias() += s.gradient(i / 3, i % 3).transpose() * wg;
  }
  basis.h1_gram = 0.5 * (basis.h1_gram + basis.h1_gram.transpose()).eval();
  basis.boundary_gram.setZero(m, m);
  if (basis.domain.has_boundary() && basis.domain.friction > 0.0) {
    for (int side = 0; side < 2; ++side) {
      const auto& nodes = s.wall_nodes(side);
      for (int c = 0; c < 2; ++c) {
        Eigen::MatrixXd rows(nodes.size(), m);
        Eigen::VectorXd w(nodes.size());
        for (std::size_t r = 0; r < nodes.size(); ++r) {
          rows.row(r) = s.value(c).row(nodes[r]);
          w(r) = s.wall_weight(nodes[r]);
        }
        basis.boundary_gram.noalias() +=
            basis.domain.friction * rows.transpose() * (w.asDiagonal() * rows);
      }
    }
    basis.boundary_gram = 0.5 * (basis.boundary_gram + basis.boundary_gram.transpose()).eval();
  }
}

CertificationReport verify_basis(const BasisSet& basis, double tol) {
  return verify_basis(basis, tol, basis.grid);
}

CertificationReport verify_basis(const BasisSet& basis, double tol, const QuadratureGrid& grid) {
  CertificationReport r;
  r.tolerance = tol;
  const FieldSampler s(basis, grid);
  const int m = basis.size();
  const double alpha = basis.domain.friction;
  std::vector<double> worst(m, 0.0);
  auto update = [&](double value, int j, double& global, int& where) {
    if (value > global) {
      global = value;
      where = j;
    }
    worst[j] = std::max(worst[j], value);
  };
  for (int j = 0; j < m; ++j) {
    const Eigen::VectorXd div = s.gradient(0, 0).col(j) + s.gradient(1, 1).col(j) + s.gradient(2, 2).col(j);
    update(div.cwiseAbs().maxCoeff(), j, r.max_divergence, r.worst_divergence_mode);
    if (!basis.domain.has_boundary()) continue;
    for (int side = 0; side < 2; ++side) {
      const double sign = side == 0 ? -1.0 : 1.0;  // outward normal is sign * e_z
      for (std::size_t q : s.wall_nodes(side)) {
        update(std::abs(s.value(2)(q, j)), j, r.max_normal_trace, r.worst_normal_trace_mode);
        for (int t = 0; t < 2; ++t) {
          // tangential component of 2 D(w) nu = sign * (d_z w_t + d_t w_z)
          const double stress = sign * (s.gradient(t, 2)(q, j) + s.gradient(2, t)(q, j));
          update(std::abs(stress + alpha * s.value(t)(q, j)), j, r.max_slip, r.worst_slip_mode);
        }
      }
    }
  }
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(m, m);
  for (int c = 0; c < 3; ++c)
    gram.noalias() += s.value(c).transpose() * (s.weights().asDiagonal() * s.value(c));
  // An off-diagonal defect is blamed on the member of the pair whose row
  // deviates more in total, so a single bad mode is not mirrored onto others.
  const Eigen::MatrixXd dev = (gram - Eigen::MatrixXd::Identity(m, m)).cwiseAbs();
  const Eigen::VectorXd row_total = dev.rowwise().sum();
  if (m > 0) r.max_gram_deviation = dev.maxCoeff();
  row_total.maxCoeff(&r.worst_gram_mode);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) {
      if (i != j && row_total(i) < row_total(j)) continue;
      worst[i] = std::max(worst[i], dev(i, j));
    }
  for (int j = 0; j < m; ++j)
    if (!(worst[j] <= tol)) r.failing_modes.push_back(j);
  r.pass = r.failing_modes.empty();
  return r;
}

VelocityField evaluate_field(const BasisSet& basis, const Eigen::VectorXd& coeffs,
                             const QuadratureGrid& grid) {
  if (coeffs.size() != basis.size())
    throw std::invalid_argument("evaluate_field: coefficient length mismatch");
  // streamed per node so large verification grids stay cheap in memory
  VelocityField u = VelocityField::Zero(static_cast<Eigen::Index>(grid.size()), 3);
  for (std::size_t q = 0; q < grid.size(); ++q) {
    const auto x = grid.point(q);
    for (int j = 0; j < basis.size(); ++j) {
      if (coeffs(j) == 0.0) continue;
      const ModeSample s = sample_mode(basis.modes[j], basis.domain, x);
      for (int c = 0; c < 3; ++c) u(static_cast<Eigen::Index>(q), c) += coeffs(j) * s.value[c];
    }
  }
  return u;
}

Eigen::VectorXd project_field(const BasisSet& basis, const VelocityField& field) {
  return project_field(basis, field, basis.grid);
}

Eigen::VectorXd project_field(const BasisSet& basis, const VelocityField& field,
                              const QuadratureGrid& grid) {
  if (static_cast<std::size_t>(field.rows()) != grid.size())
    throw std::invalid_argument("project_field: field is not sampled on the grid");
  Eigen::VectorXd out = Eigen::VectorXd::Zero(basis.size());
  for (std::size_t q = 0; q < grid.size(); ++q) {
    const auto x = grid.point(q);
    const double w = grid.weight(q);
    for (int j = 0; j < basis.size(); ++j) {
      const ModeSample s = sample_mode(basis.modes[j], basis.domain, x);
      double dot = 0.0;
      for (int c = 0; c < 3; ++c) dot += s.value[c] * field(static_cast<Eigen::Index>(q), c);
      out(j) += w * dot;
    }
  }
  return out;
}

namespace {
void check_dims(const BasisSet& basis, const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  if (a.size() != basis.size() || b.size() != basis.size())
    throw std::invalid_argument("inner product: coefficient length mismatch");
}
}  // namespace

double inner_l2(const BasisSet& basis, const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  check_dims(basis, a, b);
  return a.dot(b);
}

double inner_h1(const BasisSet& basis, const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  check_dims(basis, a, b);
  return a.dot(basis.h1_gram * b);
}

double inner_boundary(const BasisSet& basis, const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  check_dims(basis, a, b);
  return a.dot(basis.boundary_gram * b);
}

}  // namespace navslip
