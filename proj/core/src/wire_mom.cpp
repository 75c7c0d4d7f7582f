// Thin-wire Galerkin MoM for parallel z-directed dipoles.
//
// Basis: triangle functions at the interior nodes of each wire. With
// g = e^{-jkR}/R the impedance entries are
//   Z_mn = (jη/4π) [ k ∫∫ Λ_m Λ_n g  −  (1/k) ∫∫ Λ'_m Λ'_n g ].
// X uses the reduced kernel cos(kR)/R, R = sqrt(u² + a²) on the same wire.
// R0 uses sin(kR)/R on the wire axes, which is smooth and is exactly the
// radiated power form seen by the far-field row F.

#include "memdes/opgen.hpp"

#include "memdes/errors.hpp"

#include <boost/math/quadrature/gauss.hpp>

#include <array>
#include <cmath>

namespace memdes {
namespace {

struct Rule {
  std::vector<double> x;
  std::vector<double> w;
};

const Rule& reference_rule() {
  static const Rule rule = [] {
    using G = boost::math::quadrature::gauss<double, 8>;
    Rule r;
    for (std::size_t i = 0; i < G::abscissa().size(); ++i) {
      const double xi = G::abscissa()[i], wi = G::weights()[i];
      r.x.push_back(-xi);
      r.w.push_back(wi);
      if (xi != 0.0) {
        r.x.push_back(xi);
        r.w.push_back(wi);
      }
    }
    return r;
  }();
  return rule;
}

template <typename F>
void for_gauss(double a, double b, F&& f) {
  const Rule& r = reference_rule();
  const double h = 0.5 * (b - a), c = 0.5 * (a + b);
  for (std::size_t i = 0; i < r.x.size(); ++i) f(c + h * r.x[i], h * r.w[i]);
}

// Outer rule graded toward both segment ends, where the inner integral of
// the reduced kernel varies on the scale of the wire radius.
template <typename F>
void for_graded(double a, double b, F&& f) {
  static constexpr std::array<double, 11> brk{0.0, 0.01, 0.04, 0.12, 0.3, 0.5, 0.7, 0.88, 0.96, 0.99, 1.0};
  for (std::size_t i = 0; i + 1 < brk.size(); ++i) for_gauss(a + (b - a) * brk[i], a + (b - a) * brk[i + 1], f);
}

// Local shapes on a segment: 0 falls from its lower node, 1 rises to its upper node.
struct PairIntegrals {
  double shape[2][2] = {{0, 0}, {0, 0}};
  double flat = 0;
};

struct Kernels {
  PairIntegrals cos_part;
  PairIntegrals sin_part;
};

double sinc_kernel(double k, double r) { return r == 0.0 ? k : std::sin(k * r) / r; }

Kernels segment_pair(double s0, double t0, double delta, double rho_c, double rho_s, double k, bool graded) {
  Kernels out;
  const double s1 = s0 + delta, t1 = t0 + delta;

  auto outer = [&](double z, double wz) {
    const double u0 = t0 - z, u1 = t1 - z;
    // ∫ K du and ∫ u K du over the source segment, u = z' − z.
    double c0 = std::asinh(u1 / rho_c) - std::asinh(u0 / rho_c);
    double c1 = std::hypot(u1, rho_c) - std::hypot(u0, rho_c);
    double n0 = 0, n1 = 0;
    auto inner = [&](double a, double b) {
      for_gauss(a, b, [&](double u, double wu) {
        const double rc = std::hypot(u, rho_c);
        const double smooth = (std::cos(k * rc) - 1.0) / rc;
        c0 += wu * smooth;
        c1 += wu * u * smooth;
        const double ks = sinc_kernel(k, std::hypot(u, rho_s));
        n0 += wu * ks;
        n1 += wu * u * ks;
      });
    };
    if (u0 < 0.0 && u1 > 0.0) {
      inner(u0, 0.0);
      inner(0.0, u1);
    } else {
      inner(u0, u1);
    }
    const double phi[2] = {(s1 - z) / delta, (z - s0) / delta};
    const double cs[2] = {(u1 * c0 - c1) / delta, (c1 - u0 * c0) / delta};
    const double ns[2] = {(u1 * n0 - n1) / delta, (n1 - u0 * n0) / delta};
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b) {
        out.cos_part.shape[a][b] += wz * phi[a] * cs[b];
        out.sin_part.shape[a][b] += wz * phi[a] * ns[b];
      }
    out.cos_part.flat += wz * c0;
    out.sin_part.flat += wz * n0;
  };
  if (graded)
    for_graded(s0, s1, outer);
  else
    for_gauss(s0, s1, outer);
  return out;
}

struct Assembled {
  Eigen::MatrixXd R0;
  Eigen::MatrixXd X;
};

Assembled assemble(const WireLayout& g, Index n_dip, double k) {
  const Index m = g.per_dipole;
  const Index n = n_dip * m;
  const Index nseg = m + 1;
  const double d = g.delta;
  const double scale = kEta0 / (4.0 * kPi);
  Assembled A{Eigen::MatrixXd::Zero(n, n), Eigen::MatrixXd::Zero(n, n)};

  // DOF owning local shape `a` of segment s, or -1 at a wire end.
  auto owner = [&](Index wire, Index s, int a) -> Index {
    const Index node = a == 0 ? s : s + 1;
    if (node < 1 || node > m) return -1;
    return wire * m + node - 1;
  };
  const double slope[2] = {-1.0 / d, 1.0 / d};

  for (Index p = 0; p < n_dip; ++p)
    for (Index q = 0; q < n_dip; ++q) {
      const bool same = p == q;
      const double dist = std::abs(static_cast<double>(q - p)) * g.spacing;
      const double rho_c = same ? g.radius : dist;
      const double rho_s = same ? 0.0 : dist;
      for (Index s = 0; s < nseg; ++s)
        for (Index t = 0; t < nseg; ++t) {
          const double s0 = -0.5 * g.length + static_cast<double>(s) * d;
          const double t0 = -0.5 * g.length + static_cast<double>(t) * d;
          const bool near = std::abs(static_cast<double>(s - t)) * d <= 2.0 * d && rho_c < 2.0 * d;
          const Kernels kr = segment_pair(s0, t0, d, rho_c, rho_s, k, near);
          for (int a = 0; a < 2; ++a) {
            const Index i = owner(p, s, a);
            if (i < 0) continue;
            for (int b = 0; b < 2; ++b) {
              const Index j = owner(q, t, b);
              if (j < 0) continue;
              const double sq = slope[a] * slope[b];
              A.X(i, j) += scale * (k * kr.cos_part.shape[a][b] - sq * kr.cos_part.flat / k);
              A.R0(i, j) += scale * (k * kr.sin_part.shape[a][b] - sq * kr.sin_part.flat / k);
            }
          }
        }
    }
  A.X = 0.5 * (A.X + A.X.transpose()).eval();
  A.R0 = 0.5 * (A.R0 + A.R0.transpose()).eval();
  return A;
}

}  // namespace

double surface_resistance(double wavenumber, double conductivity) {
  return std::sqrt(wavenumber * kEta0 / (2.0 * conductivity));
}

WireLayout wire_layout(const WireArrayParams& p) {
  if (p.n_dipoles < 1) throw DomainError("wire array needs at least one dipole");
  if (p.segments_per_dipole < 1 || p.segments_per_dipole % 2 == 0)
    throw DomainError("segments_per_dipole must be odd so a node sits at the dipole centre");
  if (!(p.length_over_lambda > 0.0)) throw DomainError("dipole length must be positive");
  if (!(p.frequency_hz > 0.0)) throw DomainError("frequency must be positive");
  if (!(p.conductivity > 0.0)) throw DomainError("conductivity must be positive");

  WireLayout g;
  g.wavelength = kC0 / p.frequency_hz;
  g.wavenumber = 2.0 * kPi / g.wavelength;
  g.length = p.length_over_lambda * g.wavelength;
  g.spacing = p.spacing_over_lambda * g.wavelength;
  g.radius = p.wire_radius > 0.0 ? p.wire_radius : g.length / 240.0;
  g.per_dipole = p.segments_per_dipole;
  g.delta = g.length / static_cast<double>(g.per_dipole + 1);
  if (g.radius >= g.delta) throw DomainError("wire radius must be smaller than the segment length");
  if (p.n_dipoles > 1 && g.spacing <= 2.0 * g.radius) throw DomainError("dipoles overlap: spacing <= 2 * radius");

  const Index feed_dipole = p.n_dipoles > 1 ? 1 : 0;
  g.feed_dof = feed_dipole * g.per_dipole + g.per_dipole / 2;
  for (Index i = 0; i < p.n_dipoles; ++i)
    for (Index j = 1; j <= g.per_dipole; ++j) {
      g.x.push_back(static_cast<double>(i) * g.spacing);
      g.z.push_back(-0.5 * g.length + static_cast<double>(j) * g.delta);
    }
  return g;
}

OperatorBundle gen_wire_array(const WireArrayParams& p) {
  const WireLayout g = wire_layout(p);
  const Index n = static_cast<Index>(g.x.size());
  const double k = g.wavenumber;

  const Assembled base = assemble(g, p.n_dipoles, k);
  const double h = 1e-4;
  const Assembled up = assemble(g, p.n_dipoles, k * (1.0 + h));
  const Assembled dn = assemble(g, p.n_dipoles, k * (1.0 - h));
  const Eigen::MatrixXd W = (up.X - dn.X) / (2.0 * h);

  OperatorBundle b;
  b.n_dof = n;
  b.R0 = base.R0.cast<cplx>();
  b.X = base.X.cast<cplx>();
  b.W = W.cast<cplx>();
  const double rs = std::isinf(p.conductivity) ? 0.0 : surface_resistance(k, p.conductivity);
  b.R_rho = CMatrix::Identity(n, n) * cplx(rs * g.delta / (2.0 * kPi * g.radius), 0.0);
  b.Z = b.R0 + *b.R_rho + cplx(0.0, 1.0) * b.X;

  CRow f(n);
  const double amp = k * std::sqrt(kEta0 / (4.0 * kPi)) * g.delta;
  for (Index i = 0; i < n; ++i) f(i) = amp * std::exp(cplx(0.0, k * g.x[static_cast<std::size_t>(i)]));
  b.F.push_back(f);

  CVector v = CVector::Zero(n);
  v(g.feed_dof) = 1.0;
  b.V.push_back(v);
  b.fixed_mask.assign(static_cast<std::size_t>(n), 0);
  b.controllable_mask.assign(static_cast<std::size_t>(n), 1);
  b.fixed_mask[static_cast<std::size_t>(g.feed_dof)] = 1;
  b.controllable_mask[static_cast<std::size_t>(g.feed_dof)] = 0;

  b.meta.frequency_hz = p.frequency_hz;
  b.meta.wavenumber = k;
  const double half_x = 0.5 * static_cast<double>(p.n_dipoles - 1) * g.spacing;
  b.meta.radius = std::hypot(half_x, 0.5 * g.length);
  validate(b);
  return b;
}

}  // namespace memdes
