#include "memdes/types.hpp"

#include "memdes/errors.hpp"

#include <algorithm>
#include <cstring>
#include <sstream>

namespace memdes {
namespace {

constexpr double kSymmetryTol = 1e-12;
constexpr double kPsdTol = 1e-10;

bool same_bits(const CMatrix& a, const CMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
  return a.size() == 0 || std::memcmp(a.data(), b.data(), sizeof(cplx) * static_cast<std::size_t>(a.size())) == 0;
}

template <typename T>
bool same_bits_opt(const std::optional<T>& a, const std::optional<T>& b) {
  if (a.has_value() != b.has_value()) return false;
  return !a || same_bits(*a, *b);
}

bool same_double(double a, double b) { return std::memcmp(&a, &b, sizeof(double)) == 0; }

double max_abs(const CMatrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

std::string fmt_ratio(double value, double tol) {
  std::ostringstream os;
  os.precision(3);
  os << std::scientific << "relative deviation " << value << " exceeds " << tol;
  return os.str();
}

CheckResult check_hermitian(const std::string& name, const CMatrix& m) {
  CheckResult r{name + " Hermitian", true, {}};
  const double scale = max_abs(m);
  const double dev = max_abs(m - m.adjoint());
  if (dev > kSymmetryTol * std::max(scale, 1e-300)) {
    r.passed = false;
    r.detail = fmt_ratio(dev / scale, kSymmetryTol);
  }
  return r;
}

CheckResult check_psd(const std::string& name, const CMatrix& m) {
  CheckResult r{name + " PSD", true, {}};
  if (m.size() == 0) return r;
  const CMatrix h = 0.5 * (m + m.adjoint());
  Eigen::SelfAdjointEigenSolver<CMatrix> es(h, Eigen::EigenvaluesOnly);
  const auto& ev = es.eigenvalues();
  const double norm = ev.cwiseAbs().maxCoeff();
  if (ev.minCoeff() < -kPsdTol * norm) {
    r.passed = false;
    std::ostringstream os;
    os.precision(3);
    os << std::scientific << "min eigenvalue " << ev.minCoeff() << " below -" << kPsdTol << " * norm " << norm;
    r.detail = os.str();
  }
  return r;
}

bool is_binary(const Mask& m) {
  return std::all_of(m.begin(), m.end(), [](std::uint8_t v) { return v <= 1; });
}

std::vector<Index> mask_indices(const Mask& m) {
  std::vector<Index> out;
  for (std::size_t i = 0; i < m.size(); ++i)
    if (m[i]) out.push_back(static_cast<Index>(i));
  return out;
}

}  // namespace

bool bitwise_equal(const OperatorBundle& a, const OperatorBundle& b) {
  if (a.n_dof != b.n_dof) return false;
  if (!same_bits(a.Z, b.Z) || !same_bits(a.R0, b.R0) || !same_bits(a.X, b.X)) return false;
  if (!same_bits_opt(a.W, b.W) || !same_bits_opt(a.R_rho, b.R_rho) || !same_bits_opt(a.tm_projector, b.tm_projector))
    return false;
  if (a.F.size() != b.F.size() || a.V.size() != b.V.size()) return false;
  for (std::size_t i = 0; i < a.F.size(); ++i)
    if (!same_bits(a.F[i], b.F[i])) return false;
  for (std::size_t i = 0; i < a.V.size(); ++i)
    if (!same_bits(a.V[i], b.V[i])) return false;
  if (a.fixed_mask != b.fixed_mask || a.controllable_mask != b.controllable_mask || a.chip_mask != b.chip_mask)
    return false;
  return same_double(a.meta.frequency_hz, b.meta.frequency_hz) && same_double(a.meta.wavenumber, b.meta.wavenumber) &&
         same_double(a.meta.radius, b.meta.radius);
}

std::vector<CheckResult> check_bundle(const OperatorBundle& b) {
  std::vector<CheckResult> out;
  const Index n = b.n_dof;

  CheckResult dims{"dimensions", true, {}};
  auto square = [&](const CMatrix& m, const char* name) {
    if (m.rows() != n || m.cols() != n) {
      dims.passed = false;
      dims.detail += std::string(name) + " is " + std::to_string(m.rows()) + "x" + std::to_string(m.cols()) + "; ";
    }
  };
  square(b.Z, "Z");
  square(b.R0, "R0");
  square(b.X, "X");
  if (b.W) square(*b.W, "W");
  if (b.R_rho) square(*b.R_rho, "R_rho");
  for (const auto& f : b.F)
    if (f.size() != n) dims.passed = false, dims.detail += "F row length mismatch; ";
  for (const auto& v : b.V)
    if (v.size() != n) dims.passed = false, dims.detail += "V length mismatch; ";
  if (b.tm_projector && b.tm_projector->cols() != n) dims.passed = false, dims.detail += "TM projector width; ";
  if (static_cast<Index>(b.fixed_mask.size()) != n || static_cast<Index>(b.controllable_mask.size()) != n ||
      (b.chip_mask && static_cast<Index>(b.chip_mask->size()) != n)) {
    dims.passed = false;
    dims.detail += "mask length mismatch; ";
  }
  out.push_back(dims);
  if (!dims.passed) return out;

  CheckResult finite{"finite entries", true, {}};
  auto fin = [&](const CMatrix& m, const char* name) {
    if (!m.allFinite()) finite.passed = false, finite.detail += std::string(name) + " ";
  };
  fin(b.Z, "Z");
  fin(b.R0, "R0");
  fin(b.X, "X");
  if (b.W) fin(*b.W, "W");
  if (b.R_rho) fin(*b.R_rho, "R_rho");
  for (const auto& v : b.V) fin(v, "V");
  for (const auto& f : b.F) fin(f, "F");
  out.push_back(finite);
  if (!finite.passed) return out;

  const double zscale = std::max(max_abs(b.Z), 1e-300);
  {
    CheckResult r{"Z symmetry", true, {}};
    const double dev = max_abs(b.Z - b.Z.transpose()) / zscale;
    if (dev > kSymmetryTol) r.passed = false, r.detail = fmt_ratio(dev, kSymmetryTol);
    out.push_back(r);
  }
  {
    CheckResult r{"Z decomposition", true, {}};
    CMatrix sum = b.R0 + cplx(0.0, 1.0) * b.X;
    if (b.R_rho) sum += *b.R_rho;
    const double dev = max_abs(b.Z - sum) / zscale;
    if (dev > kSymmetryTol) r.passed = false, r.detail = fmt_ratio(dev, kSymmetryTol);
    out.push_back(r);
  }
  out.push_back(check_hermitian("R0", b.R0));
  out.push_back(check_hermitian("X", b.X));
  if (b.W) out.push_back(check_hermitian("W", *b.W));
  if (b.R_rho) out.push_back(check_hermitian("R_rho", *b.R_rho));
  out.push_back(check_psd("R0", b.R0));
  if (b.R_rho) out.push_back(check_psd("R_rho", *b.R_rho));

  CheckResult masks{"mask values", true, {}};
  if (!is_binary(b.fixed_mask) || !is_binary(b.controllable_mask) || (b.chip_mask && !is_binary(*b.chip_mask))) {
    masks.passed = false;
    masks.detail = "mask entries must be 0 or 1";
  }
  out.push_back(masks);

  CheckResult disjoint{"mask disjointness", true, {}};
  for (Index i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    if (b.fixed_mask[k] && b.controllable_mask[k]) {
      disjoint.passed = false;
      disjoint.detail = "DOF " + std::to_string(i) + " is both fixed and controllable";
      break;
    }
    if (b.chip_mask && (*b.chip_mask)[k] && b.controllable_mask[k]) {
      disjoint.passed = false;
      disjoint.detail = "DOF " + std::to_string(i) + " is both chip and controllable";
      break;
    }
  }
  out.push_back(disjoint);
  return out;
}

void validate(const OperatorBundle& bundle) {
  for (const auto& c : check_bundle(bundle))
    if (!c.passed) throw ValidationError(c.name, c.detail);
}

std::vector<Index> fixed_indices(const OperatorBundle& b) { return mask_indices(b.fixed_mask); }
std::vector<Index> controllable_indices(const OperatorBundle& b) { return mask_indices(b.controllable_mask); }
std::vector<Index> chip_indices(const OperatorBundle& b) { return b.chip_mask ? mask_indices(*b.chip_mask) : std::vector<Index>{}; }

Index n_opt(const OperatorBundle& b) {
  return static_cast<Index>(std::count_if(b.controllable_mask.begin(), b.controllable_mask.end(),
                                          [](std::uint8_t v) { return v != 0; }));
}

Word Word::from_string(const std::string& s) {
  Word w;
  w.bits.reserve(s.size());
  for (char c : s) {
    if (c != '0' && c != '1') throw ConfigError("word contains a character other than 0/1");
    w.bits.push_back(c == '1' ? 1 : 0);
  }
  return w;
}

std::string Word::to_string() const {
  std::string s(bits.size(), '0');
  for (std::size_t i = 0; i < bits.size(); ++i)
    if (bits[i]) s[i] = '1';
  return s;
}

Index Word::popcount() const { return static_cast<Index>(std::count(bits.begin(), bits.end(), std::uint8_t{1})); }

Index hamming_distance(const Word& a, const Word& b) {
  if (a.size() != b.size()) throw ConfigError("hamming distance of words with different lengths");
  Index d = 0;
  for (std::size_t i = 0; i < a.bits.size(); ++i) d += (a.bits[i] != b.bits[i]);
  return d;
}

std::vector<Index> materialize(const Word& word, const OperatorBundle& bundle) {
  if (word.size() != n_opt(bundle))
    throw ConfigError("word length " + std::to_string(word.size()) + " does not match N_opt " +
                      std::to_string(n_opt(bundle)));
  std::vector<Index> out;
  std::size_t bit = 0;
  for (Index i = 0; i < bundle.n_dof; ++i) {
    const auto k = static_cast<std::size_t>(i);
    if (bundle.controllable_mask[k]) {
      if (word.bits[bit++]) out.push_back(i);
    } else if (bundle.fixed_mask[k]) {
      out.push_back(i);
    }
  }
  return out;
}

Word word_from_support(std::span<const Index> support, const OperatorBundle& bundle) {
  Word w;
  for (Index i = 0; i < bundle.n_dof; ++i) {
    if (!bundle.controllable_mask[static_cast<std::size_t>(i)]) continue;
    w.bits.push_back(std::binary_search(support.begin(), support.end(), i) ? 1 : 0);
  }
  return w;
}

std::string to_string(ObjectiveKind kind) {
  switch (kind) {
    case ObjectiveKind::Q: return "q";
    case ObjectiveKind::QMatched: return "q_matched";
    case ObjectiveKind::RealizedGain: return "realized_gain";
    case ObjectiveKind::AbsorbedPower: return "absorbed_power";
  }
  return "?";
}

ObjectiveKind parse_objective_kind(const std::string& name) {
  if (name == "q") return ObjectiveKind::Q;
  if (name == "q_matched") return ObjectiveKind::QMatched;
  if (name == "realized_gain" || name == "gain") return ObjectiveKind::RealizedGain;
  if (name == "absorbed_power" || name == "pabs") return ObjectiveKind::AbsorbedPower;
  throw ConfigError("unknown objective kind '" + name + "'");
}

int effective_sign(const ObjectiveSpec& spec) {
  if (spec.sign != 0) return spec.sign > 0 ? 1 : -1;
  switch (spec.kind) {
    case ObjectiveKind::Q:
    case ObjectiveKind::QMatched: return 1;
    case ObjectiveKind::RealizedGain:
    case ObjectiveKind::AbsorbedPower: return -1;
  }
  return 1;
}

double RunConfig::resolved_mutation_rate(Index n_opt_) const {
  if (mutation_rate >= 0.0) return mutation_rate;
  return n_opt_ > 0 ? 1.0 / static_cast<double>(n_opt_) : 0.0;
}

void RunConfig::validate() const {
  auto fail = [](const std::string& m) { throw ConfigError(m); };
  if (n_agents < 2) fail("n_agents must be at least 2");
  if (max_global_iters < 1) fail("max_global_iters must be positive");
  if (!(eps_glob > 0.0) || !(eps_loc > 0.0)) fail("eps_glob and eps_loc must be positive");
  if (max_local_iters < 0) fail("max_local_iters must be non-negative");
  if (!(crossover_rate >= 0.0 && crossover_rate <= 1.0)) fail("crossover_rate must lie in [0, 1]");
  if (mutation_rate > 1.0) fail("mutation_rate must lie in [0, 1]");
  if (tournament_size < 1) fail("tournament_size must be positive");
  if (elitism_count < 0 || elitism_count > n_agents) fail("elitism_count must lie in [0, n_agents]");
  if (!(init_fill_probability >= 0.0 && init_fill_probability <= 1.0)) fail("init_fill_probability must lie in [0, 1]");
  if (refactor_period < 1) fail("refactor_period must be positive");
  if (stall_generations < 1) fail("stall_generations must be positive");
  if (threads < 0) fail("threads must be non-negative");
}

}  // namespace memdes
