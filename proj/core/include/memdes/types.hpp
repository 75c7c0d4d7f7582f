#pragma once

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace memdes {

using Index = Eigen::Index;
using cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using CRow = Eigen::RowVectorXcd;

/// One byte per DOF, 0 or 1. Stored as bytes so files and memory agree bit for bit.
using Mask = std::vector<std::uint8_t>;

inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

/// Free-space constants (SI).
inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kC0 = 299792458.0;
inline constexpr double kMu0 = 4.0e-7 * kPi;
inline constexpr double kEta0 = kMu0 * kC0;
inline constexpr double kEps0 = 1.0 / (kMu0 * kC0 * kC0);

/// Frequency metadata. NaN marks an unknown value.
struct FrequencyMeta {
  double frequency_hz = kNaN;
  double wavenumber = kNaN;
  double radius = kNaN;

  double ka() const { return wavenumber * radius; }
};

/// All system matrices of one design problem.
///
/// Z is the unconjugated-symmetric impedance matrix, Z = R0 + R_rho + jX.
/// R0, X, W and R_rho are Hermitian. Excitations and far-field rows are
/// dense vectors over all N DOF.
struct OperatorBundle {
  Index n_dof = 0;
  CMatrix Z;
  CMatrix R0;
  CMatrix X;
  std::optional<CMatrix> W;
  std::optional<CMatrix> R_rho;
  std::vector<CRow> F;
  std::vector<CVector> V;
  std::optional<CMatrix> tm_projector;
  Mask fixed_mask;
  Mask controllable_mask;
  std::optional<Mask> chip_mask;
  FrequencyMeta meta;
};

/// Strict equality of every stored bit (NaN-safe).
bool bitwise_equal(const OperatorBundle& a, const OperatorBundle& b);

/// Result of one structural check performed by validate().
struct CheckResult {
  std::string name;
  bool passed = true;
  std::string detail;
};

/// Runs every invariant check and returns one entry per check.
std::vector<CheckResult> check_bundle(const OperatorBundle& bundle);

/// Throws ValidationError naming the first failed check.
void validate(const OperatorBundle& bundle);

std::vector<Index> fixed_indices(const OperatorBundle& bundle);
std::vector<Index> controllable_indices(const OperatorBundle& bundle);
std::vector<Index> chip_indices(const OperatorBundle& bundle);
Index n_opt(const OperatorBundle& bundle);

/// Binary gene over the controllable DOF, in ascending DOF order.
struct Word {
  std::vector<std::uint8_t> bits;

  Word() = default;
  explicit Word(std::vector<std::uint8_t> b) : bits(std::move(b)) {}
  static Word zeros(Index n) { return Word(std::vector<std::uint8_t>(static_cast<std::size_t>(n), 0)); }
  static Word ones(Index n) { return Word(std::vector<std::uint8_t>(static_cast<std::size_t>(n), 1)); }
  /// Parses a string of '0'/'1' characters.
  static Word from_string(const std::string& s);

  Index size() const { return static_cast<Index>(bits.size()); }
  std::string to_string() const;
  Index popcount() const;

  friend bool operator==(const Word&, const Word&) = default;
  friend auto operator<=>(const Word&, const Word&) = default;
};

Index hamming_distance(const Word& a, const Word& b);

/// Enabled index set: fixed DOF plus every controllable DOF whose bit is set, ascending.
std::vector<Index> materialize(const Word& word, const OperatorBundle& bundle);

/// Inverse of materialize on the controllable DOF.
Word word_from_support(std::span<const Index> support, const OperatorBundle& bundle);

enum class ObjectiveKind { Q, QMatched, RealizedGain, AbsorbedPower };

std::string to_string(ObjectiveKind kind);
ObjectiveKind parse_objective_kind(const std::string& name);

/// Which metric is optimized and with what parameters.
struct ObjectiveSpec {
  ObjectiveKind kind = ObjectiveKind::Q;
  double zeta = 0.0;
  cplx z0{50.0, 0.0};
  /// Normalization Q_lb for QMatched; NaN until set.
  double q_lb_ref = kNaN;
  Index field_index = 0;
  /// Delta-gap DOF; negative selects the first fixed DOF (or the largest |V| entry).
  Index feed_index = -1;
  Index excitation_index = 0;
  /// +1 minimize, -1 maximize by negation, 0 picks the natural sense of the metric.
  int sign = 0;
};

/// Natural optimization sense: Q metrics are minimized, gain and absorbed power maximized.
int effective_sign(const ObjectiveSpec& spec);

/// Memetic run parameters.
struct RunConfig {
  int n_agents = 16;
  int max_global_iters = 250;
  double eps_glob = 1e-7;
  double eps_loc = 1e-7;
  int max_local_iters = 1000000;
  std::uint64_t rng_seed = 1;
  double crossover_rate = 0.9;
  /// Per-bit mutation probability; negative selects 1/N_opt.
  double mutation_rate = -1.0;
  int tournament_size = 2;
  int elitism_count = 1;
  double init_fill_probability = 0.5;
  int refactor_period = 64;
  /// Consecutive non-improving generations tolerated before stopping.
  int stall_generations = 1;
  /// Worker threads; 0 selects the number of logical cores.
  int threads = 0;
  /// Write wall-clock seconds into logs; disable for byte-reproducible output.
  bool log_wall_time = true;
  std::string output_dir = ".";

  /// Mutation rate with the 1/N_opt default resolved.
  double resolved_mutation_rate(Index n_opt) const;
  /// Throws ConfigError on an invalid combination.
  void validate() const;
};

}  // namespace memdes
