#ifndef QFTNMR_CORE_HPP
#define QFTNMR_CORE_HPP

#include <complex>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

// Exact dense linear-algebra substrate for small spin systems (n <= 12
// qubits by hard cap, n <= 4 in practice).
//
// Basis convention, fixed project-wide: qubit/spin 1 is the most
// significant bit. A computational basis state |x_1 x_2 ... x_n> maps to
// the integer x = sum_j x_j 2^(n-j), so |000>+|100> on three qubits reads
// as |0>+|4>.

namespace qftnmr {

using cx = std::complex<double>;
using Vec = Eigen::VectorXcd;
using Mat = Eigen::MatrixXcd;

inline constexpr int kMaxQubits = 12;
inline constexpr double kHermTol = 1e-12;
inline constexpr double kUnitaryTol = 1e-10;

long dim_of(int n_qubits);  // 2^n, throws on n outside [1, kMaxQubits]

// Bit of basis index `x` belonging to qubit `q` (1-based, MSB-first).
inline int qubit_bit(long x, int q, int n) { return static_cast<int>((x >> (n - q)) & 1); }

// ---------------------------------------------------------------------------
// Domain types

struct StateVector {
  int n_qubits = 0;
  Vec amplitudes;

  static StateVector basis(int n, long index);
  static StateVector zero_state(int n) { return basis(n, 0); }

  double norm() const { return amplitudes.norm(); }
  bool is_normalized(double tol = kHermTol) const;
  void normalize();
};

enum class MatrixKind { physical, deviation };

struct DensityMatrix {
  int n_spins = 0;
  Mat matrix;
  MatrixKind kind = MatrixKind::physical;

  static DensityMatrix from_pure(const StateVector& psi);
  // |psi><psi| - I/2^n, the traceless part actually visible in NMR.
  static DensityMatrix deviation_of_pure(const StateVector& psi);

  // Throws std::invalid_argument when the Hermiticity / trace / positivity
  // invariants of the declared kind are violated.
  void validate(double tol = kHermTol) const;
};

struct SpinOperator {
  int n_spins = 0;
  Mat matrix;
  std::string label;
};

// Single-spin operators (2x2), Pauli/2 normalization.
Mat op_ix();
Mat op_iy();
Mat op_iz();
Mat op_proj_alpha();  // |0><0| = 1/2 + I_z
Mat op_proj_beta();   // |1><1| = 1/2 - I_z
Mat op_identity2();

// I_axis (or projector) of `spin` embedded in an n-spin system.
SpinOperator embedded(const Mat& single, int spin, int n, const std::string& label = "");
SpinOperator spin_iz(int spin, int n);
SpinOperator spin_ix(int spin, int n);
SpinOperator spin_iy(int spin, int n);
SpinOperator spin_alpha(int spin, int n);

// ---------------------------------------------------------------------------
// Operations

// Kronecker products in declared qubit order (first argument = MSB side).
// Throws std::length_error when the combined dimension exceeds 2^12.
StateVector tensor(const std::vector<StateVector>& parts);
SpinOperator tensor(const std::vector<SpinOperator>& parts);
Mat kron(const Mat& a, const Mat& b);

// |psi> -> U|psi>, rho -> U rho U^dag. U is checked for unitarity within
// kUnitaryTol (inf-norm of U^dag U - 1); violations throw with the residual.
StateVector apply_unitary(const StateVector& psi, const Mat& u);
DensityMatrix apply_unitary(const DensityMatrix& rho, const Mat& u);

// Born-rule probabilities over the computational basis. Deviation-kind
// density matrices have no probability semantics and throw.
Eigen::VectorXd measure_distribution(const StateVector& psi);
Eigen::VectorXd measure_distribution(const DensityMatrix& rho);

// Reduced density matrix over `keep` (1-based spin labels, ascending output
// order). Throws on an empty subset.
DensityMatrix partial_trace(const DensityMatrix& rho, const std::vector<int>& keep);

// Deterministic RNG used everywhere draws are needed. The uniform double is
// derived from the raw 64-bit stream so sequences are reproducible across
// platforms (std::uniform_real_distribution is implementation-defined).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  std::uint64_t raw() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

long sample_index(const Eigen::VectorXd& probs, Rng& rng);

std::vector<long> sample(const StateVector& psi, std::uint64_t seed, int shots);
std::vector<long> sample(const DensityMatrix& rho, std::uint64_t seed, int shots);

}  // namespace qftnmr

#endif
