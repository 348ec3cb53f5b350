#ifndef QFTNMR_PULSE_HPP
#define QFTNMR_PULSE_HPP

#include <string>
#include <vector>

#include "qftnmr/circuits.hpp"
#include "qftnmr/core.hpp"

// Pulse layer: lowering of gate circuits to spin-selective RF rotations and
// scalar-coupling evolutions, commutation-based peephole simplification,
// swap elimination by wire relabeling, and phase-insensitive equivalence
// checking.
//
// Conventions (locked by the tests in this module):
//   R_axis(theta)   = exp(-i * theta * I_axis), I = Pauli/2
//   JEvolve(j,k,th) = exp(-i * th * I_jz * I_kz)
// Under these, Z_j(pi/4) Z_k(pi/4) J_jk(-pi/2) = diag(1,1,1,i) up to a
// global phase; the general controlled-phase(pi/2^d) lowering uses z-angles
// pi/2^(d+1) with coupling angle -pi/2^d. The frequently quoted shorthand
// with all three angles equal to pi/2^d is not unitarily attainable: the
// |11> phase relative to |00> after Z_j(a)Z_k(a) is always 2a, so matching
// pi/2^d forces a = pi/2^(d+1). The coupling angle then cancels the
// single-flip phases. See README, "Controlled-phase lowering".

namespace qftnmr {

enum class Axis { x, y, z };

struct PulseOp {
  enum class Kind { rf, j_evolve, delay, gradient };

  Kind kind = Kind::rf;
  int spin = 0;              // rf target
  Axis axis = Axis::x;       // rf axis
  double angle = 0.0;        // rf / j_evolve, radians, canonicalized to (-2pi, 2pi]
  int spin_a = 0, spin_b = 0;  // j_evolve pair; optional declared pair for delay
  double duration = 0.0;     // delay, seconds

  static PulseOp rf(int spin, Axis axis, double angle);
  static PulseOp j(int a, int b, double angle);
  static PulseOp delay(double t);
  static PulseOp delay_coupled(double t, int a, int b);
  static PulseOp gradient();

  bool coherent() const { return kind == Kind::rf || kind == Kind::j_evolve; }
  bool same_shape(const PulseOp& o) const;  // equal up to angle/duration
};

double canonical_angle(double a);  // wrap into (-2pi, 2pi]

struct Relabeling {
  // perm[j-1] = wire that carries logical spin j. Empty = identity.
  std::vector<int> perm;

  static Relabeling identity(int n);
  bool is_identity() const;
  int wire_of(int logical) const;
  Mat matrix(int n) const;
  void compose_transposition(int a, int b);  // this := (a<->b) after this
  void validate(int n) const;
};

// A pulse program. `ops` is stored in time order: ops[0] acts first. The
// relabeling is a wire renaming applied on the *input* side (before ops),
// which is where swap elimination naturally deposits it: pushing a mid-
// program swap S to the front renames every earlier op (G -> S G S) and
// leaves U = G'_k ... G'_1 * S. `final_frame` records z-rotations deferred
// to the very end of the sequence (zero-cost reference-frame bookkeeping);
// they are included in program_unitary but not in coherent_op_count.
struct PulseProgram {
  int n_spins = 0;
  std::vector<PulseOp> ops;
  Relabeling relabeling;
  std::vector<std::pair<int, double>> final_frame;  // (spin, z-angle)

  void validate() const;
  int coherent_op_count() const;  // non-z rf + j_evolve ops
  bool purely_coherent() const;   // no delay / gradient ops
};

// Unitary of a single coherent op (rf or j_evolve) on n spins.
Mat pulse_matrix(const PulseOp& op, int n);

// Gate lowering (results in time order):
//   Hadamard j      -> [Y_j(pi/2), X_j(pi)]            (matrix X(pi)Y(pi/2))
//   ControlledR d   -> [Z(pi/2^(d+1)) x2, J(-pi/2^d)]
//   Swap a b        -> three controlled-NOT expansions
// Measurement gates are unsupported and throw.
std::vector<PulseOp> lower_gate(const Gate& g);

PulseProgram compile(const QuantumCircuit& c, bool elide_swaps);

// Fixpoint peephole rewrite: drop zero-angle ops, merge same-spin same-axis
// neighbors, canonically sort commuting neighbors (disjoint spins; z through
// coupling), resynthesize each maximal single-spin run into at most
// Z-X-Y Euler form, and sweep trailing z-rotations into final_frame.
// Semantics-preserving up to global phase; idempotent; never increases the
// op count.
PulseProgram simplify(const PulseProgram& p);

// Full unitary including relabeling and final_frame. Throws if the program
// contains delay or gradient ops (those need a molecule; see the simulator).
Mat program_unitary(const PulseProgram& p);

struct EquivalenceReport {
  double fidelity = 0.0;  // |Tr(U^dag V)| / dim
  double phase = 0.0;     // arg Tr(U^dag V)
  bool pass = false;
  std::string to_json() const;  // {"fidelity":..,"phase":..,"pass":..}
};
EquivalenceReport assert_equivalent(const Mat& u, const Mat& v, double tolerance);

// Text form. Tokens are written in applied-product order (the rightmost
// token acts first in time), matching the usual operator-product notation:
//   X_1(-5pi/8) Y_1(pi/2) J_21(-pi/2) ... relabel(1,3)
// Also: Z_1(pi/4), Gz, delay(0.0143), delay(0.0143;1,2) with a declared
// coupling pair, relabel(a,b) for a wire transposition. Angles accept
// "[-]Npi[/M]" fractions or plain decimals (radians). parse(print(p))
// reproduces p exactly for programs without final_frame notes; frame notes
// print as ordinary trailing Z tokens.
std::string print_pulse_text(const PulseProgram& p);
PulseProgram parse_pulse_text(const std::string& text, int n_spins);

}  // namespace qftnmr

#endif
