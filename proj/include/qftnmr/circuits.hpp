#ifndef QFTNMR_CIRCUITS_HPP
#define QFTNMR_CIRCUITS_HPP

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "qftnmr/core.hpp"

// Gate-level circuit layer: discrete-Fourier unitaries, the standard
// Hadamard / controlled-phase ladder that implements them, and the
// measured (semiclassical) variant that replaces two-qubit conditional
// phases with classically controlled single-qubit rotations.

namespace qftnmr {

struct Gate {
  enum class Kind { hadamard, controlled_r, swap, measure_z, conditional_r };

  Kind kind = Kind::hadamard;
  int a = 0;  // target qubit (hadamard/measure/conditional_r), control (controlled_r), first swap qubit
  int b = 0;  // target (controlled_r) or second swap qubit
  int d = 0;  // phase denominator exponent: phase angle is pi / 2^d
  int classical_bit = -1;  // measure_z destination / conditional_r source

  static Gate H(int q) { return {Kind::hadamard, q, 0, 0, -1}; }
  static Gate CR(int control, int target, int d) { return {Kind::controlled_r, control, target, d, -1}; }
  static Gate SW(int a, int b) { return {Kind::swap, a, b, 0, -1}; }
  static Gate M(int q, int bit) { return {Kind::measure_z, q, 0, 0, bit}; }
  static Gate CondR(int target, int d, int bit) { return {Kind::conditional_r, target, 0, d, bit}; }
};

struct QuantumCircuit {
  int n_qubits = 0;
  std::vector<Gate> gates;  // time order: gates[0] acts first
  int n_classical_bits = 0;
  // Post-circuit qubit renaming left implicit instead of executed with swap
  // gates: output_relabeling[j-1] is the qubit whose wire carries logical
  // qubit j afterwards. Empty means identity.
  std::vector<int> output_relabeling;

  bool has_measurement() const;
  void validate() const;  // index ranges, classical-bit wiring
};

// F[y][x] = exp(2*pi*i*x*y / 2^n) / sqrt(2^n).
Mat qft_matrix(int n);

// Hadamard + controlled-phase ladder, qubit 1 = MSB. With include_swaps the
// final bit-reversal is emitted as swap gates; without, it is recorded in
// output_relabeling.
QuantumCircuit build_qft_circuit(int n, bool include_swaps = true);

// Unitary of a measurement-free circuit, gates[0] applied first (rightmost
// factor). Includes output_relabeling when present. Throws on measure_z /
// conditional_r gates.
Mat circuit_unitary(const QuantumCircuit& c);
Mat gate_matrix(const Gate& g, int n);

// One run of the measured Fourier transform: for k = 1..n apply the
// accumulated conditional phase on qubit k, a Hadamard, then measure it.
// Measured bits m_k assemble to outcome y = sum_k m_k 2^(k-1).
struct SemiclassicalResult {
  std::vector<int> bits;  // m_1 .. m_n in measurement order
  long outcome = 0;
  StateVector collapsed;  // post-measurement computational state
};
SemiclassicalResult run_semiclassical_qft(const StateVector& psi, Rng& rng);

// Line-oriented serialization: "H 1", "CR 2 1 d=1", "SWAP 1 3",
// "MEASURE 1 c0", "CONDR 2 d=1 c0"; '#' starts a comment. A header line
// "qubits N" is required on parse and emitted on print.
std::string circuit_to_text(const QuantumCircuit& c);
QuantumCircuit circuit_from_text(const std::string& text);

}  // namespace qftnmr

#endif
