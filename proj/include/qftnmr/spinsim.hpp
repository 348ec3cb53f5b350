#ifndef QFTNMR_SPINSIM_HPP
#define QFTNMR_SPINSIM_HPP

#include <string>
#include <vector>

#include "qftnmr/core.hpp"
#include "qftnmr/pulse.hpp"

// Liquid-state spin-system simulator: chemical shifts and scalar couplings
// of the (shipped) alanine system, thermal and pseudo-pure state
// preparation, and execution of pulse programs on density matrices,
// including delays and gradient crushers.

namespace qftnmr {

struct SpinInfo {
  std::string label;
  double shift_hz = 0.0;
};

struct MoleculeSpec {
  std::vector<SpinInfo> spins;
  std::vector<std::vector<double>> couplings_hz;  // symmetric, zero diagonal, over all spins
  std::vector<int> active;  // 1-based indices into `spins`; order = Hilbert-space spin order

  // 13C-labeled alanine: C' = -4320 Hz, Ca = 0, Cb = 15793, Ha = 1550;
  // J(C',Ca) = 34.94, J(C',Cb) = -1.2, J(C',Ha) = 5.5, J(Ca,Cb) = 53.81,
  // J(Ca,Ha) = 143.21, J(Cb,Ha) = 5.5 Hz. Default active set: the three
  // carbons (protons decoupled).
  static MoleculeSpec alanine();
  MoleculeSpec with_active(std::vector<int> order) const;

  // JSON: {"spins":[{"label":..,"shift_hz":..},..],
  //        "couplings_hz":[[..],..], "active":[1,2,3]}
  static MoleculeSpec from_json_text(const std::string& text);
  static MoleculeSpec load(const std::string& path);
  std::string to_json_text() const;

  int n_active() const { return static_cast<int>(active.size()); }
  const SpinInfo& active_spin(int k) const;        // k = 1..n_active
  double shift(int k) const;                       // Hz, active ordinal
  double coupling(int a, int b) const;             // Hz, active ordinals
  int active_index_of(const std::string& label) const;  // ordinal or throw
  void validate() const;
};

struct SimOptions {
  bool strict_delays = false;      // evolve the full Hamiltonian with echo refocusing
  bool diagonal_gradient = false;  // crusher also kills zero-quantum coherences
};

// Deviation density matrix sum_k I_kz over the active spins.
DensityMatrix thermal_state(const MoleculeSpec& m);

// Internal rotating-frame Hamiltonian (rad/s):
//   H = sum_i 2 pi nu_i I_iz + sum_{i<j} 2 pi J_ij I_iz I_jz  (weak coupling)
Mat hamiltonian(const MoleculeSpec& m);

// One PulseOp. Delays: in the idealized mode a delay with a declared
// coupling pair (j,k) evolves only that pair's zz coupling, by the angle
// 2 pi J_jk t (so t = 1/(2J) gives a coupling angle of pi), and a bare
// delay is a no-op — the refocusing pulses the preparation tables omit are
// assumed perfect. In strict mode a paired delay runs an explicit echo
// (t/2, pi_x on both pair spins, t/2, pi_x again) under the full
// Hamiltonian, and a bare delay evolves the full Hamiltonian untouched.
DensityMatrix apply_pulse(const DensityMatrix& rho, const PulseOp& op, const MoleculeSpec& m,
                          const SimOptions& opts = {});

// Gradient crusher: zeroes every element between basis states of different
// total z-magnetization (coherence order p != 0). The p = 0 block —
// populations and zero-quantum coherences — survives; with
// diagonal_gradient only the diagonal survives. Idempotent projection.
DensityMatrix apply_gradient(const DensityMatrix& rho, const SimOptions& opts = {});

// Sequential execution: input-side relabeling, ops in time order, then the
// final-frame z rotations.
DensityMatrix run_program(const DensityMatrix& rho, const PulseProgram& p, const MoleculeSpec& m,
                          const SimOptions& opts = {});

// Pseudo-pure preparation for the three carbons (spins C', Ca, Cb):
// four pulse-gradient steps turning sum I_kz into exactly
// |000><000| - identity/8. Returns the program so tests can inspect
// intermediate steps.
PulseProgram pseudo_pure_3spin_program(const MoleculeSpec& m);
DensityMatrix prepare_pseudo_pure_3spin(const MoleculeSpec& m, const SimOptions& opts = {});

// Labeled pseudo-pure preparation on four spins with the observer first
// (active order Ca, C', Cb, Ha): reaches I_1z x |000><000| on spins 2-4.
PulseProgram labeled_pseudo_pure_4spin_program(const MoleculeSpec& m);
DensityMatrix prepare_labeled_pseudo_pure_4spin(const MoleculeSpec& m, const SimOptions& opts = {});

// Ideal targets of the two preparations, for correlation checks.
DensityMatrix pseudo_pure_target_3spin();
DensityMatrix labeled_pseudo_pure_target_4spin();

}  // namespace qftnmr

#endif
