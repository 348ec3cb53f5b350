#ifndef QFTNMR_READOUT_HPP
#define QFTNMR_READOUT_HPP

#include <string>
#include <vector>

#include "qftnmr/core.hpp"
#include "qftnmr/pulse.hpp"
#include "qftnmr/spinsim.hpp"

// Measurement-side analysis: first-order spectrum synthesis, observer-spin
// readout decoding, linear-inversion state tomography, and the attenuated
// correlation figure of merit.

namespace qftnmr {

struct SpectrumLine {
  double frequency_hz = 0.0;
  double amplitude = 0.0;          // absorptive phase: signed real
  std::vector<int> neighbor_bits;  // non-observed spins, ascending spin order
};

struct Spectrum {
  int observed_spin = 0;  // active ordinal
  std::string observed_label;
  std::vector<SpectrumLine> lines;

  std::string to_csv() const;  // frequency_hz,amplitude,assignment
};

// Applies the readout pulse, then reads the observed spin's single-quantum
// coherences. One line per configuration of the other spins, at
// nu_i + sum_k J_ik m_k with m_k = +1/2 for |0>. The amplitude is twice the
// real part of the coherence, so the thermal state under a (pi/2)_y readout
// gives every line amplitude +1, and a spin along -z gives negative lines.
Spectrum synthesize_spectrum(const DensityMatrix& rho, int observe, const MoleculeSpec& m,
                             const PulseOp& readout_pulse);

// Optional plot helper: sum of Lorentzians centered on the lines.
std::vector<std::pair<double, double>> render_lorentzian(const Spectrum& s, double linewidth_hz,
                                                         double f_min, double f_max, int points);

struct DecodedState {
  long basis_state = 0;  // non-observed spins read MSB-first in spin order
  std::string bits;
  double amplitude = 0.0;
};

// Maps each line frequency back to its neighbor bitstring through the
// first-order rule. Lines below `rel_threshold` of the strongest amplitude
// are dropped; the rest are returned sorted by descending amplitude.
// Throws when two distinct bitstrings land within `resolution_hz` of each
// other (ambiguous assignment), listing the collisions.
std::vector<DecodedState> decode_observer_readout(const Spectrum& s, int observer,
                                                  const MoleculeSpec& m, double resolution_hz = 0.5,
                                                  double rel_threshold = 1e-6);

struct TomogramResult {
  DensityMatrix reconstructed;
  std::vector<std::string> readout_set;  // per-setting descriptor, e.g. "Y1 X2 -"
  double residual = 0.0;                 // inf-norm against the input (closed loop)

  std::string to_json() const;  // row-major [re, im] matrix + residual
};

// Closed-loop tomography: simulates the full {1, X(pi/2), Y(pi/2)}^n
// readout set on the input, then linearly inverts the synthesized line
// amplitudes for every traceless-Hermitian component. Throws a diagnostic
// when the inversion operator is rank-deficient.
TomogramResult tomograph(const DensityMatrix& rho_true, const MoleculeSpec& m);

// Tr(rho_th rho_exp) / Tr(rho_th rho_th); linear in rho_exp.
double attenuated_correlation(const DensityMatrix& rho_th, const DensityMatrix& rho_exp);

struct PeriodInference {
  long k = 0;  // post-transform state spacing
  long r = 0;  // inferred pre-transform period N/k
};

// States must form an arithmetic progression of spacing k | N with N/k
// terms (one term means k = N, r = 1).
PeriodInference infer_period_from_states(const std::vector<long>& states, int n);

}  // namespace qftnmr

#endif
