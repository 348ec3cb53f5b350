#ifndef QFTNMR_PERIOD_HPP
#define QFTNMR_PERIOD_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "qftnmr/core.hpp"

// Order/period extraction pipeline: a tabulated periodic function, the
// oracle-collapse step that leaves an n-qubit register in a periodic
// superposition, Fourier sampling of that register, and the classical
// continued-fraction post-processing that recovers the period.

namespace qftnmr {

struct PeriodicFunction {
  int n_in = 0;                // input register width; domain size N = 2^n_in
  std::vector<long> table;     // f(0) .. f(N-1)
  long declared_period = 0;    // 0 = unknown; validated against the table when set

  // f(x) = f(x mod r) with injective values on one period.
  static PeriodicFunction from_period(int n_in, long r);
  static PeriodicFunction from_table(int n_in, std::vector<long> table, long declared_period = 0);
  // CSV rows "x,f" (header optional); the domain must be covered exactly.
  static PeriodicFunction from_csv(const std::string& csv_text, int n_in);

  long domain() const { return dim_of(n_in); }
  long operator()(long x) const;
  void validate() const;
};

// Smallest r >= 1 with f(x + r) = f(x) wherever both sides are defined.
long classical_period_oracle(const PeriodicFunction& f);

// Permutation-style unitary |x>|y> -> |x>|y XOR f(x)> on n_in + n_out qubits
// (input register = high bits). n_out must cover max f(x).
Mat oracle_unitary(const PeriodicFunction& f, int n_out);

// (1/sqrt(K)) sum_k |x0 + k r> over x0 + k r < 2^n, K = ceil((N - x0) / r).
StateVector prepare_periodic_state(int n, long r, long x0);

// Uniform-input oracle query followed by measuring the output register:
// draws x uniformly, collapses to the periodic superposition with offset
// x0 = x mod r. Builds the collapsed state directly; no 2^(n_in+n_out)
// matrices are formed.
struct CollapseResult {
  long f_value = 0;
  long x0 = 0;
  StateVector state;
};
CollapseResult collapse_via_oracle(const PeriodicFunction& f, Rng& rng);

struct PeriodEstimate {
  long r_hat = 1;
  int samples_used = 0;
  std::vector<long> outcomes;
  double confidence = 0.0;  // fraction of outcomes individually consistent with r_hat
};

// Continued-fraction reduction of each outcome c against N = 2^n, keeping
// the largest convergent denominator <= N, then lcm-accumulating the
// denominators. c = 0 contributes denominator 1.
PeriodEstimate extract_period(const std::vector<long>& outcomes, long n_domain);
long cf_denominator(long c, long n_domain);

// Full loop: `repetitions` rounds of collapse, exact Fourier sampling of the
// collapsed register, then extract_period. Output distributions are cached
// per residue x0, so cost is O(N * N/r) per distinct residue.
PeriodEstimate run_period_finding(const PeriodicFunction& f, int repetitions, std::uint64_t seed);

}  // namespace qftnmr

#endif
