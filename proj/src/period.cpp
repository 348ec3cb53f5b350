#include "qftnmr/period.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

namespace qftnmr {

namespace {
constexpr double pi = std::numbers::pi;
}

// ---------------------------------------------------------------------------
// PeriodicFunction

PeriodicFunction PeriodicFunction::from_period(int n_in, long r) {
  long n = dim_of(n_in);
  if (r < 1 || r > n) throw std::invalid_argument("period outside [1, 2^n]");
  PeriodicFunction f;
  f.n_in = n_in;
  f.declared_period = r;
  f.table.resize(n);
  for (long x = 0; x < n; ++x) f.table[x] = x % r;
  return f;
}

PeriodicFunction PeriodicFunction::from_table(int n_in, std::vector<long> table, long declared_period) {
  PeriodicFunction f;
  f.n_in = n_in;
  f.table = std::move(table);
  f.declared_period = declared_period;
  f.validate();
  return f;
}

PeriodicFunction PeriodicFunction::from_csv(const std::string& csv_text, int n_in) {
  long n = dim_of(n_in);
  std::vector<long> table(n, -1);
  std::istringstream in(csv_text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    auto comma = line.find(',');
    if (comma == std::string::npos) {
      throw std::invalid_argument("CSV line " + std::to_string(line_no) + ": missing comma");
    }
    std::string xs = line.substr(0, comma), fs = line.substr(comma + 1);
    long x, v;
    try {
      x = std::stol(xs);
      v = std::stol(fs);
    } catch (const std::exception&) {
      if (line_no == 1) continue;  // tolerate a header row
      throw std::invalid_argument("CSV line " + std::to_string(line_no) + ": non-numeric field");
    }
    if (x < 0 || x >= n) throw std::invalid_argument("CSV line " + std::to_string(line_no) + ": x out of domain");
    if (table[x] != -1) throw std::invalid_argument("CSV line " + std::to_string(line_no) + ": duplicate x");
    table[x] = v;
  }
  for (long x = 0; x < n; ++x) {
    if (table[x] == -1) {
      throw std::invalid_argument("CSV does not cover x=" + std::to_string(x));
    }
  }
  return from_table(n_in, std::move(table));
}

long PeriodicFunction::operator()(long x) const {
  if (x < 0 || x >= static_cast<long>(table.size())) throw std::out_of_range("function argument out of domain");
  return table[x];
}

void PeriodicFunction::validate() const {
  long n = dim_of(n_in);
  if (static_cast<long>(table.size()) != n) {
    throw std::invalid_argument("function table length does not equal 2^n_in");
  }
  for (long v : table) {
    if (v < 0) throw std::invalid_argument("function values must be non-negative");
  }
  if (declared_period > 0) {
    long r = declared_period;
    for (long x = 0; x + r < n; ++x) {
      if (table[x] != table[x + r]) throw std::invalid_argument("table does not have the declared period");
    }
    // distinct values within one period, so the output register tags cosets
    for (long a = 0; a < std::min(r, n); ++a)
      for (long b = a + 1; b < std::min(r, n); ++b)
        if (table[a] == table[b]) {
          throw std::invalid_argument("values within one period are not pairwise distinct");
        }
  }
}

long classical_period_oracle(const PeriodicFunction& f) {
  long n = static_cast<long>(f.table.size());
  for (long r = 1; r < n; ++r) {
    bool ok = true;
    for (long x = 0; x + r < n; ++x) {
      if (f.table[x] != f.table[x + r]) {
        ok = false;
        break;
      }
    }
    if (ok) return r;
  }
  return n;
}

// ---------------------------------------------------------------------------
// Quantum pieces

Mat oracle_unitary(const PeriodicFunction& f, int n_out) {
  f.validate();
  long dout = dim_of(n_out);
  long fmax = *std::max_element(f.table.begin(), f.table.end());
  if (fmax >= dout) {
    std::ostringstream msg;
    msg << "function value " << fmax << " does not fit in " << n_out << " output bits";
    throw std::invalid_argument(msg.str());
  }
  long din = f.domain();
  long d = dim_of(f.n_in + n_out);
  Mat u = Mat::Zero(d, d);
  for (long x = 0; x < din; ++x)
    for (long y = 0; y < dout; ++y) u(x * dout + (y ^ f.table[x]), x * dout + y) = 1.0;
  return u;
}

StateVector prepare_periodic_state(int n, long r, long x0) {
  long d = dim_of(n);
  if (r < 1 || r > d) throw std::invalid_argument("period outside [1, 2^n]");
  if (x0 < 0 || x0 >= r) throw std::invalid_argument("offset must satisfy 0 <= x0 < r");
  long k = (d - 1 - x0) / r + 1;
  StateVector psi;
  psi.n_qubits = n;
  psi.amplitudes = Vec::Zero(d);
  double amp = 1.0 / std::sqrt(static_cast<double>(k));
  for (long j = 0; j < k; ++j) psi.amplitudes[x0 + j * r] = amp;
  return psi;
}

CollapseResult collapse_via_oracle(const PeriodicFunction& f, Rng& rng) {
  f.validate();
  long n = f.domain();
  // Uniform register-1 input makes every x equally likely; measuring
  // register 2 keeps exactly the x with the sampled function value.
  long x = static_cast<long>(rng.uniform() * static_cast<double>(n));
  if (x >= n) x = n - 1;
  CollapseResult res;
  res.f_value = f.table[x];
  long r = (f.declared_period > 0) ? f.declared_period : classical_period_oracle(f);
  res.x0 = x % r;
  res.state = prepare_periodic_state(f.n_in, r, res.x0);
  return res;
}

// ---------------------------------------------------------------------------
// Classical post-processing

long cf_denominator(long c, long n_domain) {
  if (c == 0) return 1;
  // best rational approximation of c/N with denominator <= N; for exact
  // inputs this is plain gcd reduction, kept as continued fractions so
  // truncated-period spectra still reduce sensibly
  long num = c, den = n_domain;
  long h_m2 = 0, h_m1 = 1, k_m2 = 1, k_m1 = 0;
  long best_q = 1;
  while (den != 0) {
    long quot = num / den;
    long h = quot * h_m1 + h_m2;
    long k = quot * k_m1 + k_m2;
    if (k > n_domain) break;
    if (k >= 1) best_q = k;
    h_m2 = h_m1;
    h_m1 = h;
    k_m2 = k_m1;
    k_m1 = k;
    long rem = num % den;
    num = den;
    den = rem;
  }
  return best_q;
}

PeriodEstimate extract_period(const std::vector<long>& outcomes, long n_domain) {
  if (outcomes.empty()) throw std::invalid_argument("extract_period requires at least one outcome");
  for (long c : outcomes) {
    if (c < 0 || c >= n_domain) throw std::invalid_argument("outcome outside [0, N)");
  }
  PeriodEstimate est;
  est.outcomes = outcomes;
  long acc = 1;
  int last_change = 0;
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    long q = cf_denominator(outcomes[i], n_domain);
    long next = std::lcm(acc, q);
    if (next > n_domain) next = n_domain;  // cap: the register cannot resolve beyond N
    if (next != acc) last_change = static_cast<int>(i) + 1;
    acc = next;
  }
  est.r_hat = acc;
  est.samples_used = std::max(last_change, 1);
  int hits = 0;
  for (long c : outcomes) {
    if (cf_denominator(c, n_domain) == acc) ++hits;
  }
  est.confidence = static_cast<double>(hits) / static_cast<double>(outcomes.size());
  return est;
}

namespace {
// Fourier-sampling distribution of the collapsed state. The offset x0 only
// contributes a per-outcome phase of modulus 1, so the distribution depends
// on (n, r) alone: p(y) = |sum_j exp(2 pi i y j r / N)|^2 / (K N).
Eigen::VectorXd qft_output_distribution(int n, long r, long x0) {
  long d = dim_of(n);
  long k = (d - 1 - x0) / r + 1;
  Eigen::VectorXd p(d);
  for (long y = 0; y < d; ++y) {
    cx s = 0.0;
    for (long j = 0; j < k; ++j) {
      double ang = 2.0 * pi * static_cast<double>((y * ((x0 + j * r) % d)) % d) / static_cast<double>(d);
      s += cx(std::cos(ang), std::sin(ang));
    }
    p[y] = std::norm(s) / (static_cast<double>(k) * static_cast<double>(d));
  }
  double total = p.sum();
  return p / total;
}
}  // namespace

PeriodEstimate run_period_finding(const PeriodicFunction& f, int repetitions, std::uint64_t seed) {
  if (repetitions < 1) throw std::invalid_argument("repetitions must be >= 1");
  f.validate();
  Rng rng(seed);
  std::unordered_map<long, Eigen::VectorXd> dist_by_residue;
  std::vector<long> outcomes;
  outcomes.reserve(repetitions);
  long r_true = (f.declared_period > 0) ? f.declared_period : classical_period_oracle(f);
  for (int rep = 0; rep < repetitions; ++rep) {
    long n = f.domain();
    long x = static_cast<long>(rng.uniform() * static_cast<double>(n));
    if (x >= n) x = n - 1;
    long x0 = x % r_true;
    auto it = dist_by_residue.find(x0);
    if (it == dist_by_residue.end()) {
      it = dist_by_residue.emplace(x0, qft_output_distribution(f.n_in, r_true, x0)).first;
    }
    outcomes.push_back(sample_index(it->second, rng));
  }
  return extract_period(outcomes, f.domain());
}

}  // namespace qftnmr
