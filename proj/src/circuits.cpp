#include "qftnmr/circuits.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace qftnmr {

namespace {
constexpr double pi = std::numbers::pi;

void check_qubit(int q, int n, const char* what) {
  if (q < 1 || q > n) {
    std::ostringstream msg;
    msg << what << " qubit " << q << " outside [1, " << n << "]";
    throw std::invalid_argument(msg.str());
  }
}
}  // namespace

bool QuantumCircuit::has_measurement() const {
  for (const Gate& g : gates) {
    if (g.kind == Gate::Kind::measure_z) return true;
  }
  return false;
}

void QuantumCircuit::validate() const {
  dim_of(n_qubits);
  for (const Gate& g : gates) {
    switch (g.kind) {
      case Gate::Kind::hadamard:
        check_qubit(g.a, n_qubits, "hadamard");
        break;
      case Gate::Kind::controlled_r:
        check_qubit(g.a, n_qubits, "control");
        check_qubit(g.b, n_qubits, "target");
        if (g.a == g.b) throw std::invalid_argument("controlled_r control equals target");
        if (g.d < 0 || g.d > 62) throw std::invalid_argument("controlled_r exponent out of range");
        break;
      case Gate::Kind::swap:
        check_qubit(g.a, n_qubits, "swap");
        check_qubit(g.b, n_qubits, "swap");
        if (g.a == g.b) throw std::invalid_argument("swap of a qubit with itself");
        break;
      case Gate::Kind::measure_z:
        check_qubit(g.a, n_qubits, "measure");
        if (g.classical_bit < 0 || g.classical_bit >= n_classical_bits) {
          throw std::invalid_argument("measure_z classical bit out of range");
        }
        break;
      case Gate::Kind::conditional_r:
        check_qubit(g.a, n_qubits, "conditional_r");
        if (g.classical_bit < 0 || g.classical_bit >= n_classical_bits) {
          throw std::invalid_argument("conditional_r classical bit out of range");
        }
        break;
    }
  }
  if (!output_relabeling.empty()) {
    if (static_cast<int>(output_relabeling.size()) != n_qubits) {
      throw std::invalid_argument("output_relabeling length does not match qubit count");
    }
    std::vector<bool> seen(n_qubits, false);
    for (int v : output_relabeling) {
      check_qubit(v, n_qubits, "relabeling");
      if (seen[v - 1]) throw std::invalid_argument("output_relabeling is not a permutation");
      seen[v - 1] = true;
    }
  }
}

Mat qft_matrix(int n) {
  long d = dim_of(n);
  Mat f(d, d);
  double scale = 1.0 / std::sqrt(static_cast<double>(d));
  for (long y = 0; y < d; ++y)
    for (long x = 0; x < d; ++x) {
      double phase = 2.0 * pi * static_cast<double>((x * y) % d) / static_cast<double>(d);
      f(y, x) = scale * cx(std::cos(phase), std::sin(phase));
    }
  return f;
}

QuantumCircuit build_qft_circuit(int n, bool include_swaps) {
  dim_of(n);
  QuantumCircuit c;
  c.n_qubits = n;
  for (int k = 1; k <= n; ++k) {
    c.gates.push_back(Gate::H(k));
    for (int j = k + 1; j <= n; ++j) c.gates.push_back(Gate::CR(j, k, j - k));
  }
  if (include_swaps) {
    for (int k = 1; k <= n / 2; ++k) c.gates.push_back(Gate::SW(k, n + 1 - k));
  } else {
    c.output_relabeling.resize(n);
    for (int k = 1; k <= n; ++k) c.output_relabeling[k - 1] = n + 1 - k;
  }
  return c;
}

Mat gate_matrix(const Gate& g, int n) {
  long d = dim_of(n);
  switch (g.kind) {
    case Gate::Kind::hadamard: {
      Mat m = Mat::Zero(d, d);
      double s = 1.0 / std::sqrt(2.0);
      for (long x = 0; x < d; ++x) {
        long flipped = x ^ (1L << (n - g.a));
        int bit = qubit_bit(x, g.a, n);
        m(x, x) += (bit == 0) ? s : -s;
        m(flipped, x) += s;
      }
      return m;
    }
    case Gate::Kind::controlled_r: {
      Mat m = Mat::Identity(d, d);
      double ang = pi / static_cast<double>(1L << g.d);
      cx phase(std::cos(ang), std::sin(ang));
      for (long x = 0; x < d; ++x) {
        if (qubit_bit(x, g.a, n) == 1 && qubit_bit(x, g.b, n) == 1) m(x, x) = phase;
      }
      return m;
    }
    case Gate::Kind::swap: {
      Mat m = Mat::Zero(d, d);
      for (long x = 0; x < d; ++x) {
        int ba = qubit_bit(x, g.a, n), bb = qubit_bit(x, g.b, n);
        long y = x;
        if (ba != bb) y = x ^ (1L << (n - g.a)) ^ (1L << (n - g.b));
        m(y, x) = 1.0;
      }
      return m;
    }
    default:
      throw std::invalid_argument("gate has no unitary matrix");
  }
}

namespace {
Mat relabeling_matrix(const std::vector<int>& perm, int n) {
  long d = dim_of(n);
  Mat m = Mat::Zero(d, d);
  for (long x = 0; x < d; ++x) {
    long y = 0;
    // logical qubit j ends up on wire perm[j-1]
    for (int j = 1; j <= n; ++j) {
      if (qubit_bit(x, j, n)) y |= 1L << (n - perm[j - 1]);
    }
    m(y, x) = 1.0;
  }
  return m;
}
}  // namespace

Mat circuit_unitary(const QuantumCircuit& c) {
  c.validate();
  if (c.has_measurement()) {
    throw std::invalid_argument("circuit contains measurements; no single unitary exists");
  }
  long d = dim_of(c.n_qubits);
  Mat u = Mat::Identity(d, d);
  for (const Gate& g : c.gates) {
    if (g.kind == Gate::Kind::conditional_r) {
      throw std::invalid_argument("classically conditioned gate has no standalone unitary");
    }
    u = gate_matrix(g, c.n_qubits) * u;
  }
  if (!c.output_relabeling.empty()) u = relabeling_matrix(c.output_relabeling, c.n_qubits) * u;
  return u;
}

SemiclassicalResult run_semiclassical_qft(const StateVector& psi, Rng& rng) {
  int n = psi.n_qubits;
  SemiclassicalResult res;
  res.collapsed = psi;
  for (int k = 1; k <= n; ++k) {
    // phase conditioned on all earlier measurement results
    double theta = 0.0;
    for (int i = 1; i < k; ++i) {
      if (res.bits[i - 1]) theta += pi / static_cast<double>(1L << (k - i));
    }
    if (theta != 0.0) {
      long d = res.collapsed.amplitudes.size();
      cx phase(std::cos(theta), std::sin(theta));
      for (long x = 0; x < d; ++x) {
        if (qubit_bit(x, k, n)) res.collapsed.amplitudes[x] *= phase;
      }
    }
    res.collapsed = apply_unitary(res.collapsed, gate_matrix(Gate::H(k), n));

    // projective measurement of qubit k
    double p1 = 0.0;
    long dim = res.collapsed.amplitudes.size();
    for (long x = 0; x < dim; ++x) {
      if (qubit_bit(x, k, n)) p1 += std::norm(res.collapsed.amplitudes[x]);
    }
    int m = (rng.uniform() < p1) ? 1 : 0;
    for (long x = 0; x < dim; ++x) {
      if (qubit_bit(x, k, n) != m) res.collapsed.amplitudes[x] = 0.0;
    }
    res.collapsed.normalize();
    res.bits.push_back(m);
  }
  res.outcome = 0;
  for (int k = 1; k <= n; ++k) {
    if (res.bits[k - 1]) res.outcome |= 1L << (k - 1);
  }
  return res;
}

// ---------------------------------------------------------------------------
// Serialization

std::string circuit_to_text(const QuantumCircuit& c) {
  c.validate();
  std::ostringstream out;
  out << "qubits " << c.n_qubits << "\n";
  if (c.n_classical_bits > 0) out << "cbits " << c.n_classical_bits << "\n";
  for (const Gate& g : c.gates) {
    switch (g.kind) {
      case Gate::Kind::hadamard:
        out << "H " << g.a << "\n";
        break;
      case Gate::Kind::controlled_r:
        out << "CR " << g.a << " " << g.b << " d=" << g.d << "\n";
        break;
      case Gate::Kind::swap:
        out << "SWAP " << g.a << " " << g.b << "\n";
        break;
      case Gate::Kind::measure_z:
        out << "MEASURE " << g.a << " c" << g.classical_bit << "\n";
        break;
      case Gate::Kind::conditional_r:
        out << "CONDR " << g.a << " d=" << g.d << " c" << g.classical_bit << "\n";
        break;
    }
  }
  if (!c.output_relabeling.empty()) {
    out << "relabel";
    for (int v : c.output_relabeling) out << " " << v;
    out << "\n";
  }
  return out.str();
}

namespace {
int parse_int_field(const std::string& tok, const std::string& prefix, int line_no) {
  if (tok.rfind(prefix, 0) != 0) {
    std::ostringstream msg;
    msg << "line " << line_no << ": expected '" << prefix << "<int>', got '" << tok << "'";
    throw std::invalid_argument(msg.str());
  }
  return std::stoi(tok.substr(prefix.size()));
}
}  // namespace

QuantumCircuit circuit_from_text(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  QuantumCircuit c;
  bool have_header = false;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    std::istringstream ls(line);
    std::string op;
    if (!(ls >> op)) continue;
    if (op == "qubits") {
      if (!(ls >> c.n_qubits)) throw std::invalid_argument("malformed qubits header");
      have_header = true;
      continue;
    }
    if (!have_header) throw std::invalid_argument("circuit text must start with a 'qubits N' line");
    if (op == "cbits") {
      if (!(ls >> c.n_classical_bits)) throw std::invalid_argument("malformed cbits line");
    } else if (op == "H") {
      int q;
      if (!(ls >> q)) throw std::invalid_argument("malformed H line " + std::to_string(line_no));
      c.gates.push_back(Gate::H(q));
    } else if (op == "CR") {
      int ctrl, tgt;
      std::string dtok;
      if (!(ls >> ctrl >> tgt >> dtok)) throw std::invalid_argument("malformed CR line " + std::to_string(line_no));
      c.gates.push_back(Gate::CR(ctrl, tgt, parse_int_field(dtok, "d=", line_no)));
    } else if (op == "SWAP") {
      int a, b;
      if (!(ls >> a >> b)) throw std::invalid_argument("malformed SWAP line " + std::to_string(line_no));
      c.gates.push_back(Gate::SW(a, b));
    } else if (op == "MEASURE") {
      int q;
      std::string ctok;
      if (!(ls >> q >> ctok)) throw std::invalid_argument("malformed MEASURE line " + std::to_string(line_no));
      c.gates.push_back(Gate::M(q, parse_int_field(ctok, "c", line_no)));
    } else if (op == "CONDR") {
      int q;
      std::string dtok, ctok;
      if (!(ls >> q >> dtok >> ctok)) throw std::invalid_argument("malformed CONDR line " + std::to_string(line_no));
      c.gates.push_back(Gate::CondR(q, parse_int_field(dtok, "d=", line_no), parse_int_field(ctok, "c", line_no)));
    } else if (op == "relabel") {
      int v;
      while (ls >> v) c.output_relabeling.push_back(v);
    } else {
      std::ostringstream msg;
      msg << "line " << line_no << ": unknown gate '" << op << "'";
      throw std::invalid_argument(msg.str());
    }
  }
  if (!have_header) throw std::invalid_argument("circuit text must start with a 'qubits N' line");
  c.validate();
  return c;
}

}  // namespace qftnmr
