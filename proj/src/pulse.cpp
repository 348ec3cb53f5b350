#include "qftnmr/pulse.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace qftnmr {

namespace {
constexpr double pi = std::numbers::pi;

void check_spin(int s, int n) {
  if (s < 1 || s > n) {
    std::ostringstream msg;
    msg << "spin index " << s << " outside [1, " << n << "]";
    throw std::invalid_argument(msg.str());
  }
}
}  // namespace

double canonical_angle(double a) {
  double r = std::fmod(a, 2.0 * pi);
  if (r == -2.0 * pi) r = 0.0;
  return r;
}

namespace {
// Coupling evolutions are only 4pi-periodic up to global phase:
// J(theta + 2pi) differs from J(theta) by Z(pi) on both spins, while
// J(theta + 4pi) = -J(theta). Wrap into (-2pi, 2pi] modulo 4pi.
double canonical_coupling_angle(double a) {
  double r = std::fmod(a, 4.0 * pi);
  if (r > 2.0 * pi) r -= 4.0 * pi;
  if (r <= -2.0 * pi) r += 4.0 * pi;
  return r;
}
}  // namespace

// ---------------------------------------------------------------------------
// PulseOp / Relabeling / PulseProgram

PulseOp PulseOp::rf(int spin, Axis axis, double angle) {
  PulseOp op;
  op.kind = Kind::rf;
  op.spin = spin;
  op.axis = axis;
  op.angle = canonical_angle(angle);
  return op;
}

PulseOp PulseOp::j(int a, int b, double angle) {
  if (a == b) throw std::invalid_argument("coupling evolution needs two distinct spins");
  PulseOp op;
  op.kind = Kind::j_evolve;
  op.spin_a = a;
  op.spin_b = b;
  op.angle = canonical_coupling_angle(angle);
  return op;
}

PulseOp PulseOp::delay(double t) {
  if (t < 0) throw std::invalid_argument("negative delay");
  PulseOp op;
  op.kind = Kind::delay;
  op.duration = t;
  return op;
}

PulseOp PulseOp::delay_coupled(double t, int a, int b) {
  PulseOp op = delay(t);
  if (a == b) throw std::invalid_argument("delay coupling pair needs two distinct spins");
  op.spin_a = a;
  op.spin_b = b;
  return op;
}

PulseOp PulseOp::gradient() {
  PulseOp op;
  op.kind = Kind::gradient;
  return op;
}

bool PulseOp::same_shape(const PulseOp& o) const {
  return kind == o.kind && spin == o.spin && axis == o.axis && spin_a == o.spin_a && spin_b == o.spin_b;
}

Relabeling Relabeling::identity(int n) {
  Relabeling r;
  r.perm.resize(n);
  for (int i = 0; i < n; ++i) r.perm[i] = i + 1;
  return r;
}

bool Relabeling::is_identity() const {
  for (std::size_t i = 0; i < perm.size(); ++i) {
    if (perm[i] != static_cast<int>(i) + 1) return false;
  }
  return true;
}

int Relabeling::wire_of(int logical) const {
  if (perm.empty()) return logical;
  return perm.at(logical - 1);
}

Mat Relabeling::matrix(int n) const {
  long d = dim_of(n);
  Mat m = Mat::Zero(d, d);
  for (long x = 0; x < d; ++x) {
    long y = 0;
    for (int jq = 1; jq <= n; ++jq) {
      if (qubit_bit(x, jq, n)) y |= 1L << (n - wire_of(jq));
    }
    m(y, x) = 1.0;
  }
  return m;
}

void Relabeling::compose_transposition(int a, int b) {
  if (perm.empty()) throw std::logic_error("compose_transposition on an unsized relabeling");
  for (int& v : perm) {
    if (v == a)
      v = b;
    else if (v == b)
      v = a;
  }
}

void Relabeling::validate(int n) const {
  if (perm.empty()) return;
  if (static_cast<int>(perm.size()) != n) throw std::invalid_argument("relabeling size mismatch");
  std::vector<bool> seen(n, false);
  for (int v : perm) {
    check_spin(v, n);
    if (seen[v - 1]) throw std::invalid_argument("relabeling is not a permutation");
    seen[v - 1] = true;
  }
}

void PulseProgram::validate() const {
  dim_of(n_spins);
  for (const PulseOp& op : ops) {
    switch (op.kind) {
      case PulseOp::Kind::rf:
        check_spin(op.spin, n_spins);
        break;
      case PulseOp::Kind::j_evolve:
        check_spin(op.spin_a, n_spins);
        check_spin(op.spin_b, n_spins);
        if (op.spin_a == op.spin_b) throw std::invalid_argument("coupling pair not distinct");
        break;
      case PulseOp::Kind::delay:
        if (op.duration < 0) throw std::invalid_argument("negative delay");
        if (op.spin_a != 0 || op.spin_b != 0) {
          check_spin(op.spin_a, n_spins);
          check_spin(op.spin_b, n_spins);
          if (op.spin_a == op.spin_b) throw std::invalid_argument("delay pair not distinct");
        }
        break;
      case PulseOp::Kind::gradient:
        break;
    }
  }
  relabeling.validate(n_spins);
  for (const auto& [spin, angle] : final_frame) {
    check_spin(spin, n_spins);
    (void)angle;
  }
}

int PulseProgram::coherent_op_count() const {
  int count = 0;
  for (const PulseOp& op : ops) {
    if (op.kind == PulseOp::Kind::j_evolve) ++count;
    if (op.kind == PulseOp::Kind::rf && op.axis != Axis::z) ++count;
  }
  return count;
}

bool PulseProgram::purely_coherent() const {
  return std::all_of(ops.begin(), ops.end(), [](const PulseOp& op) { return op.coherent(); });
}

// ---------------------------------------------------------------------------
// Matrices

Mat pulse_matrix(const PulseOp& op, int n) {
  long d = dim_of(n);
  switch (op.kind) {
    case PulseOp::Kind::rf: {
      double c = std::cos(op.angle / 2.0), s = std::sin(op.angle / 2.0);
      Mat u2(2, 2);
      switch (op.axis) {
        case Axis::x:
          u2 << c, cx(0, -s), cx(0, -s), c;
          break;
        case Axis::y:
          u2 << c, -s, s, c;
          break;
        case Axis::z:
          u2 << cx(c, -s), 0, 0, cx(c, s);
          break;
      }
      Mat u = Mat::Zero(d, d);
      long mask = 1L << (n - op.spin);
      for (long x = 0; x < d; ++x) {
        int bit = (x & mask) ? 1 : 0;
        u(x, x) += u2(bit, bit);
        u(x ^ mask, x) += u2(1 - bit, bit);
      }
      return u;
    }
    case PulseOp::Kind::j_evolve: {
      Mat u = Mat::Zero(d, d);
      for (long x = 0; x < d; ++x) {
        double ma = qubit_bit(x, op.spin_a, n) ? -0.5 : 0.5;
        double mb = qubit_bit(x, op.spin_b, n) ? -0.5 : 0.5;
        double ph = -op.angle * ma * mb;
        u(x, x) = cx(std::cos(ph), std::sin(ph));
      }
      return u;
    }
    default:
      throw std::invalid_argument("delay/gradient ops have no standalone unitary");
  }
}

// ---------------------------------------------------------------------------
// Lowering

namespace {
void append_hadamard(std::vector<PulseOp>& out, int q) {
  out.push_back(PulseOp::rf(q, Axis::y, pi / 2));
  out.push_back(PulseOp::rf(q, Axis::x, pi));
}

void append_controlled_phase(std::vector<PulseOp>& out, int control, int target, int d) {
  double z = pi / static_cast<double>(1L << (d + 1));
  out.push_back(PulseOp::rf(control, Axis::z, z));
  out.push_back(PulseOp::rf(target, Axis::z, z));
  out.push_back(PulseOp::j(control, target, -pi / static_cast<double>(1L << d)));
}

void append_cnot(std::vector<PulseOp>& out, int control, int target) {
  append_hadamard(out, target);
  append_controlled_phase(out, control, target, 0);  // d=0 phase = pi, i.e. CZ
  append_hadamard(out, target);
}
}  // namespace

std::vector<PulseOp> lower_gate(const Gate& g) {
  std::vector<PulseOp> out;
  switch (g.kind) {
    case Gate::Kind::hadamard:
      append_hadamard(out, g.a);
      break;
    case Gate::Kind::controlled_r:
      append_controlled_phase(out, g.a, g.b, g.d);
      break;
    case Gate::Kind::swap:
      append_cnot(out, g.a, g.b);
      append_cnot(out, g.b, g.a);
      append_cnot(out, g.a, g.b);
      break;
    default:
      throw std::invalid_argument("gate kind has no pulse lowering");
  }
  return out;
}

namespace {
int rename_spin(int s, int a, int b) { return s == a ? b : (s == b ? a : s); }

void rename_op_spins(PulseOp& op, int a, int b) {
  if (op.spin != 0) op.spin = rename_spin(op.spin, a, b);
  if (op.spin_a != 0) op.spin_a = rename_spin(op.spin_a, a, b);
  if (op.spin_b != 0) op.spin_b = rename_spin(op.spin_b, a, b);
}
}  // namespace

PulseProgram compile(const QuantumCircuit& c, bool elide_swaps) {
  c.validate();
  if (c.has_measurement()) throw std::invalid_argument("measurement gates cannot be compiled to pulses");
  PulseProgram p;
  p.n_spins = c.n_qubits;
  p.relabeling = Relabeling::identity(c.n_qubits);
  for (const Gate& g : c.gates) {
    if (g.kind == Gate::Kind::swap && elide_swaps) {
      // Push the swap to the program's input side: every op emitted so far
      // is conjugated by the transposition (a rename of its spin labels),
      // and the transposition joins the input relabeling.
      for (PulseOp& op : p.ops) rename_op_spins(op, g.a, g.b);
      p.relabeling.compose_transposition(g.a, g.b);
      continue;
    }
    std::vector<PulseOp> lowered = lower_gate(g);
    p.ops.insert(p.ops.end(), lowered.begin(), lowered.end());
  }
  if (!c.output_relabeling.empty()) {
    // the circuit's implicit bit reversal: decompose into transpositions
    // (earliest-applied first) and push each like an elided swap
    const std::vector<int>& perm = c.output_relabeling;
    int n = c.n_qubits;
    std::vector<bool> done(n, false);
    for (int start = 0; start < n; ++start) {
      if (done[start] || perm[start] == start + 1) {
        done[start] = true;
        continue;
      }
      std::vector<int> cycle;
      int cur = start;
      while (!done[cur]) {
        done[cur] = true;
        cycle.push_back(cur + 1);
        cur = perm[cur] - 1;
      }
      for (std::size_t i = 1; i < cycle.size(); ++i) {
        for (PulseOp& op : p.ops) rename_op_spins(op, cycle[0], cycle[i]);
        p.relabeling.compose_transposition(cycle[0], cycle[i]);
      }
    }
  }
  p.validate();
  return p;
}

// ---------------------------------------------------------------------------
// Unitary and equivalence

Mat program_unitary(const PulseProgram& p) {
  p.validate();
  if (!p.purely_coherent()) {
    throw std::invalid_argument(
        "program contains delay/gradient ops; evolve it with the spin simulator instead");
  }
  Mat u = p.relabeling.matrix(p.n_spins);
  for (const PulseOp& op : p.ops) u = pulse_matrix(op, p.n_spins) * u;
  for (const auto& [spin, angle] : p.final_frame) {
    u = pulse_matrix(PulseOp::rf(spin, Axis::z, angle), p.n_spins) * u;
  }
  return u;
}

EquivalenceReport assert_equivalent(const Mat& u, const Mat& v, double tolerance) {
  if (u.rows() != v.rows() || u.cols() != v.cols()) {
    throw std::invalid_argument("equivalence check on mismatched dimensions");
  }
  cx tr = (u.adjoint() * v).trace();
  EquivalenceReport rep;
  rep.fidelity = std::abs(tr) / static_cast<double>(u.rows());
  rep.phase = std::arg(tr);
  rep.pass = rep.fidelity >= 1.0 - tolerance;
  return rep;
}

std::string EquivalenceReport::to_json() const {
  std::ostringstream out;
  out.precision(17);
  out << "{\"fidelity\":" << fidelity << ",\"phase\":" << phase << ",\"pass\":" << (pass ? "true" : "false")
      << "}";
  return out.str();
}

// ---------------------------------------------------------------------------
// Simplification

namespace {

bool is_z(const PulseOp& op) { return op.kind == PulseOp::Kind::rf && op.axis == Axis::z; }

bool ops_commute(const PulseOp& a, const PulseOp& b) {
  auto spins_of = [](const PulseOp& op, int out[2]) {
    if (op.kind == PulseOp::Kind::rf) {
      out[0] = op.spin;
      out[1] = 0;
    } else {
      out[0] = op.spin_a;
      out[1] = op.spin_b;
    }
  };
  int sa[2], sb[2];
  spins_of(a, sa);
  spins_of(b, sb);
  bool disjoint = true;
  for (int x : sa)
    for (int y : sb)
      if (x != 0 && x == y) disjoint = false;
  if (disjoint) return true;
  // shared spin: only z rotations and coupling evolutions (all diagonal)
  // commute, plus identical-axis rotations on the same spin
  bool a_diag = is_z(a) || a.kind == PulseOp::Kind::j_evolve;
  bool b_diag = is_z(b) || b.kind == PulseOp::Kind::j_evolve;
  if (a_diag && b_diag) return true;
  if (a.kind == PulseOp::Kind::rf && b.kind == PulseOp::Kind::rf && a.spin == b.spin && a.axis == b.axis)
    return true;
  return false;
}

// deterministic ordering key; z rotations sort late so they drift toward the
// end of the sequence (and then into the frame notes)
long order_key(const PulseOp& op) {
  if (is_z(op)) return 1'000'000 + op.spin;
  if (op.kind == PulseOp::Kind::j_evolve) {
    int lo = std::min(op.spin_a, op.spin_b), hi = std::max(op.spin_a, op.spin_b);
    return 10'000 + lo * 100 + hi;
  }
  return op.spin * 10 + static_cast<int>(op.axis);
}

bool drop_zero_ops(std::vector<PulseOp>& ops) {
  auto it = std::remove_if(ops.begin(), ops.end(),
                           [](const PulseOp& op) { return op.coherent() && op.angle == 0.0; });
  bool changed = it != ops.end();
  ops.erase(it, ops.end());
  return changed;
}

bool merge_adjacent(std::vector<PulseOp>& ops) {
  bool changed = false;
  for (std::size_t i = 0; i + 1 < ops.size();) {
    PulseOp& a = ops[i];
    PulseOp& b = ops[i + 1];
    bool mergeable = false;
    if (a.kind == PulseOp::Kind::rf && b.kind == PulseOp::Kind::rf && a.spin == b.spin && a.axis == b.axis)
      mergeable = true;
    if (a.kind == PulseOp::Kind::j_evolve && b.kind == PulseOp::Kind::j_evolve &&
        std::minmax(a.spin_a, a.spin_b) == std::minmax(b.spin_a, b.spin_b))
      mergeable = true;
    if (mergeable) {
      a.angle = (a.kind == PulseOp::Kind::j_evolve) ? canonical_coupling_angle(a.angle + b.angle)
                                                    : canonical_angle(a.angle + b.angle);
      ops.erase(ops.begin() + static_cast<long>(i) + 1);
      changed = true;
      if (i > 0) --i;
    } else {
      ++i;
    }
  }
  return changed;
}

bool sort_commuting(std::vector<PulseOp>& ops) {
  bool changed = false;
  bool moved = true;
  while (moved) {
    moved = false;
    for (std::size_t i = 0; i + 1 < ops.size(); ++i) {
      if (ops_commute(ops[i], ops[i + 1]) && order_key(ops[i + 1]) < order_key(ops[i])) {
        std::swap(ops[i], ops[i + 1]);
        moved = true;
        changed = true;
      }
    }
  }
  return changed;
}

Mat su2_of_run(const std::vector<PulseOp>& run) {
  Mat u = Mat::Identity(2, 2);
  for (const PulseOp& op : run) {
    PulseOp local = op;
    local.spin = 1;
    u = pulse_matrix(local, 1) * u;
  }
  return u;
}

// Euler decomposition U ~ Z(gamma) X(beta) Y(alpha) (time order Y, X, Z) via
// the SO(3) image R_ij = Tr(sigma_i U sigma_j U^dag)/2.
std::vector<PulseOp> euler_zxy(const Mat& u, int spin) {
  Mat sig[3] = {2.0 * op_ix(), 2.0 * op_iy(), 2.0 * op_iz()};
  double r[3][3];
  for (int i = 0; i < 3; ++i)
    for (int jj = 0; jj < 3; ++jj) r[i][jj] = 0.5 * (sig[i] * u * sig[jj] * u.adjoint()).trace().real();
  double beta = std::asin(std::clamp(r[2][1], -1.0, 1.0));
  double alpha, gamma;
  if (std::abs(std::cos(beta)) > 1e-9) {
    alpha = std::atan2(-r[2][0], r[2][2]);
    gamma = std::atan2(-r[0][1], r[1][1]);
  } else {
    // gimbal: alpha and gamma act about the same effective axis
    alpha = 0.0;
    gamma = std::atan2(r[1][0], r[0][0]);
    if (beta < 0) gamma = -gamma;
  }
  std::vector<PulseOp> out;
  if (canonical_angle(alpha) != 0.0) out.push_back(PulseOp::rf(spin, Axis::y, alpha));
  if (canonical_angle(beta) != 0.0) out.push_back(PulseOp::rf(spin, Axis::x, beta));
  if (canonical_angle(gamma) != 0.0) out.push_back(PulseOp::rf(spin, Axis::z, gamma));
  return out;
}

int coherent_count(const std::vector<PulseOp>& ops) {
  int c = 0;
  for (const PulseOp& op : ops) {
    if (op.kind == PulseOp::Kind::j_evolve || (op.kind == PulseOp::Kind::rf && op.axis != Axis::z)) ++c;
  }
  return c;
}

bool resynthesize_runs(std::vector<PulseOp>& ops) {
  bool changed = false;
  for (std::size_t i = 0; i < ops.size();) {
    if (ops[i].kind != PulseOp::Kind::rf) {
      ++i;
      continue;
    }
    std::size_t jrun = i + 1;
    while (jrun < ops.size() && ops[jrun].kind == PulseOp::Kind::rf && ops[jrun].spin == ops[i].spin) ++jrun;
    std::vector<PulseOp> run(ops.begin() + static_cast<long>(i), ops.begin() + static_cast<long>(jrun));
    if (run.size() >= 2) {
      std::vector<PulseOp> resynth = euler_zxy(su2_of_run(run), ops[i].spin);
      // only adopt a verified, strictly cheaper rewrite
      EquivalenceReport rep = assert_equivalent(su2_of_run(run), su2_of_run(resynth), 1e-9);
      bool cheaper = coherent_count(resynth) < coherent_count(run) ||
                     (coherent_count(resynth) == coherent_count(run) && resynth.size() < run.size());
      if (rep.pass && cheaper) {
        ops.erase(ops.begin() + static_cast<long>(i), ops.begin() + static_cast<long>(jrun));
        ops.insert(ops.begin() + static_cast<long>(i), resynth.begin(), resynth.end());
        changed = true;
        jrun = i + resynth.size();
      }
    }
    i = jrun;
  }
  return changed;
}

}  // namespace

PulseProgram simplify(const PulseProgram& p) {
  p.validate();
  PulseProgram out = p;
  if (out.relabeling.perm.empty()) out.relabeling = Relabeling::identity(out.n_spins);

  // split at delay/gradient barriers; rewrite only within coherent segments
  for (int iter = 0; iter < 100; ++iter) {
    bool changed = false;
    std::size_t seg_begin = 0;
    std::vector<PulseOp> rebuilt;
    rebuilt.reserve(out.ops.size());
    while (seg_begin <= out.ops.size()) {
      std::size_t seg_end = seg_begin;
      while (seg_end < out.ops.size() && out.ops[seg_end].coherent()) ++seg_end;
      std::vector<PulseOp> seg(out.ops.begin() + static_cast<long>(seg_begin),
                               out.ops.begin() + static_cast<long>(seg_end));
      changed |= drop_zero_ops(seg);
      changed |= sort_commuting(seg);
      changed |= merge_adjacent(seg);
      changed |= resynthesize_runs(seg);
      rebuilt.insert(rebuilt.end(), seg.begin(), seg.end());
      if (seg_end < out.ops.size()) rebuilt.push_back(out.ops[seg_end]);  // the barrier op
      seg_begin = seg_end + 1;
    }
    out.ops = std::move(rebuilt);

    // sweep trailing z rotations into the frame notes
    while (!out.ops.empty() && is_z(out.ops.back())) {
      const PulseOp& z = out.ops.back();
      auto it = std::find_if(out.final_frame.begin(), out.final_frame.end(),
                             [&](const auto& f) { return f.first == z.spin; });
      // frame notes apply after the swept op, so the swept angle goes first
      if (it == out.final_frame.end()) {
        out.final_frame.insert(out.final_frame.begin(), {z.spin, z.angle});
      } else {
        it->second = canonical_angle(it->second + z.angle);
      }
      out.ops.pop_back();
      changed = true;
    }
    std::erase_if(out.final_frame, [](const auto& f) { return f.second == 0.0; });
    std::stable_sort(out.final_frame.begin(), out.final_frame.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });

    if (!changed) break;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Text form

namespace {

std::string format_angle(double a) {
  if (a == 0.0) return "0";
  for (int q = 1; q <= 64; ++q) {
    double scaled = a * q / pi;
    double p = std::round(scaled);
    if (p != 0.0 && std::abs(scaled - p) < 1e-12 * q) {
      long pl = static_cast<long>(p);
      std::ostringstream out;
      if (pl == -1)
        out << "-";
      else if (pl != 1)
        out << pl;
      out << "pi";
      if (q != 1) out << "/" << q;
      return out.str();
    }
  }
  std::ostringstream out;
  out.precision(17);
  out << a;
  return out.str();
}

std::string format_op(const PulseOp& op) {
  std::ostringstream out;
  switch (op.kind) {
    case PulseOp::Kind::rf:
      out << (op.axis == Axis::x ? "X" : op.axis == Axis::y ? "Y" : "Z") << "_" << op.spin << "("
          << format_angle(op.angle) << ")";
      break;
    case PulseOp::Kind::j_evolve:
      out << "J_" << op.spin_a << op.spin_b << "(" << format_angle(op.angle) << ")";
      break;
    case PulseOp::Kind::delay: {
      out.precision(17);
      out << "delay(" << op.duration;
      if (op.spin_a != 0) out << ";" << op.spin_a << "," << op.spin_b;
      out << ")";
      break;
    }
    case PulseOp::Kind::gradient:
      out << "Gz";
      break;
  }
  return out.str();
}

double parse_angle(const std::string& s, std::size_t token_index) {
  std::string body = s;
  double sign = 1.0;
  if (!body.empty() && (body[0] == '-' || body[0] == '+')) {
    if (body[0] == '-') sign = -1.0;
    body.erase(0, 1);
  }
  auto fail = [&]() {
    throw std::invalid_argument("token " + std::to_string(token_index) + ": bad angle '" + s + "'");
  };
  auto pi_pos = body.find("pi");
  if (pi_pos == std::string::npos) {
    try {
      std::size_t used = 0;
      double v = std::stod(body, &used);
      if (used != body.size()) fail();
      return sign * v;
    } catch (const std::exception&) {
      fail();
    }
  }
  double coeff = 1.0;
  if (pi_pos > 0) {
    try {
      std::size_t used = 0;
      coeff = std::stod(body.substr(0, pi_pos), &used);
      if (used != pi_pos) fail();
    } catch (const std::exception&) {
      fail();
    }
  }
  double denom = 1.0;
  std::string rest = body.substr(pi_pos + 2);
  if (!rest.empty()) {
    if (rest[0] != '/') fail();
    try {
      std::size_t used = 0;
      denom = std::stod(rest.substr(1), &used);
      if (used != rest.size() - 1 || denom == 0.0) fail();
    } catch (const std::exception&) {
      fail();
    }
  }
  return sign * coeff * pi / denom;
}

}  // namespace

std::string print_pulse_text(const PulseProgram& p) {
  p.validate();
  std::vector<std::string> tokens;
  // leftmost token acts last: frame notes first (reversed), then ops
  // reversed, then the input-side relabeling as rightmost tokens
  for (auto it = p.final_frame.rbegin(); it != p.final_frame.rend(); ++it) {
    tokens.push_back(format_op(PulseOp::rf(it->first, Axis::z, it->second)));
  }
  for (auto it = p.ops.rbegin(); it != p.ops.rend(); ++it) tokens.push_back(format_op(*it));
  if (!p.relabeling.is_identity()) {
    // decompose the permutation into transpositions T1*T2*...*Tm (T1 printed
    // first / applied last), cycle by cycle
    std::vector<int> perm = p.relabeling.perm;
    int n = static_cast<int>(perm.size());
    std::vector<bool> done(n, false);
    std::vector<std::pair<int, int>> transpositions;
    for (int start = 0; start < n; ++start) {
      if (done[start] || perm[start] == start + 1) {
        done[start] = true;
        continue;
      }
      std::vector<int> cycle;
      int cur = start;
      while (!done[cur]) {
        done[cur] = true;
        cycle.push_back(cur + 1);
        cur = perm[cur] - 1;
      }
      for (std::size_t i = cycle.size() - 1; i >= 1; --i) {
        transpositions.emplace_back(cycle[0], cycle[i]);
      }
    }
    for (const auto& [a, b] : transpositions) {
      tokens.push_back("relabel(" + std::to_string(a) + "," + std::to_string(b) + ")");
    }
  }
  std::ostringstream out;
  for (std::size_t i = 0; i < tokens.size(); ++i) out << (i ? " " : "") << tokens[i];
  return out.str();
}

PulseProgram parse_pulse_text(const std::string& text, int n_spins) {
  std::vector<std::string> tokens;
  std::istringstream in(text);
  std::string tok;
  while (in >> tok) tokens.push_back(tok);

  PulseProgram p;
  p.n_spins = n_spins;
  p.relabeling = Relabeling::identity(n_spins);

  // tokens are written in applied-product order; walk right-to-left to build
  // the time-ordered op list
  bool seen_op = false;
  for (std::size_t idx = tokens.size(); idx-- > 0;) {
    const std::string& t = tokens[idx];
    std::size_t pos = idx + 1;  // 1-based position for messages
    auto fail = [&](const std::string& why) {
      throw std::invalid_argument("token " + std::to_string(pos) + " ('" + t + "'): " + why);
    };
    if (t == "Gz") {
      p.ops.push_back(PulseOp::gradient());
      seen_op = true;
      continue;
    }
    auto lparen = t.find('(');
    if (lparen == std::string::npos || t.back() != ')') fail("expected NAME(...) or Gz");
    std::string name = t.substr(0, lparen);
    std::string args = t.substr(lparen + 1, t.size() - lparen - 2);
    if (name == "delay") {
      auto semi = args.find(';');
      try {
        if (semi == std::string::npos) {
          p.ops.push_back(PulseOp::delay(std::stod(args)));
        } else {
          double dur = std::stod(args.substr(0, semi));
          std::string pair = args.substr(semi + 1);
          auto comma = pair.find(',');
          if (comma == std::string::npos) fail("delay pair needs 'a,b'");
          p.ops.push_back(PulseOp::delay_coupled(dur, std::stoi(pair.substr(0, comma)),
                                                 std::stoi(pair.substr(comma + 1))));
        }
      } catch (const std::invalid_argument&) {
        fail("bad delay arguments");
      }
      seen_op = true;
      continue;
    }
    if (name == "relabel") {
      if (seen_op) fail("relabel tokens must be the rightmost (earliest-applied) tokens");
      auto comma = args.find(',');
      if (comma == std::string::npos) fail("relabel needs two spins");
      int a = 0, b = 0;
      try {
        a = std::stoi(args.substr(0, comma));
        b = std::stoi(args.substr(comma + 1));
      } catch (const std::exception&) {
        fail("bad relabel spins");
      }
      check_spin(a, n_spins);
      check_spin(b, n_spins);
      p.relabeling.compose_transposition(a, b);
      continue;
    }
    if ((name.size() == 3 && (name[0] == 'X' || name[0] == 'Y' || name[0] == 'Z') && name[1] == '_' &&
         std::isdigit(static_cast<unsigned char>(name[2])))) {
      Axis ax = name[0] == 'X' ? Axis::x : name[0] == 'Y' ? Axis::y : Axis::z;
      int spin = name[2] - '0';
      check_spin(spin, n_spins);
      p.ops.push_back(PulseOp::rf(spin, ax, parse_angle(args, pos)));
      seen_op = true;
      continue;
    }
    if (name.size() == 4 && name[0] == 'J' && name[1] == '_' &&
        std::isdigit(static_cast<unsigned char>(name[2])) &&
        std::isdigit(static_cast<unsigned char>(name[3]))) {
      int a = name[2] - '0', b = name[3] - '0';
      check_spin(a, n_spins);
      check_spin(b, n_spins);
      p.ops.push_back(PulseOp::j(a, b, parse_angle(args, pos)));
      seen_op = true;
      continue;
    }
    fail("unknown pulse token");
  }
  p.validate();
  return p;
}

}  // namespace qftnmr
