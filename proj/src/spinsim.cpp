#include "qftnmr/spinsim.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace qftnmr {

namespace {
constexpr double pi = std::numbers::pi;
using nlohmann::ordered_json;
}  // namespace

// ---------------------------------------------------------------------------
// MoleculeSpec

MoleculeSpec MoleculeSpec::alanine() {
  MoleculeSpec m;
  m.spins = {{"C'", -4320.0}, {"Ca", 0.0}, {"Cb", 15793.0}, {"Ha", 1550.0}};
  m.couplings_hz = {
      {0.0, 34.94, -1.2, 5.5},
      {34.94, 0.0, 53.81, 143.21},
      {-1.2, 53.81, 0.0, 5.5},
      {5.5, 143.21, 5.5, 0.0},
  };
  m.active = {1, 2, 3};
  return m;
}

MoleculeSpec MoleculeSpec::with_active(std::vector<int> order) const {
  MoleculeSpec m = *this;
  m.active = std::move(order);
  m.validate();
  return m;
}

void MoleculeSpec::validate() const {
  std::size_t n = spins.size();
  if (n == 0) throw std::invalid_argument("molecule has no spins");
  if (couplings_hz.size() != n) throw std::invalid_argument("coupling matrix row count mismatch");
  for (std::size_t i = 0; i < n; ++i) {
    if (couplings_hz[i].size() != n) throw std::invalid_argument("coupling matrix is not square");
    if (couplings_hz[i][i] != 0.0) throw std::invalid_argument("coupling matrix diagonal must be zero");
    for (std::size_t j = 0; j < n; ++j) {
      if (couplings_hz[i][j] != couplings_hz[j][i]) {
        throw std::invalid_argument("coupling matrix must be symmetric");
      }
    }
  }
  if (active.empty()) throw std::invalid_argument("active spin set is empty");
  std::vector<bool> seen(n, false);
  for (int a : active) {
    if (a < 1 || a > static_cast<int>(n)) throw std::invalid_argument("active index out of range");
    if (seen[a - 1]) throw std::invalid_argument("duplicate active spin");
    seen[a - 1] = true;
  }
  dim_of(n_active());
}

const SpinInfo& MoleculeSpec::active_spin(int k) const {
  if (k < 1 || k > n_active()) throw std::invalid_argument("active spin ordinal out of range");
  return spins[active[k - 1] - 1];
}

double MoleculeSpec::shift(int k) const { return active_spin(k).shift_hz; }

double MoleculeSpec::coupling(int a, int b) const {
  if (a < 1 || a > n_active() || b < 1 || b > n_active()) {
    throw std::invalid_argument("active spin ordinal out of range");
  }
  return couplings_hz[active[a - 1] - 1][active[b - 1] - 1];
}

int MoleculeSpec::active_index_of(const std::string& label) const {
  for (int k = 1; k <= n_active(); ++k) {
    if (active_spin(k).label == label) return k;
  }
  throw std::invalid_argument("no active spin labeled '" + label + "'");
}

MoleculeSpec MoleculeSpec::from_json_text(const std::string& text) {
  ordered_json j = ordered_json::parse(text);
  MoleculeSpec m;
  for (const auto& s : j.at("spins")) {
    m.spins.push_back({s.at("label").get<std::string>(), s.at("shift_hz").get<double>()});
  }
  m.couplings_hz = j.at("couplings_hz").get<std::vector<std::vector<double>>>();
  if (j.contains("active")) {
    m.active = j.at("active").get<std::vector<int>>();
  } else {
    m.active.resize(m.spins.size());
    for (std::size_t i = 0; i < m.spins.size(); ++i) m.active[i] = static_cast<int>(i) + 1;
  }
  m.validate();
  return m;
}

MoleculeSpec MoleculeSpec::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open molecule file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_json_text(buf.str());
}

std::string MoleculeSpec::to_json_text() const {
  validate();
  ordered_json j;
  j["spins"] = ordered_json::array();
  for (const SpinInfo& s : spins) j["spins"].push_back({{"label", s.label}, {"shift_hz", s.shift_hz}});
  j["couplings_hz"] = couplings_hz;
  j["active"] = active;
  return j.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// States and evolution

DensityMatrix thermal_state(const MoleculeSpec& m) {
  m.validate();
  int n = m.n_active();
  DensityMatrix rho;
  rho.n_spins = n;
  rho.kind = MatrixKind::deviation;
  rho.matrix = Mat::Zero(dim_of(n), dim_of(n));
  for (int k = 1; k <= n; ++k) rho.matrix += spin_iz(k, n).matrix;
  return rho;
}

Mat hamiltonian(const MoleculeSpec& m) {
  int n = m.n_active();
  long d = dim_of(n);
  Mat h = Mat::Zero(d, d);
  for (long x = 0; x < d; ++x) {
    double e = 0.0;
    for (int i = 1; i <= n; ++i) {
      double mi = qubit_bit(x, i, n) ? -0.5 : 0.5;
      e += 2.0 * pi * m.shift(i) * mi;
      for (int jj = i + 1; jj <= n; ++jj) {
        double mj = qubit_bit(x, jj, n) ? -0.5 : 0.5;
        e += 2.0 * pi * m.coupling(i, jj) * mi * mj;
      }
    }
    h(x, x) = e;
  }
  return h;
}

namespace {
Mat diagonal_propagator(const Mat& h, double t) {
  Mat u = Mat::Zero(h.rows(), h.cols());
  for (long x = 0; x < h.rows(); ++x) {
    double ph = -h(x, x).real() * t;
    u(x, x) = cx(std::cos(ph), std::sin(ph));
  }
  return u;
}
}  // namespace

DensityMatrix apply_gradient(const DensityMatrix& rho, const SimOptions& opts) {
  int n = rho.n_spins;
  DensityMatrix out = rho;
  for (long r = 0; r < out.matrix.rows(); ++r) {
    for (long c = 0; c < out.matrix.cols(); ++c) {
      bool keep = opts.diagonal_gradient
                      ? (r == c)
                      : (std::popcount(static_cast<unsigned long>(r)) ==
                         std::popcount(static_cast<unsigned long>(c)));
      if (!keep) out.matrix(r, c) = 0.0;
    }
  }
  (void)n;
  return out;
}

DensityMatrix apply_pulse(const DensityMatrix& rho, const PulseOp& op, const MoleculeSpec& m,
                          const SimOptions& opts) {
  int n = m.n_active();
  if (rho.n_spins != n) throw std::invalid_argument("state dimension does not match active spin count");
  switch (op.kind) {
    case PulseOp::Kind::rf:
    case PulseOp::Kind::j_evolve:
      return apply_unitary(rho, pulse_matrix(op, n));
    case PulseOp::Kind::gradient:
      return apply_gradient(rho, opts);
    case PulseOp::Kind::delay: {
      bool paired = op.spin_a != 0;
      if (!opts.strict_delays) {
        if (!paired) return rho;  // everything refocused by assumption
        double angle = 2.0 * pi * m.coupling(op.spin_a, op.spin_b) * op.duration;
        return apply_unitary(rho, pulse_matrix(PulseOp::j(op.spin_a, op.spin_b, angle), n));
      }
      Mat h = hamiltonian(m);
      if (!paired) return apply_unitary(rho, diagonal_propagator(h, op.duration));
      // spin echo: free evolution halves separated by pi_x on both pair
      // spins; refocuses shifts and out-of-pair couplings, keeps the pair's
      // zz term
      Mat half = diagonal_propagator(h, op.duration / 2.0);
      Mat flip = pulse_matrix(PulseOp::rf(op.spin_a, Axis::x, pi), n) *
                 pulse_matrix(PulseOp::rf(op.spin_b, Axis::x, pi), n);
      return apply_unitary(rho, flip * half * flip * half);
    }
  }
  throw std::logic_error("unhandled pulse op kind");
}

DensityMatrix run_program(const DensityMatrix& rho, const PulseProgram& p, const MoleculeSpec& m,
                          const SimOptions& opts) {
  p.validate();
  if (p.n_spins != m.n_active()) {
    throw std::invalid_argument("program spin count does not match active spin count");
  }
  DensityMatrix out = rho;
  if (!p.relabeling.is_identity()) out = apply_unitary(out, p.relabeling.matrix(p.n_spins));
  for (const PulseOp& op : p.ops) out = apply_pulse(out, op, m, opts);
  for (const auto& [spin, angle] : p.final_frame) {
    out = apply_pulse(out, PulseOp::rf(spin, Axis::z, angle), m, opts);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Pseudo-pure preparation

PulseProgram pseudo_pure_3spin_program(const MoleculeSpec& m) {
  if (m.n_active() != 3) throw std::invalid_argument("three active spins required");
  double j12 = m.coupling(1, 2);
  double j23 = m.coupling(2, 3);
  PulseProgram p;
  p.n_spins = 3;
  auto& ops = p.ops;
  // step 1: scale the spin-2 and spin-3 z polarizations down to 1/2 and 1/4
  ops.push_back(PulseOp::rf(2, Axis::y, pi / 3));
  ops.push_back(PulseOp::rf(3, Axis::y, std::acos(0.25)));
  ops.push_back(PulseOp::gradient());
  // step 2: fold spin-1 polarization into 2*I1z*I2z
  ops.push_back(PulseOp::rf(1, Axis::x, pi / 2));
  ops.push_back(PulseOp::delay_coupled(1.0 / (2.0 * j12), 1, 2));
  ops.push_back(PulseOp::rf(1, Axis::y, pi / 2));
  ops.push_back(PulseOp::gradient());
  // step 3: distribute spin-2 polarization over the 2-3 pair (the pi pulse
  // on spin 1 refocuses the 1-2 coupling across the split delay)
  ops.push_back(PulseOp::rf(2, Axis::x, pi / 4));
  ops.push_back(PulseOp::delay_coupled(1.0 / (4.0 * j23), 2, 3));
  ops.push_back(PulseOp::rf(1, Axis::x, pi));
  ops.push_back(PulseOp::delay_coupled(1.0 / (4.0 * j23), 2, 3));
  ops.push_back(PulseOp::rf(2, Axis::y, -pi / 4));
  ops.push_back(PulseOp::gradient());
  // step 4: build the remaining three-spin order
  ops.push_back(PulseOp::rf(1, Axis::x, pi / 4));
  ops.push_back(PulseOp::delay_coupled(1.0 / (2.0 * j12), 1, 2));
  ops.push_back(PulseOp::rf(1, Axis::y, -pi / 4));
  ops.push_back(PulseOp::gradient());
  return p;
}

DensityMatrix prepare_pseudo_pure_3spin(const MoleculeSpec& m, const SimOptions& opts) {
  return run_program(thermal_state(m), pseudo_pure_3spin_program(m), m, opts);
}

PulseProgram labeled_pseudo_pure_4spin_program(const MoleculeSpec& m) {
  if (m.n_active() != 4) throw std::invalid_argument("four active spins required");
  PulseProgram p;
  p.n_spins = 4;
  auto& ops = p.ops;
  // step 1: destroy the computational spins' polarization, keep the observer
  for (int s = 2; s <= 4; ++s) ops.push_back(PulseOp::rf(s, Axis::y, pi / 2));
  ops.push_back(PulseOp::gradient());
  // steps 2-4: one observer-computational pair at a time, convert I_1z into
  // I_1z * (1/2 + I_kz) weight
  for (int k = 2; k <= 4; ++k) {
    double jk = m.coupling(1, k);
    ops.push_back(PulseOp::rf(1, Axis::y, -pi / 4));
    ops.push_back(PulseOp::delay_coupled(1.0 / (2.0 * jk), 1, k));
    ops.push_back(PulseOp::rf(1, Axis::x, -pi / 4));
    ops.push_back(PulseOp::gradient());
  }
  return p;
}

DensityMatrix prepare_labeled_pseudo_pure_4spin(const MoleculeSpec& m, const SimOptions& opts) {
  return run_program(thermal_state(m), labeled_pseudo_pure_4spin_program(m), m, opts);
}

DensityMatrix pseudo_pure_target_3spin() {
  DensityMatrix t;
  t.n_spins = 3;
  t.kind = MatrixKind::deviation;
  t.matrix = Mat::Zero(8, 8);
  t.matrix(0, 0) = 1.0;
  t.matrix -= Mat::Identity(8, 8) / 8.0;
  return t;
}

DensityMatrix labeled_pseudo_pure_target_4spin() {
  // I_1z on the observer tensored with |000><000| on the computational spins
  DensityMatrix t;
  t.n_spins = 4;
  t.kind = MatrixKind::deviation;
  t.matrix = Mat::Zero(16, 16);
  t.matrix(0, 0) = 0.5;    // observer |0>, computational |000>
  t.matrix(8, 8) = -0.5;   // observer |1>, computational |000>
  return t;
}

}  // namespace qftnmr
