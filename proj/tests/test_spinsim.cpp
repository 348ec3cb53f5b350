#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "qftnmr/circuits.hpp"
#include "qftnmr/spinsim.hpp"
#include "test_helpers.hpp"

using namespace qftnmr;
using namespace qftnmr::test;

namespace {

// coefficient of I_kz in rho: Tr(rho I_kz) / Tr(I_kz^2)
double z_weight(const DensityMatrix& rho, int k) {
  Mat iz = spin_iz(k, rho.n_spins).matrix;
  return (rho.matrix * iz).trace().real() / (iz * iz).trace().real();
}

double offdiag_norm(const Mat& m) {
  Mat d = m;
  d.diagonal().setZero();
  return d.cwiseAbs().maxCoeff();
}

}  // namespace

TEST_CASE("shipped molecule parameters") {
  MoleculeSpec m = MoleculeSpec::alanine();
  CHECK(m.spins.size() == 4);
  CHECK(m.n_active() == 3);
  CHECK(m.active_spin(1).label == "C'");
  CHECK(m.shift(1) == -4320.0);
  CHECK(m.shift(2) == 0.0);
  CHECK(m.shift(3) == 15793.0);
  CHECK(m.coupling(1, 2) == 34.94);
  CHECK(m.coupling(1, 3) == -1.2);
  CHECK(m.coupling(2, 3) == 53.81);
  CHECK(m.active_index_of("Cb") == 3);
  CHECK_THROWS_AS(m.active_index_of("Ha"), std::invalid_argument);  // proton not active
  CHECK_NOTHROW(m.validate());

  // alternative active order puts the observer first
  MoleculeSpec obs = m.with_active({2, 1, 3, 4});
  CHECK(obs.shift(1) == 0.0);
  CHECK(obs.coupling(1, 2) == 34.94);
  CHECK(obs.coupling(1, 4) == 143.21);
  CHECK(obs.active_index_of("Ha") == 4);
}

TEST_CASE("molecule JSON round trip and validation") {
  MoleculeSpec m = MoleculeSpec::alanine();
  MoleculeSpec back = MoleculeSpec::from_json_text(m.to_json_text());
  CHECK(back.spins.size() == m.spins.size());
  for (std::size_t i = 0; i < m.spins.size(); ++i) {
    CHECK(back.spins[i].label == m.spins[i].label);
    CHECK(back.spins[i].shift_hz == m.spins[i].shift_hz);
  }
  CHECK(back.couplings_hz == m.couplings_hz);
  CHECK(back.active == m.active);

  CHECK_THROWS_AS(MoleculeSpec::from_json_text("{}"), std::exception);
  CHECK_THROWS_AS(
      MoleculeSpec::from_json_text(
          R"({"spins":[{"label":"A","shift_hz":0},{"label":"B","shift_hz":1}],
              "couplings_hz":[[0,1],[2,0]],"active":[1,2]})"),
      std::invalid_argument);  // asymmetric couplings
  CHECK_THROWS_AS(m.with_active({1, 1, 2}), std::invalid_argument);
  CHECK_THROWS_AS(m.with_active({5}), std::invalid_argument);
  CHECK_THROWS_AS(MoleculeSpec::load("/nonexistent/file.json"), std::runtime_error);
}

TEST_CASE("thermal state is the diagonal sum of z polarizations") {
  MoleculeSpec m = MoleculeSpec::alanine();
  DensityMatrix rho = thermal_state(m);
  CHECK(rho.kind == MatrixKind::deviation);
  CHECK(offdiag_norm(rho.matrix) == 0.0);
  CHECK(std::abs(rho.matrix.trace()) < 1e-14);
  // Frobenius norm sqrt(n 2^n)/2
  CHECK(rho.matrix.norm() == doctest::Approx(std::sqrt(3.0 * 8.0) / 2.0));
  for (int k = 1; k <= 3; ++k) CHECK(z_weight(rho, k) == doctest::Approx(1.0));

  DensityMatrix four = thermal_state(m.with_active({2, 1, 3, 4}));
  CHECK(four.matrix.norm() == doctest::Approx(4.0));
}

TEST_CASE("internal Hamiltonian matches the operator expansion") {
  MoleculeSpec m = MoleculeSpec::alanine();
  Mat h = hamiltonian(m);
  Mat want = Mat::Zero(8, 8);
  for (int i = 1; i <= 3; ++i) want += 2.0 * pi * m.shift(i) * spin_iz(i, 3).matrix;
  for (int i = 1; i <= 3; ++i)
    for (int j = i + 1; j <= 3; ++j) {
      want += 2.0 * pi * m.coupling(i, j) * (spin_iz(i, 3).matrix * spin_iz(j, 3).matrix);
    }
  CHECK(max_abs_diff(h, want) < 1e-9);
  CHECK(offdiag_norm(h) == 0.0);
}

TEST_CASE("hard pulses rotate product operators the standard way") {
  MoleculeSpec m = MoleculeSpec::alanine();
  DensityMatrix iz;
  iz.n_spins = 3;
  iz.kind = MatrixKind::deviation;
  iz.matrix = spin_iz(1, 3).matrix;

  // [pi/2]_y : I_z -> I_x
  DensityMatrix after_y = apply_pulse(iz, PulseOp::rf(1, Axis::y, pi / 2), m);
  CHECK(max_abs_diff(after_y.matrix, spin_ix(1, 3).matrix) < 1e-12);

  // [pi/2]_x : I_z -> -I_y
  DensityMatrix after_x = apply_pulse(iz, PulseOp::rf(1, Axis::x, pi / 2), m);
  CHECK(max_abs_diff(after_x.matrix, (-spin_iy(1, 3).matrix).eval()) < 1e-12);

  // z rotations leave I_z alone
  DensityMatrix after_z = apply_pulse(iz, PulseOp::rf(1, Axis::z, 0.8), m);
  CHECK(max_abs_diff(after_z.matrix, iz.matrix) < 1e-12);

  // other spins untouched
  CHECK(z_weight(after_y, 2) == doctest::Approx(0.0));
}

TEST_CASE("idealized delays evolve only the declared coupling") {
  MoleculeSpec m = MoleculeSpec::alanine();
  DensityMatrix ix;
  ix.n_spins = 3;
  ix.kind = MatrixKind::deviation;
  ix.matrix = spin_ix(1, 3).matrix;

  double t = 1.0 / (2.0 * m.coupling(1, 2));
  DensityMatrix evolved = apply_pulse(ix, PulseOp::delay_coupled(t, 1, 2), m);
  // I_1x -> 2 I_1y I_2z under a full 1/(2J) antiphase delay
  Mat want = 2.0 * spin_iy(1, 3).matrix * spin_iz(2, 3).matrix;
  CHECK(max_abs_diff(evolved.matrix, want) < 1e-12);

  // equals the pure coupling propagator at angle 2 pi J t
  DensityMatrix via_j = apply_pulse(ix, PulseOp::j(1, 2, 2.0 * pi * m.coupling(1, 2) * t), m);
  CHECK(max_abs_diff(evolved.matrix, via_j.matrix) < 1e-12);

  // two half delays compose to one full delay
  DensityMatrix twice = apply_pulse(apply_pulse(ix, PulseOp::delay_coupled(t / 2, 1, 2), m),
                                    PulseOp::delay_coupled(t / 2, 1, 2), m);
  CHECK(max_abs_diff(twice.matrix, evolved.matrix) < 1e-12);

  // a bare delay is a no-op (refocusing assumed)
  DensityMatrix idle = apply_pulse(ix, PulseOp::delay(0.123), m);
  CHECK(max_abs_diff(idle.matrix, ix.matrix) == 0.0);
}

TEST_CASE("strict-mode echo delays refocus shifts and out-of-pair couplings") {
  MoleculeSpec m = MoleculeSpec::alanine();
  SimOptions strict;
  strict.strict_delays = true;
  DensityMatrix ix;
  ix.n_spins = 3;
  ix.kind = MatrixKind::deviation;
  ix.matrix = spin_ix(1, 3).matrix;

  double t = 1.0 / (2.0 * m.coupling(1, 2));
  DensityMatrix ideal = apply_pulse(ix, PulseOp::delay_coupled(t, 1, 2), m);
  DensityMatrix echoed = apply_pulse(ix, PulseOp::delay_coupled(t, 1, 2), m, strict);
  CHECK(max_abs_diff(echoed.matrix, ideal.matrix) < 1e-9);

  // strict bare delay does evolve the full Hamiltonian: transverse
  // magnetization picks up the chemical-shift phase
  DensityMatrix bare = apply_pulse(ix, PulseOp::delay(1e-4), m, strict);
  CHECK(max_abs_diff(bare.matrix, ix.matrix) > 1e-3);
  // but a diagonal state is invariant
  DensityMatrix diag = thermal_state(m);
  CHECK(max_abs_diff(apply_pulse(diag, PulseOp::delay(1e-4), m, strict).matrix, diag.matrix) < 1e-12);
}

TEST_CASE("gradient crusher keeps exactly the zero-magnetization-difference block") {
  MoleculeSpec m = MoleculeSpec::alanine();
  Rng rng(5);
  DensityMatrix rho = random_deviation(3, rng);
  DensityMatrix g = apply_gradient(rho);
  // idempotent projection, Hermitian, trace preserved
  CHECK(max_abs_diff(apply_gradient(g).matrix, g.matrix) == 0.0);
  CHECK(max_abs_diff(g.matrix, g.matrix.adjoint().eval()) < 1e-15);
  CHECK(std::abs(g.matrix.trace() - rho.matrix.trace()) < 1e-15);
  // diagonal untouched, single-quantum gone
  CHECK(max_abs_diff(g.matrix.diagonal(), rho.matrix.diagonal()) == 0.0);
  CHECK(std::abs(g.matrix(0, 1)) == 0.0);

  // transverse magnetization is destroyed
  DensityMatrix ix;
  ix.n_spins = 3;
  ix.kind = MatrixKind::deviation;
  ix.matrix = spin_ix(1, 3).matrix;
  CHECK(apply_gradient(ix).matrix.cwiseAbs().maxCoeff() == 0.0);

  // zero-quantum flip-flop coherence |01><10| survives the standard crusher
  // but not the diagonal-only variant
  DensityMatrix zq;
  zq.n_spins = 2;
  zq.kind = MatrixKind::deviation;
  zq.matrix = Mat::Zero(4, 4);
  zq.matrix(1, 2) = zq.matrix(2, 1) = 1.0;
  CHECK(max_abs_diff(apply_gradient(zq).matrix, zq.matrix) == 0.0);
  SimOptions diag_only;
  diag_only.diagonal_gradient = true;
  CHECK(apply_gradient(zq, diag_only).matrix.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("three-spin pseudo-pure preparation is exact") {
  MoleculeSpec m = MoleculeSpec::alanine();
  PulseProgram p = pseudo_pure_3spin_program(m);
  DensityMatrix rho = prepare_pseudo_pure_3spin(m);
  DensityMatrix target = pseudo_pure_target_3spin();
  CHECK(max_abs_diff(rho.matrix, target.matrix) < 1e-9);
  CHECK(max_abs_diff(target.matrix,
                     DensityMatrix::deviation_of_pure(StateVector::zero_state(3)).matrix) < 1e-15);

  // strict Hamiltonian evolution with echoes reaches the same state
  SimOptions strict;
  strict.strict_delays = true;
  CHECK(max_abs_diff(prepare_pseudo_pure_3spin(m, strict).matrix, target.matrix) < 1e-9);

  // four gradient steps
  int gradients = 0;
  for (const PulseOp& op : p.ops) gradients += (op.kind == PulseOp::Kind::gradient);
  CHECK(gradients == 4);
}

TEST_CASE("pseudo-pure preparation: intermediate gradient points") {
  MoleculeSpec m = MoleculeSpec::alanine();
  PulseProgram p = pseudo_pure_3spin_program(m);
  DensityMatrix rho = thermal_state(m);
  std::vector<DensityMatrix> after_gradient;
  for (const PulseOp& op : p.ops) {
    rho = apply_pulse(rho, op, m);
    if (op.kind == PulseOp::Kind::gradient) after_gradient.push_back(rho);
  }
  REQUIRE(after_gradient.size() == 4);

  // no zero-quantum coherence survives any crusher in this sequence: every
  // gradient output is fully diagonal
  for (const DensityMatrix& g : after_gradient) CHECK(offdiag_norm(g.matrix) < 1e-12);

  // the first step scales the spin-2 and spin-3 polarizations to 1/2 and 1/4
  CHECK(z_weight(after_gradient[0], 1) == doctest::Approx(1.0));
  CHECK(z_weight(after_gradient[0], 2) == doctest::Approx(0.5));
  CHECK(z_weight(after_gradient[0], 3) == doctest::Approx(0.25));
}

TEST_CASE("four-spin labeled preparation reaches the observer-tagged state") {
  MoleculeSpec m = MoleculeSpec::alanine().with_active({2, 1, 3, 4});
  DensityMatrix rho = prepare_labeled_pseudo_pure_4spin(m);
  DensityMatrix target = labeled_pseudo_pure_target_4spin();
  CHECK(max_abs_diff(rho.matrix, target.matrix) < 1e-9);
  // I_1z tensor |000><000|: +1/2 on |0000>, -1/2 on |1000>
  CHECK(target.matrix(0, 0).real() == doctest::Approx(0.5));
  CHECK(target.matrix(8, 8).real() == doctest::Approx(-0.5));
  CHECK(std::abs(target.matrix.trace()) < 1e-14);

  // step 1 leaves only the observer polarization
  PulseProgram p = labeled_pseudo_pure_4spin_program(m);
  DensityMatrix step1 = thermal_state(m);
  for (int i = 0; i < 4; ++i) step1 = apply_pulse(step1, p.ops[i], m);
  CHECK(max_abs_diff(step1.matrix, spin_iz(1, 4).matrix) < 1e-12);

  SimOptions strict;
  strict.strict_delays = true;
  CHECK(max_abs_diff(prepare_labeled_pseudo_pure_4spin(m, strict).matrix, target.matrix) < 1e-9);

  CHECK_THROWS_AS(labeled_pseudo_pure_4spin_program(MoleculeSpec::alanine()), std::invalid_argument);
  CHECK_THROWS_AS(pseudo_pure_3spin_program(m), std::invalid_argument);
}

TEST_CASE("pulse-program execution matches the gate-level unitary") {
  MoleculeSpec m = MoleculeSpec::alanine();
  Rng rng(9);
  DensityMatrix rho = DensityMatrix::from_pure(random_state(3, rng));
  QuantumCircuit c = build_qft_circuit(3, true);
  Mat u = circuit_unitary(c);
  DensityMatrix direct = apply_unitary(rho, u);
  for (bool elide : {true, false}) {
    DensityMatrix via_pulses = run_program(rho, simplify(compile(c, elide)), m);
    CHECK(max_abs_diff(via_pulses.matrix, direct.matrix) < 1e-8);
  }
}

TEST_CASE("run_program preserves density-matrix invariants") {
  MoleculeSpec m = MoleculeSpec::alanine();
  DensityMatrix rho = DensityMatrix::from_pure(StateVector::zero_state(3));
  DensityMatrix out = run_program(rho, pseudo_pure_3spin_program(m), m);
  CHECK(out.matrix.trace().real() == doctest::Approx(1.0));
  CHECK(max_abs_diff(out.matrix, out.matrix.adjoint().eval()) < 1e-12);
  CHECK_NOTHROW(out.validate(1e-9));

  PulseProgram wrong;
  wrong.n_spins = 2;
  CHECK_THROWS_AS(run_program(rho, wrong, m), std::invalid_argument);
}
