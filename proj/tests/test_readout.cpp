#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "qftnmr/readout.hpp"
#include "test_helpers.hpp"

using namespace qftnmr;
using namespace qftnmr::test;

namespace {

DensityMatrix deviation_of_index(int n, long idx) {
  return DensityMatrix::deviation_of_pure(StateVector::basis(n, idx));
}

const SpectrumLine* line_for(const Spectrum& s, const std::vector<int>& bits) {
  for (const SpectrumLine& l : s.lines) {
    if (l.neighbor_bits == bits) return &l;
  }
  return nullptr;
}

PulseOp readout_y(int spin) { return PulseOp::rf(spin, Axis::y, pi / 2); }

}  // namespace

TEST_CASE("thermal spectrum: every line positive with unit amplitude") {
  MoleculeSpec m = MoleculeSpec::alanine();
  for (int spin = 1; spin <= 3; ++spin) {
    Spectrum s = synthesize_spectrum(thermal_state(m), spin, m, readout_y(spin));
    CHECK(s.observed_spin == spin);
    CHECK(s.observed_label == m.active_spin(spin).label);
    REQUIRE(s.lines.size() == 4);
    for (const SpectrumLine& l : s.lines) CHECK(l.amplitude == doctest::Approx(1.0));
    // sorted by frequency
    for (std::size_t i = 1; i < s.lines.size(); ++i) {
      CHECK(s.lines[i].frequency_hz > s.lines[i - 1].frequency_hz);
    }
  }
}

TEST_CASE("line positions follow the first-order multiplet rule") {
  MoleculeSpec m = MoleculeSpec::alanine();
  Spectrum s = synthesize_spectrum(thermal_state(m), 2, m, readout_y(2));
  // observing spin 2, neighbors are spins 1 and 3 with m = +1/2 for bit 0
  const SpectrumLine* l = line_for(s, {0, 0});
  REQUIRE(l != nullptr);
  CHECK(l->frequency_hz == doctest::Approx(m.shift(2) + 0.5 * m.coupling(1, 2) + 0.5 * m.coupling(2, 3)));
  l = line_for(s, {1, 0});
  REQUIRE(l != nullptr);
  CHECK(l->frequency_hz == doctest::Approx(m.shift(2) - 0.5 * m.coupling(1, 2) + 0.5 * m.coupling(2, 3)));
}

TEST_CASE("pseudo-pure state lights exactly one line per multiplet") {
  MoleculeSpec m = MoleculeSpec::alanine();
  DensityMatrix rho = deviation_of_index(3, 0);
  for (int spin = 1; spin <= 3; ++spin) {
    Spectrum s = synthesize_spectrum(rho, spin, m, readout_y(spin));
    const SpectrumLine* hot = line_for(s, {0, 0});
    REQUIRE(hot != nullptr);
    CHECK(hot->amplitude == doctest::Approx(1.0));
    for (const SpectrumLine& l : s.lines) {
      if (&l != hot) CHECK(std::abs(l.amplitude) < 1e-12);
    }
  }

  // a spin along -z gives a negative line: |010> observed on spin 2
  Spectrum neg = synthesize_spectrum(deviation_of_index(3, 2), 2, m, readout_y(2));
  const SpectrumLine* l = line_for(neg, {0, 0});
  REQUIRE(l != nullptr);
  CHECK(l->amplitude == doctest::Approx(-1.0));
}

TEST_CASE("equal superposition on the observed spin cancels its multiplet") {
  MoleculeSpec m = MoleculeSpec::alanine();
  StateVector psi;
  psi.n_qubits = 3;
  psi.amplitudes = Vec::Zero(8);
  psi.amplitudes[0] = psi.amplitudes[4] = 1.0 / std::sqrt(2.0);  // (|000>+|100>)/sqrt2
  DensityMatrix rho = DensityMatrix::deviation_of_pure(psi);

  // spin 1 carries x-magnetization; the y readout turns it into z, so no
  // observable coherence remains anywhere in its multiplet
  Spectrum s1 = synthesize_spectrum(rho, 1, m, readout_y(1));
  for (const SpectrumLine& l : s1.lines) CHECK(std::abs(l.amplitude) < 1e-12);

  // spin 2 sees spin 1 as an even classical mixture: two half-height lines
  Spectrum s2 = synthesize_spectrum(rho, 2, m, readout_y(2));
  CHECK(line_for(s2, {0, 0})->amplitude == doctest::Approx(0.5));
  CHECK(line_for(s2, {1, 0})->amplitude == doctest::Approx(0.5));
  CHECK(std::abs(line_for(s2, {0, 1})->amplitude) < 1e-12);
  CHECK(std::abs(line_for(s2, {1, 1})->amplitude) < 1e-12);
}

TEST_CASE("spectrum CSV lists one row per line") {
  MoleculeSpec m = MoleculeSpec::alanine();
  Spectrum s = synthesize_spectrum(thermal_state(m), 1, m, readout_y(1));
  std::string csv = s.to_csv();
  int rows = 0;
  for (char c : csv) rows += (c == '\n');
  CHECK(rows == 5);  // header + 4 lines
  CHECK(csv.find("frequency_hz") != std::string::npos);
}

TEST_CASE("lorentzian rendering peaks at the line positions") {
  Spectrum s;
  s.observed_spin = 1;
  s.lines = {{100.0, 2.0, {0}}, {200.0, -1.0, {1}}};
  auto curve = render_lorentzian(s, 4.0, 50.0, 250.0, 201);
  REQUIRE(curve.size() == 201);
  CHECK(curve.front().first == doctest::Approx(50.0));
  CHECK(curve.back().first == doctest::Approx(250.0));
  double at_100 = 0.0, at_200 = 0.0;
  for (const auto& [f, v] : curve) {
    if (std::abs(f - 100.0) < 0.5) at_100 = v;
    if (std::abs(f - 200.0) < 0.5) at_200 = v;
  }
  CHECK(at_100 == doctest::Approx(2.0).epsilon(0.01));
  CHECK(at_200 == doctest::Approx(-1.0).epsilon(0.02));
  CHECK_THROWS_AS(render_lorentzian(s, -1.0, 0.0, 1.0, 10), std::invalid_argument);
}

TEST_CASE("observer readout decoding") {
  // observer-first four-spin layout
  MoleculeSpec m = MoleculeSpec::alanine().with_active({2, 1, 3, 4});
  DensityMatrix rho = labeled_pseudo_pure_target_4spin();
  Spectrum s = synthesize_spectrum(rho, 1, m, readout_y(1));
  std::vector<DecodedState> dec = decode_observer_readout(s, 1, m);
  REQUIRE(dec.size() == 1);
  CHECK(dec[0].basis_state == 0);
  CHECK(dec[0].bits == "000");
  CHECK(dec[0].amplitude == doctest::Approx(1.0));

  // flipping one computational spin moves the decoded state
  Mat flip = pulse_matrix(PulseOp::rf(3, Axis::x, pi), 4);
  std::vector<DecodedState> dec2 = decode_observer_readout(
      synthesize_spectrum(apply_unitary(rho, flip), 1, m, readout_y(1)), 1, m);
  REQUIRE(dec2.size() == 1);
  CHECK(dec2[0].bits == "010");
  CHECK(dec2[0].basis_state == 2);

  CHECK_THROWS_AS(decode_observer_readout(s, 2, m), std::invalid_argument);
}

TEST_CASE("decoding refuses ambiguous multiplets") {
  MoleculeSpec m;
  m.spins = {{"A", 0.0}, {"B", 1000.0}, {"C", 2000.0}};
  m.couplings_hz = {{0, 10, 10}, {10, 0, 20}, {10, 20, 0}};  // J_AB == J_AC
  m.active = {1, 2, 3};
  Spectrum s = synthesize_spectrum(thermal_state(m), 1, m, readout_y(1));
  CHECK_THROWS_WITH_AS(decode_observer_readout(s, 1, m), doctest::Contains("ambiguous"),
                       std::invalid_argument);
}

TEST_CASE("tomography closes the loop on random deviation states") {
  MoleculeSpec m = MoleculeSpec::alanine();
  Rng rng(31);
  for (int trial = 0; trial < 100; ++trial) {
    DensityMatrix rho = random_deviation(3, rng);
    TomogramResult t = tomograph(rho, m);
    CHECK(t.residual <= 1e-8);
    CHECK(max_abs_diff(t.reconstructed.matrix, rho.matrix) <= 1e-8);
  }
}

TEST_CASE("tomography details") {
  MoleculeSpec m = MoleculeSpec::alanine();
  DensityMatrix rho = deviation_of_index(3, 0);
  TomogramResult t = tomograph(rho, m);
  CHECK(t.readout_set.size() == 27);
  CHECK(t.residual < 1e-10);
  CHECK(max_abs_diff(t.reconstructed.matrix, rho.matrix) < 1e-10);
  CHECK(t.to_json().find("residual") != std::string::npos);

  DensityMatrix zero;
  zero.n_spins = 3;
  zero.kind = MatrixKind::deviation;
  zero.matrix = Mat::Zero(8, 8);
  CHECK(tomograph(zero, m).reconstructed.matrix.cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("attenuated correlation") {
  Rng rng(17);
  DensityMatrix rho = random_deviation(3, rng);
  CHECK(attenuated_correlation(rho, rho) == doctest::Approx(1.0));

  // linearity: scaling the measured state scales the correlation
  DensityMatrix doubled = rho;
  doubled.matrix *= 2.0;
  CHECK(attenuated_correlation(rho, doubled) == doctest::Approx(2.0));

  // orthogonal admixture does not contribute
  DensityMatrix orth = random_deviation(3, rng);
  orth.matrix -= rho.matrix * (rho.matrix.adjoint() * orth.matrix).trace().real();  // unit-norm rho
  DensityMatrix mix = rho;
  mix.matrix = 0.92 * rho.matrix + 0.39 * orth.matrix;
  CHECK(attenuated_correlation(rho, orth) == doctest::Approx(0.0).epsilon(1e-10));
  CHECK(attenuated_correlation(rho, mix) == doctest::Approx(0.92));

  DensityMatrix zero;
  zero.n_spins = 3;
  zero.kind = MatrixKind::deviation;
  zero.matrix = Mat::Zero(8, 8);
  CHECK_THROWS_AS(attenuated_correlation(zero, rho), std::invalid_argument);
}

TEST_CASE("period inference from decoded state supports") {
  CHECK(infer_period_from_states({0, 4}, 3).k == 4);
  CHECK(infer_period_from_states({0, 4}, 3).r == 2);
  CHECK(infer_period_from_states({0, 2, 4, 6}, 3).r == 4);
  CHECK(infer_period_from_states({1, 3, 5, 7}, 3).r == 4);
  CHECK(infer_period_from_states({0}, 3).k == 8);
  CHECK(infer_period_from_states({0}, 3).r == 1);
  // order and duplicates do not matter
  CHECK(infer_period_from_states({4, 0, 4}, 3).r == 2);

  CHECK_THROWS_AS(infer_period_from_states({}, 3), std::invalid_argument);
  CHECK_THROWS_AS(infer_period_from_states({0, 3}, 3), std::invalid_argument);     // 3 does not divide 8
  CHECK_THROWS_AS(infer_period_from_states({0, 2, 4}, 3), std::invalid_argument);  // incomplete
  CHECK_THROWS_AS(infer_period_from_states({0, 2, 5}, 3), std::invalid_argument);  // uneven spacing
  CHECK_THROWS_AS(infer_period_from_states({0, 9}, 3), std::invalid_argument);     // out of range
}
