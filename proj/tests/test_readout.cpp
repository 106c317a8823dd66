#include <doctest.h>

#include <cmath>
#include <sstream>

#include "readout.hpp"
#include "units.hpp"

using namespace qleak;

namespace {

NoiseParams decay_only() {
  NoiseParams n;
  n.t1_10_us = 22.0;
  n.t1_21_us = 18.0;
  n.heat_12_per_ms = 1.0 / 2.2;
  return n;
}

}  // namespace

TEST_CASE("apply_confusion") {
  const ConfusionMatrix cm = ConfusionMatrix::paper();

  SUBCASE("identity matrix leaves probabilities unchanged") {
    ConfusionMatrix id;
    const Eigen::Vector3d v(0.2, 0.5, 0.3);
    CHECK((apply_confusion(v, id) - v).cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("prepared |0> maps to the paper's first row") {
    const Eigen::Vector3d out = apply_confusion(Eigen::Vector3d(1, 0, 0), cm);
    CHECK(out[0] == doctest::Approx(0.993).epsilon(1e-3));
    CHECK(out[1] == doctest::Approx(0.0069).epsilon(1e-3));
    CHECK(out[2] == doctest::Approx(5e-5).epsilon(1e-3));
  }
  SUBCASE("prepared |2> maps to the paper's third row") {
    const Eigen::Vector3d out = apply_confusion(Eigen::Vector3d(0, 0, 1), cm);
    CHECK(out[0] == doctest::Approx(0.0246).epsilon(1e-3));
    CHECK(out[1] == doctest::Approx(0.083).epsilon(1e-3));
    CHECK(out[2] == doctest::Approx(0.892).epsilon(1e-3));
  }
  SUBCASE("linear and simplex-preserving") {
    const Eigen::Vector3d a(0.7, 0.2, 0.1), b(0.1, 0.3, 0.6);
    const Eigen::Vector3d mix = 0.25 * a + 0.75 * b;
    const Eigen::Vector3d lhs = apply_confusion(mix, cm);
    const Eigen::Vector3d rhs = 0.25 * apply_confusion(a, cm) + 0.75 * apply_confusion(b, cm);
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-15);
    CHECK(lhs.sum() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(lhs.minCoeff() >= 0.0);
  }
}

TEST_CASE("correct_visibility") {
  const ConfusionMatrix cm = ConfusionMatrix::paper();

  SUBCASE("round trip is exact for interior points") {
    const Eigen::Vector3d v(0.6, 0.3, 0.1);
    const VisibilityCorrection out = correct_visibility(apply_confusion(v, cm), cm);
    CHECK_FALSE(out.clipped);
    CHECK((out.probs - v).cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("measured row 2 inverts to pure |1>") {
    const Eigen::Vector3d measured = cm.m.row(1).transpose();
    const VisibilityCorrection out = correct_visibility(measured, cm);
    CHECK(out.probs[1] == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(out.probs[0] == doctest::Approx(0.0).epsilon(1e-10));
  }
  SUBCASE("slightly out-of-range input clips, renormalizes, and is flagged") {
    Eigen::Vector3d measured = apply_confusion(Eigen::Vector3d(1, 0, 0), cm);
    measured[2] = 0.0;  // below the physical image of the simplex
    measured /= measured.sum();
    const VisibilityCorrection out = correct_visibility(measured, cm);
    CHECK(out.clipped);
    CHECK(out.probs.sum() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(out.probs.minCoeff() >= 0.0);
  }
  SUBCASE("singular matrix rejected") {
    ConfusionMatrix singular;
    singular.m.row(2) = singular.m.row(1);
    CHECK_THROWS_AS(correct_visibility(Eigen::Vector3d(0.3, 0.4, 0.3), singular),
                    std::invalid_argument);
  }
}

TEST_CASE("confusion matrix validation") {
  ConfusionMatrix bad;
  bad.m(0, 0) = 1.2;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  ConfusionMatrix rows;
  rows.m(1, 1) = 0.5;
  CHECK_THROWS_AS(rows.validate(), std::invalid_argument);
  CHECK_NOTHROW(ConfusionMatrix::paper().validate());
}

TEST_CASE("simulate_readout classification") {
  const IQModel iq = IQModel::defaults();

  SUBCASE("sampled label survives classification when clouds are separated") {
    NoiseParams off;  // no decay: label equals prepared state up to overlap 1e-4
    RngStream rng(2024);
    int wrong = 0;
    const int shots = 20000;
    for (int s = 0; s < shots; ++s) {
      const ReadoutSample sample = simulate_readout(DensityMatrix::basis(1), iq, off, rng);
      if (sample.label != 1) ++wrong;
    }
    CHECK(wrong <= 10);  // ~2 expected at 1e-4
  }
  SUBCASE("nearly zero-width clouds classify exactly") {
    IQModel tight = iq;
    tight.stds = {1e-9, 1e-9, 1e-9};
    NoiseParams off;
    RngStream rng(7);
    for (int s = 0; s < 200; ++s) {
      const ReadoutSample sample = simulate_readout(DensityMatrix::basis(2), iq, off, rng);
      (void)sample;
    }
    const ReadoutSample sample = simulate_readout(DensityMatrix::basis(2), tight, off, rng);
    CHECK(sample.label == 2);
  }
  SUBCASE("heating during the window populates |2> at the expected rate") {
    RngStream rng(31337);
    NoiseParams heat;
    heat.heat_12_per_ms = 1.0 / 2.2;  // ~4.5e-7 per ns
    heat.t1_10_us = 22.0;
    heat.t1_21_us = 18.0;
    int measured2 = 0;
    const int shots = 200000;
    for (int s = 0; s < shots; ++s) {
      if (simulate_readout(DensityMatrix::basis(1), iq, heat, rng).label == 2) ++measured2;
    }
    const double p21 = static_cast<double>(measured2) / shots;
    CHECK(p21 > 3e-4);
    CHECK(p21 < 7e-4);
  }
}

TEST_CASE("estimate_confusion") {
  const IQModel iq = IQModel::defaults();

  SUBCASE("no decay gives a near-identity matrix with exact row sums") {
    NoiseParams off;
    RngStream rng(555);
    const ConfusionMatrix cm = estimate_confusion(iq, off, 5000, rng);
    for (int r = 0; r < 3; ++r) {
      CHECK(cm.m.row(r).sum() == doctest::Approx(1.0).epsilon(1e-12));
      CHECK(cm.m(r, r) > 0.995);
    }
  }
  SUBCASE("decay-dominated off-diagonals match the rate model") {
    RngStream rng(777);
    const ConfusionMatrix cm = estimate_confusion(iq, decay_only(), 50000, rng);
    // P(0 | prepare 1) ~ 1 - exp(-1us / 22us)
    CHECK(cm.m(1, 0) == doctest::Approx(1.0 - std::exp(-1.0 / 22.0)).epsilon(0.10));
    CHECK(cm.m(2, 2) < cm.m(0, 0));
  }
  SUBCASE("shot floor enforced") {
    RngStream rng(1);
    CHECK_THROWS_AS(estimate_confusion(iq, NoiseParams{}, 10, rng), std::invalid_argument);
  }
}

TEST_CASE("P(measure 0 | prepare 1) grows with the readout window") {
  RngStream rng(808);
  double previous = -1.0;
  for (double window : {0.25, 0.5, 1.0, 2.0}) {
    IQModel iq = IQModel::defaults();
    iq.readout_duration_us = window;
    const ConfusionMatrix cm = estimate_confusion(iq, decay_only(), 40000, rng);
    CHECK(cm.m(1, 0) > previous);
    previous = cm.m(1, 0);
  }
}

TEST_CASE("confusion CSV round trip") {
  const ConfusionMatrix cm = ConfusionMatrix::paper();
  std::stringstream ss;
  write_confusion_csv(cm, ss);
  const ConfusionMatrix back = read_confusion_csv(ss);
  CHECK((back.m - cm.m).cwiseAbs().maxCoeff() < 1e-15);

  std::stringstream bad("1,0\n0,1\n");
  CHECK_THROWS_AS(read_confusion_csv(bad), std::invalid_argument);
}
