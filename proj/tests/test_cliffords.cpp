#include <doctest.h>

#include <cmath>

#include "cliffords.hpp"
#include "rng.hpp"
#include "units.hpp"

using namespace qleak;

TEST_CASE("table has 24 distinct elements with valid decompositions") {
  const CliffordTable& table = CliffordTable::instance();
  REQUIRE(table.size() == 24);

  for (int i = 0; i < 24; ++i) {
    const CliffordElement& e = table.element(i);
    CHECK(e.index == i);
    CHECK(e.decomposition.size() <= 3);
    CHECK((e.unitary.adjoint() * e.unitary - Eigen::Matrix2cd::Identity()).norm() < 1e-12);

    // decomposition reproduces the unitary up to global phase
    Eigen::Matrix2cd u = Eigen::Matrix2cd::Identity();
    for (Primitive p : e.decomposition) u = CliffordTable::primitive_unitary(p) * u;
    CHECK(phase_distance(u, e.unitary) > 1.0 - 1e-9);

    for (int j = i + 1; j < 24; ++j) {
      CHECK(phase_distance(e.unitary, table.element(j).unitary) < 1.0 - 1e-6);
    }
  }
}

TEST_CASE("pulse-count averages are exactly 1.5 and 0.375") {
  const CliffordTable& table = CliffordTable::instance();
  CHECK(table.average_half_pi_count() == 1.5);
  CHECK(table.average_pi_count() == 0.375);
}

TEST_CASE("identity element is empty") {
  const CliffordTable& table = CliffordTable::instance();
  const CliffordElement& id = table.element(table.identity_index());
  CHECK(id.decomposition.empty());
  CHECK(phase_distance(id.unitary, Eigen::Matrix2cd::Identity()) > 1.0 - 1e-12);
}

TEST_CASE("closure over all 576 pairwise products") {
  const CliffordTable& table = CliffordTable::instance();
  for (int a = 0; a < 24; ++a) {
    for (int b = 0; b < 24; ++b) {
      const int c = table.multiply(a, b);
      REQUIRE(c >= 0);
      REQUIRE(c < 24);
      const Eigen::Matrix2cd product = table.element(a).unitary * table.element(b).unitary;
      CHECK(phase_distance(product, table.element(c).unitary) > 1.0 - 1e-10);
    }
  }
}

TEST_CASE("inverses satisfy C C^-1 = I up to phase") {
  const CliffordTable& table = CliffordTable::instance();
  for (int a = 0; a < 24; ++a) {
    const int inv = table.inverse(a);
    CHECK(table.multiply(a, inv) == table.identity_index());
    const Eigen::Matrix2cd product = table.element(a).unitary * table.element(inv).unitary;
    CHECK(phase_distance(product, Eigen::Matrix2cd::Identity()) > 1.0 - 1e-10);
  }
}

TEST_CASE("associativity on random triples") {
  const CliffordTable& table = CliffordTable::instance();
  RngStream rng(17);
  for (int trial = 0; trial < 200; ++trial) {
    const int a = static_cast<int>(rng.uniform_int(24));
    const int b = static_cast<int>(rng.uniform_int(24));
    const int c = static_cast<int>(rng.uniform_int(24));
    CHECK(table.multiply(table.multiply(a, b), c) == table.multiply(a, table.multiply(b, c)));
  }
}

TEST_CASE("recovery closes random sequences to the identity") {
  const CliffordTable& table = CliffordTable::instance();

  SUBCASE("empty sequence") {
    CHECK(table.recovery({}) == table.identity_index());
  }
  SUBCASE("single element recovers to its inverse") {
    for (int c = 0; c < 24; ++c) {
      const int seq[1] = {c};
      CHECK(table.recovery(seq) == table.inverse(c));
    }
  }
  SUBCASE("random sequences up to length 100") {
    RngStream rng(23);
    for (int trial = 0; trial < 300; ++trial) {
      const int m = 1 + static_cast<int>(rng.uniform_int(100));
      std::vector<int> seq(static_cast<size_t>(m));
      Eigen::Matrix2cd u = Eigen::Matrix2cd::Identity();
      for (int k = 0; k < m; ++k) {
        seq[static_cast<size_t>(k)] = static_cast<int>(rng.uniform_int(24));
        u = table.element(seq[static_cast<size_t>(k)]).unitary * u;
      }
      u = table.element(table.recovery(seq)).unitary * u;
      CHECK(0.5 * std::abs(u.trace()) > 1.0 - 1e-10);
    }
  }
}

TEST_CASE("compile produces one envelope per primitive") {
  const CliffordTable& table = CliffordTable::instance();
  GateParams gp;
  gp.pi_amplitude = kTwoPi / 10.0;
  gp.half_pi_amplitude = kPi / 10.0;
  const double delta = mhz_to_radns(-212.0);

  SUBCASE("identity compiles to nothing") {
    CHECK(compile(table.element(0), gp, delta).empty());
  }
  SUBCASE("X pi compiles to a single 10 ns envelope") {
    const auto envs = compile(table.element(1), gp, delta);
    REQUIRE(envs.size() == 1);
    CHECK(envs[0].duration() == doctest::Approx(10.0));
  }
  SUBCASE("expected duration over a uniform draw is 18.75 ns") {
    double total = 0.0;
    for (int i = 0; i < 24; ++i) {
      for (const auto& env : compile(table.element(i), gp, delta)) total += env.duration();
    }
    CHECK(total / 24.0 == doctest::Approx(18.75).epsilon(1e-12));
  }
  SUBCASE("missing calibration is rejected") {
    GateParams missing;
    CHECK_THROWS_AS(compile(table.element(1), missing, delta), std::invalid_argument);
  }
}

TEST_CASE("conformance dump lists every element") {
  const std::string dump = CliffordTable::instance().to_json();
  CHECK(dump.find("\"index\": 23") != std::string::npos);
  CHECK(dump.find("Xpi") != std::string::npos);
  CHECK(dump.find("unitary") != std::string::npos);
}
