#include "hadtomo/decoherence.hpp"

#include "support/generators.hpp"

#include <catch2/catch_amalgamated.hpp>

using namespace hadtomo;
namespace gen = hadtomo::testing;

namespace {

PureDecoherenceModel two_level_model() {
  // Qubit system, qubit environment, maximally mixed environment state.
  std::mt19937_64 rng(101);
  return PureDecoherenceModel(
      {0.0, 1.0}, pauli_z() / 2.0, {gen::random_hermitian(2, rng), pauli_x()},
      DensityMatrix(identity_matrix(2) / 2.0));
}

}  // namespace

TEST_CASE("dressed operators", "[decoherence]") {
  SECTION("free environment reduces to energy shifts") {
    const PureDecoherenceModel model(
        {0.5, -1.5}, ComplexMatrix::Zero(2, 2),
        {ComplexMatrix::Zero(2, 2), ComplexMatrix::Zero(2, 2)},
        DensityMatrix(identity_matrix(2) / 2.0));
    const auto dressed = dressed_operators(model);
    REQUIRE(max_abs(dressed[0] - 0.5 * identity_matrix(2)) < 1e-15);
    REQUIRE(max_abs(dressed[1] + 1.5 * identity_matrix(2)) < 1e-15);
  }
  SECTION("direct assembly") {
    const PureDecoherenceModel model(
        {0.0, 1.0}, pauli_z() / 2.0, {ComplexMatrix::Zero(2, 2), pauli_x()},
        DensityMatrix(identity_matrix(2) / 2.0));
    const auto dressed = dressed_operators(model);
    REQUIRE(max_abs(dressed[0] - pauli_z() / 2.0) < 1e-15);
    REQUIRE(max_abs(dressed[1] -
                    (identity_matrix(2) + pauli_z() / 2.0 + pauli_x())) <
            1e-15);
  }
  SECTION("always Hermitian") {
    std::mt19937_64 rng(55);
    for (int rep = 0; rep < 10; ++rep) {
      const auto model = gen::random_decoherence_model(3, 4, rng);
      for (const auto& z : dressed_operators(model))
        REQUIRE(hermiticity_defect(z) < 1e-14);
    }
  }
}

TEST_CASE("coefficient matrix", "[decoherence]") {
  SECTION("all-ones at t = 0") {
    const CoefficientMatrix c = coefficient_matrix(two_level_model(), 0.0);
    REQUIRE(max_abs(c.matrix - ones_matrix(2)) < 1e-13);
  }
  SECTION("uncoupled models give pure phases") {
    std::mt19937_64 rng(77);
    const std::vector<double> energies = {0.3, -0.7, 1.1};
    const ComplexMatrix env_h = gen::random_hermitian(2, rng);
    const PureDecoherenceModel model(
        energies, env_h,
        {ComplexMatrix::Zero(2, 2), ComplexMatrix::Zero(2, 2),
         ComplexMatrix::Zero(2, 2)},
        gen::random_density(2, rng));
    for (double t : {0.4, 1.7}) {
      const ComplexMatrix c = coefficient_matrix(model, t).matrix;
      for (Eigen::Index a = 0; a < 3; ++a)
        for (Eigen::Index b = 0; b < 3; ++b) {
          // Oracle: the scalar phase exp(-i (e_a - e_b) t).
          const Complex phase = std::exp(
              Complex(0, -(energies[static_cast<std::size_t>(a)] -
                           energies[static_cast<std::size_t>(b)]) * t));
          REQUIRE(std::abs(c(a, b) - phase) < 1e-13);
          REQUIRE(std::abs(std::abs(c(a, b)) - 1.0) < 1e-13);
        }
    }
  }
  SECTION("unit diagonal for all times") {
    std::mt19937_64 rng(78);
    const auto model = gen::random_decoherence_model(2, 3, rng);
    for (double t : {0.0, 0.3, 1.0, 3.0, 10.0}) {
      const ComplexMatrix c = coefficient_matrix(model, t).matrix;
      for (Eigen::Index a = 0; a < 2; ++a)
        REQUIRE(std::abs(c(a, a) - Complex(1.0)) < 1e-13);
    }
  }
  SECTION("entries never exceed unit magnitude") {
    std::mt19937_64 rng(79);
    for (int rep = 0; rep < 10; ++rep) {
      const auto model = gen::random_decoherence_model(3, 3, rng);
      for (double t : {0.2, 0.9, 2.5})
        REQUIRE(max_abs(coefficient_matrix(model, t).matrix) <= 1.0 + 1e-12);
    }
  }
  SECTION("negative time rejected") {
    REQUIRE_THROWS_AS(coefficient_matrix(two_level_model(), -0.1), DomainError);
  }
}

TEST_CASE("kraus map", "[decoherence]") {
  const PureDecoherenceModel model = two_level_model();
  const DensityMatrix rho0 = gen::reference_qubit_state();

  SECTION("identity at t = 0") {
    REQUIRE(max_abs(apply_kraus_map(model, 0.0, rho0).matrix() -
                    rho0.matrix()) < 1e-13);
  }
  SECTION("populations are invariant") {
    ComplexMatrix diag = ComplexMatrix::Zero(2, 2);
    diag(0, 0) = 0.25;
    diag(1, 1) = 0.75;
    const DensityMatrix rho(diag);
    for (double t : {0.3, 1.2, 4.0})
      REQUIRE(max_abs(apply_kraus_map(model, t, rho).matrix() - diag) < 1e-13);
  }
  SECTION("projector route equals the entrywise route") {
    std::mt19937_64 rng(91);
    for (int rep = 0; rep < 20; ++rep) {
      const auto random_model = gen::random_decoherence_model(2, 2, rng);
      const DensityMatrix rho = gen::random_density(2, rng);
      const double t = static_cast<double>(rng() % 4000) / 1000.0;
      const ComplexMatrix via_kraus =
          apply_kraus_map(random_model, t, rho).matrix();
      const ComplexMatrix c = coefficient_matrix(random_model, t).matrix;
      // Independent oracle: entrywise product C_ij rho_ij.
      ComplexMatrix via_entries(2, 2);
      for (Eigen::Index i = 0; i < 2; ++i)
        for (Eigen::Index j = 0; j < 2; ++j)
          via_entries(i, j) = c(i, j) * rho.matrix()(i, j);
      REQUIRE(max_abs(via_kraus - via_entries) < 1e-12);
    }
  }
  SECTION("dimension mismatch rejected") {
    std::mt19937_64 rng(92);
    REQUIRE_THROWS_AS(apply_kraus_map(model, 0.1, gen::random_density(3, rng)),
                      DimensionError);
  }
}

TEST_CASE("channel synthesis", "[decoherence]") {
  SECTION("generic models yield valid channels") {
    std::mt19937_64 rng(93);
    const auto model = gen::random_decoherence_model(2, 2, rng);
    const std::vector<double> grid = {0.0, 0.3, 1.0, 3.0};
    const DampingModel channel = to_channel(model, grid);
    REQUIRE(validate_channel(channel, grid).ok());
    // The sampled channel agrees with the coefficient matrices.
    for (double t : grid)
      REQUIRE(max_abs(channel.evaluate(t) -
                      coefficient_matrix(model, t).matrix) < 1e-13);
  }
  SECTION("uncoupled models give entrywise-unimodular channels") {
    const PureDecoherenceModel model(
        {0.0, 0.8}, pauli_z(), {ComplexMatrix::Zero(2, 2), ComplexMatrix::Zero(2, 2)},
        DensityMatrix(identity_matrix(2) / 2.0));
    const DampingModel channel = to_channel(model, {0.0, 0.5, 1.0});
    const ComplexMatrix d = channel.evaluate(0.7);
    for (Eigen::Index i = 0; i < 2; ++i)
      for (Eigen::Index j = 0; j < 2; ++j)
        REQUIRE(std::abs(std::abs(d(i, j)) - 1.0) < 1e-13);
  }
  SECTION("a single-level system is the trivial channel") {
    std::mt19937_64 rng(94);
    const PureDecoherenceModel model({0.4}, gen::random_hermitian(3, rng),
                                     {gen::random_hermitian(3, rng)},
                                     gen::random_density(3, rng));
    const DampingModel channel = to_channel(model, {0.0, 1.0, 2.0});
    for (double t : {0.0, 1.0, 2.0}) {
      const ComplexMatrix d = channel.evaluate(t);
      REQUIRE(d.rows() == 1);
      REQUIRE(std::abs(d(0, 0) - Complex(1.0)) < 1e-13);
    }
  }
  SECTION("model construction rejects bad shapes") {
    REQUIRE_THROWS_AS(
        PureDecoherenceModel({0.0, 1.0}, identity_matrix(2),
                             {identity_matrix(2)},
                             DensityMatrix(identity_matrix(2) / 2.0)),
        DimensionError);
    ComplexMatrix skew(2, 2);
    skew << 0, 1, -1, 0;
    REQUIRE_THROWS_AS(
        PureDecoherenceModel({0.0, 1.0}, identity_matrix(2),
                             {skew, identity_matrix(2)},
                             DensityMatrix(identity_matrix(2) / 2.0)),
        StateError);
  }
}
