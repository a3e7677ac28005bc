#include "hadtomo/channel.hpp"

#include "support/generators.hpp"

#include <catch2/catch_amalgamated.hpp>

using namespace hadtomo;
namespace gen = hadtomo::testing;

TEST_CASE("scalar signals", "[channel]") {
  SECTION("exponential sum evaluation") {
    const ScalarSignal s = ScalarSignal::exponential_sum(
        {{2.0, Complex(-1.0, 0)}, {Complex(0, 1), Complex(0, 3.0)}});
    const double t = 0.7;
    const Complex expect =
        2.0 * std::exp(-t) + Complex(0, 1) * std::exp(Complex(0, 3.0 * t));
    REQUIRE(std::abs(s(t) - expect) < 1e-15);
  }
  SECTION("tabulated interpolation and range errors") {
    const ScalarSignal s =
        ScalarSignal::tabulated({0.0, 1.0, 3.0}, {1.0, 3.0, Complex(0, 1)});
    REQUIRE(std::abs(s(0.0) - Complex(1.0)) < 1e-15);
    REQUIRE(std::abs(s(0.5) - Complex(2.0)) < 1e-15);
    REQUIRE(std::abs(s(2.0) - Complex(1.5, 0.5)) < 1e-15);
    REQUIRE_THROWS_AS(s(3.5), DomainError);
    REQUIRE(!s.covers(3.5));
  }
  SECTION("invalid construction") {
    REQUIRE_THROWS_AS(ScalarSignal::exponential_sum({}), DomainError);
    REQUIRE_THROWS_AS(ScalarSignal::tabulated({0.0, 0.0}, {1.0, 1.0}),
                      DomainError);
    REQUIRE_THROWS_AS(ScalarSignal::constant(1.0)(-0.5), DomainError);
  }
}

TEST_CASE("damping model evaluation", "[channel]") {
  SECTION("dephasing hits the expected matrices") {
    const DampingModel channel = gen::dephasing_channel(1.0);
    REQUIRE(max_abs(channel.evaluate(0.0) - ones_matrix(2)) < 1e-15);
    ComplexMatrix half(2, 2);
    half << 1, 0.5, 0.5, 1;
    REQUIRE(max_abs(channel.evaluate(std::log(2.0)) - half) < 1e-15);
  }
  SECTION("single-term constant decomposition is the identity channel") {
    BasisDecomposition d;
    d.basis = {ones_matrix(2)};
    d.signals = {ScalarSignal::constant(1.0)};
    const DampingModel channel = DampingModel::decomposed(d);
    for (double t : {0.0, 0.3, 2.0})
      REQUIRE(max_abs(channel.evaluate(t) - ones_matrix(2)) < 1e-15);
  }
  SECTION("negative time rejected") {
    REQUIRE_THROWS_AS(gen::dephasing_channel(1.0).evaluate(-1.0), DomainError);
  }
  SECTION("tabulated matrix samples interpolate entrywise") {
    ComplexMatrix late(2, 2);
    late << 1, 0, 0, 1;
    const DampingModel channel = DampingModel::tabulated(
        {{0.0, ones_matrix(2)}, {2.0, late}});
    const ComplexMatrix mid = channel.evaluate(1.0);
    REQUIRE(std::abs(mid(0, 1) - Complex(0.5)) < 1e-15);
    REQUIRE_THROWS_AS(channel.evaluate(3.0), DomainError);
  }
  SECTION("dependent basis is rejected") {
    BasisDecomposition d;
    d.basis = {pauli_x(), 2.0 * pauli_x()};
    d.signals = {ScalarSignal::constant(1.0), ScalarSignal::constant(1.0)};
    REQUIRE_THROWS_AS(DampingModel::decomposed(d), DomainError);
  }
}

TEST_CASE("channel validation", "[channel]") {
  SECTION("dephasing passes everywhere") {
    const ValidationReport report = validate_channel(
        gen::dephasing_channel(1.0), {0.0, 0.5, 1.0, 2.0});
    REQUIRE(report.ok());
    REQUIRE(report.worst_psd_violation < 1e-14);
  }
  SECTION("an overcoherent matrix fails positivity and the initial condition") {
    // D(t) = [[1, 2 e^-t], [2 e^-t, 1]]: eigenvalues 1 +- 2 e^-t.
    BasisDecomposition d;
    d.basis = {identity_matrix(2), pauli_x()};
    d.signals = {ScalarSignal::constant(1.0),
                 ScalarSignal::exponential_sum({{2.0, Complex(-1.0, 0)}})};
    const ValidationReport report =
        validate_channel(DampingModel::decomposed(d), {0.0, 0.5, 1.0});
    REQUIRE(!report.init_ok);
    REQUIRE(!report.psd_ok);
    REQUIRE(report.diag_ok);
    REQUIRE(report.worst_psd_violation == Catch::Approx(1.0).margin(1e-12));
    REQUIRE(report.worst_init_violation == Catch::Approx(1.0).margin(1e-12));
  }
  SECTION("grid must be present and contain zero") {
    REQUIRE_THROWS_AS(validate_channel(gen::dephasing_channel(1.0), {}),
                      DomainError);
    REQUIRE_THROWS_AS(validate_channel(gen::dephasing_channel(1.0), {0.5}),
                      DomainError);
  }
  SECTION("random valid exponential-sum channels validate") {
    std::mt19937_64 rng(401);
    for (int rep = 0; rep < 10; ++rep) {
      const Eigen::Index n = 2 + static_cast<Eigen::Index>(rng() % 3);
      const Eigen::Index mu_max = n * n - n + 1;
      const Eigen::Index mu = 2 + static_cast<Eigen::Index>(rng() % (mu_max - 1));
      const DampingModel channel =
          gen::random_exponential_damping_model(n, mu, rng());
      const ValidationReport report =
          validate_channel(channel, {0.0, 0.25, 0.7, 1.4, 3.0, 6.0});
      REQUIRE(report.ok());
    }
  }
}

TEST_CASE("basis extraction from samples", "[channel]") {
  SECTION("dephasing collapses to two basis matrices") {
    const DampingModel channel = gen::dephasing_channel(1.0);
    const double l2 = std::log(2.0);
    const BasisDecomposition decomp =
        extract_basis(channel, {0.0, l2, 2 * l2, 3 * l2});
    REQUIRE(decomp.mu() == 2);
    REQUIRE(max_abs(decomp.basis[0] - ones_matrix(2)) < 1e-14);
    REQUIRE(max_abs(decomp.basis[1] - channel.evaluate(l2)) < 1e-14);
    for (double t : {0.0, l2, 2 * l2, 3 * l2})
      REQUIRE((decomp.evaluate(t) - channel.evaluate(t)).norm() < 1e-12);
  }
  SECTION("constant channel has a one-element basis") {
    const DampingModel channel =
        DampingModel::sampled(2, [](double) { return ones_matrix(2); });
    const BasisDecomposition decomp = extract_basis(channel, {0.0, 1.0, 2.0});
    REQUIRE(decomp.mu() == 1);
    REQUIRE(max_abs(decomp.basis[0] - ones_matrix(2)) < 1e-15);
    for (double t : {0.0, 1.0, 2.0})
      REQUIRE(std::abs(decomp.signals[0](t) - Complex(1.0)) < 1e-12);
  }
  SECTION("a single candidate cannot cover a moving trajectory") {
    const BasisDecomposition decomp =
        extract_basis(gen::dephasing_channel(1.0), {0.0});
    REQUIRE(decomp.mu() == 1);
    // The tabulated signals only cover t = 0; later probes are out of range.
    REQUIRE_THROWS_AS(decomp.evaluate(0.5), DomainError);
  }
  SECTION("sub-threshold but over-tolerance component aborts with the time") {
    // The third sample adds a component small enough that the rank test
    // treats it as dependent, yet far above the requested fit tolerance.
    const ComplexMatrix ones = ones_matrix(2);
    const ComplexMatrix x1 = pauli_x();
    const ComplexMatrix x2 = pauli_z();
    const DampingModel channel = DampingModel::sampled(2, [&](double t) {
      if (t < 0.5) return ones;
      if (t < 1.5) return (ones + x1).eval();
      return (ones + x1 + 2e-9 * x2).eval();
    });
    try {
      extract_basis(channel, {0.0, 1.0, 2.0}, 1e-12);
      FAIL("expected DecompositionError");
    } catch (const DecompositionError& e) {
      REQUIRE(e.time == Catch::Approx(2.0));
    }
  }
  SECTION("refining the grid does not change mu") {
    const DampingModel channel = gen::dephasing_channel(0.7);
    std::vector<double> coarse = {0.0, 0.5, 1.0, 2.0};
    std::vector<double> fine;
    for (int i = 0; i <= 40; ++i) fine.push_back(0.05 * i);
    REQUIRE(extract_basis(channel, coarse).mu() == 2);
    REQUIRE(extract_basis(channel, fine).mu() == 2);
  }
}

TEST_CASE("basis closure under products", "[channel]") {
  SECTION("identity alone is closed") {
    const auto closed = basis_closure({identity_matrix(2)});
    REQUIRE(closed.size() == 1);
  }
  SECTION("two Paulis generate the full qubit operator space") {
    const auto closed = basis_closure({pauli_x(), pauli_y()});
    REQUIRE(closed.size() == 4);
    REQUIRE(numerical_rank(closed) == 4);
  }
  SECTION("all-ones and identity are already closed") {
    const auto closed = basis_closure({ones_matrix(2), identity_matrix(2)});
    REQUIRE(closed.size() == 2);
  }
  SECTION("output spans all pairwise products") {
    std::mt19937_64 rng(23);
    const std::vector<ComplexMatrix> seed = {
        gen::random_hermitian(3, rng), gen::random_hermitian(3, rng)};
    const auto closed = basis_closure(seed);
    REQUIRE(numerical_rank(closed) == static_cast<int>(closed.size()));
    for (const auto& a : closed)
      for (const auto& b : closed) {
        double residual = 0.0;
        basis_coordinates(closed, a * b, &residual);
        REQUIRE(residual < 1e-9 * std::max(1.0, (a * b).norm()));
      }
  }
}

TEST_CASE("channel application", "[channel]") {
  const DampingModel channel = gen::dephasing_channel(1.0);
  const DensityMatrix rho0 = gen::reference_qubit_state();

  SECTION("t = 0 is the identity map") {
    REQUIRE(max_abs(apply_channel(channel, 0.0, rho0).matrix() -
                    rho0.matrix()) < 1e-15);
  }
  SECTION("off-diagonals halve at t = ln 2") {
    const ComplexMatrix out =
        apply_channel(channel, std::log(2.0), rho0).matrix();
    ComplexMatrix expect(2, 2);
    expect << 0.6, Complex(0.05, -0.1), Complex(0.05, 0.1), 0.4;
    REQUIRE(max_abs(out - expect) < 1e-15);
  }
  SECTION("diagonal states are fixed points") {
    ComplexMatrix diag = ComplexMatrix::Zero(2, 2);
    diag(0, 0) = 0.3;
    diag(1, 1) = 0.7;
    const DensityMatrix rho(diag);
    for (double t : {0.1, 1.0, 10.0})
      REQUIRE(max_abs(apply_channel(channel, t, rho).matrix() - diag) < 1e-15);
  }
  SECTION("valid channels preserve the state invariants and trace") {
    std::mt19937_64 rng(31);
    for (int rep = 0; rep < 20; ++rep) {
      const Eigen::Index n = 2 + static_cast<Eigen::Index>(rng() % 3);
      const Eigen::Index mu_max = n * n - n + 1;
      const Eigen::Index mu = 2 + static_cast<Eigen::Index>(rng() % (mu_max - 1));
      const DampingModel random_channel =
          gen::random_exponential_damping_model(n, mu, rng());
      const DensityMatrix rho = gen::random_density(n, rng);
      const double t = 3.0 * static_cast<double>(rng() % 1000) / 1000.0;
      const DensityMatrix out = apply_channel(random_channel, t, rho);
      REQUIRE(std::abs(out.matrix().trace() - Complex(1.0)) < 1e-12);
    }
  }
  SECTION("dimension mismatch throws") {
    std::mt19937_64 rng(7);
    REQUIRE_THROWS_AS(apply_channel(channel, 0.0, gen::random_density(3, rng)),
                      DimensionError);
  }
}
