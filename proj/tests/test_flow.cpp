#include <doctest.h>

#include <cmath>
#include <functional>

#include "gapflow/errors.hpp"
#include "gapflow/flow.hpp"
#include "gapflow/solver.hpp"
#include "support.hpp"

using namespace gapflow;

namespace {

// Scalar system T(Y, s) = f(Y) - s with a user-supplied derivative.
class ScalarToy final : public KktSystem {
 public:
  ScalarToy(std::function<double(double)> f, std::function<double(double)> df)
      : f_(std::move(f)), df_(std::move(df)) {}

  Index size() const override { return 1; }
  double residual_scale() const override { return 1.0; }
  Vector residual(const Vector& y, double s) const override {
    return Vector::Constant(1, f_(y[0]) - s);
  }
  SparseSquareMatrix jacobian(const Vector& y, double) const override {
    DenseMatrix m(1, 1);
    m(0, 0) = df_(y[0]);
    return SparseSquareMatrix::from_dense(m);
  }
  Vector sensitivity() const override { return Vector::Constant(1, -1.0); }

 private:
  std::function<double(double)> f_, df_;
};

ScalarToy identity_toy() {
  return ScalarToy([](double y) { return y; }, [](double) { return 1.0; });
}

FlowParams toy_params() {
  FlowParams p;
  p.eps_t = 50.0;
  p.eps_s = 10.0;
  p.dtau = 1e-2;
  p.s0 = 1.0;
  p.se = 0.0;
  return p;
}

}  // namespace

TEST_SUITE("flow") {

TEST_CASE("parameter schedule") {
  FlowParams p;
  CHECK(parameter_at(p, 0.0) == 1.0);
  CHECK(parameter_at(p, 1e3) == doctest::Approx(1e-3));
  CHECK(parameter_at(p, 0.1) == doctest::Approx(1e-3 + 0.999 * std::exp(-1.0)));

  double prev = p.s0 + 1.0;
  for (auto sampling : {ParameterSampling::exact, ParameterSampling::euler}) {
    p.sampling = sampling;
    prev = p.s0 + 1.0;
    for (int l = 0; l <= 500; ++l) {
      const double s = parameter_at_step(p, l);
      // strict until s - se drops below the resolution of se itself
      if (s - p.se > 1e-15) CHECK(s < prev);
      CHECK(s <= prev);
      CHECK(s >= p.se);
      prev = s;
    }
  }
  p.sampling = ParameterSampling::euler;
  CHECK(parameter_at_step(p, 2) == doctest::Approx(1e-3 + 0.999 * 0.81));
}

TEST_CASE("stability margin and parameter validation") {
  FlowParams p;
  CHECK(stability_margin(p) == doctest::Approx(0.5));
  p.eps_t = 100.0;
  CHECK(stability_margin(p) == doctest::Approx(0.0));
  p.eps_t = 250.0;
  CHECK(stability_margin(p) == doctest::Approx(1.5));
  CHECK_THROWS_AS(p.validate(), ConfigError);
  CHECK_NOTHROW(p.validate(true));
  p.eps_t = 200.0;
  CHECK_THROWS_AS(p.validate(), ConfigError);

  FlowParams q;
  CHECK_NOTHROW(q.validate());
  q.s0 = 1e-4;
  CHECK_THROWS_AS(q.validate(), ConfigError);
  q = FlowParams{};
  q.dtau = 0.0;
  CHECK_THROWS_AS(q.validate(), ConfigError);
  q = FlowParams{};
  q.eps_s = -1.0;
  CHECK_THROWS_AS(q.validate(), ConfigError);
  q = FlowParams{};
  q.reg.hessian = 0.0;
  CHECK_THROWS_AS(q.validate(), ConfigError);
}

TEST_CASE("single flow step on the scalar toy") {
  const ScalarToy toy = identity_toy();
  const FlowParams p = toy_params();
  const FlowStep step = flow_step(toy, Vector::Constant(1, 2.0), 1.0, p);
  CHECK(step.y_dot[0] == doctest::Approx(-60.0));
  CHECK(step.y[0] == doctest::Approx(1.4));
  CHECK(step.diagnostics.residual_norm == doctest::Approx(1.0));
  CHECK(step.diagnostics.min_pivot == doctest::Approx(1.0));

  // an exact root with s = se does not move
  const FlowStep still = flow_step(toy, Vector::Constant(1, 0.0), 0.0, p);
  CHECK(still.y_dot[0] == 0.0);
  CHECK(still.y[0] == 0.0);
}

TEST_CASE("tracking error contracts by exactly one half") {
  const ScalarToy toy = identity_toy();
  FlowParams p = toy_params();
  p.sampling = ParameterSampling::euler;
  p.l_max = 40;
  const ContinuationResult run = run_continuation(toy, p, Vector::Constant(1, 2.0));
  REQUIRE(run.completed);
  REQUIRE(run.trace.size() == 41);
  const double e0 = run.trace[0].residual;
  CHECK(e0 == 1.0);
  for (int l = 1; l <= 40; ++l) {
    const double e = run.trace[static_cast<std::size_t>(l)].residual;
    CHECK(std::abs(e - e0 * std::pow(0.5, l)) <= 4e-16 * std::max(1.0, e));
  }
}

TEST_CASE("trace layout") {
  const ScalarToy toy = identity_toy();
  FlowParams p = toy_params();
  p.l_max = 25;
  const ContinuationResult run = run_continuation(toy, p, Vector::Constant(1, 3.0));
  REQUIRE(run.trace.size() == 26);
  for (std::size_t l = 0; l < run.trace.size(); ++l) {
    const auto& r = run.trace[l];
    CHECK(r.l == static_cast<int>(l));
    CHECK(r.tau == doctest::Approx(static_cast<double>(l) * p.dtau));
    CHECK(r.s == doctest::Approx(parameter_at(p, r.tau)));
    CHECK(r.scaled_residual == r.residual);
    if (l + 1 < run.trace.size()) CHECK(r.min_pivot == 1.0);
  }
  CHECK(std::isnan(run.trace.back().min_pivot));
  CHECK(run.trace.back().step_time_ms == 0.0);
}

TEST_CASE("singular matrix stops the run with a partial trace") {
  const ScalarToy toy([](double y) { return y; }, [](double y) { return y > 1.2 ? 1.0 : 0.0; });
  const FlowParams p = toy_params();
  CHECK_THROWS_AS(flow_step(toy, Vector::Constant(1, 1.0), 1.0, p), SingularKkt);

  const ContinuationResult run = run_continuation(toy, p, Vector::Constant(1, 2.0));
  CHECK_FALSE(run.completed);
  CHECK(run.failure.find("singular") != std::string::npos);
  CHECK(run.trace.size() >= 1);
  CHECK(run.trace.size() < static_cast<std::size_t>(p.l_max));
}

TEST_CASE("initialization on toys") {
  const FlowParams p = toy_params();
  const ScalarToy toy = identity_toy();
  const InitResult at_root = initialize(toy, p, Vector::Constant(1, 1.0));
  CHECK(at_root.iterations == 0);

  const ScalarToy cubic([](double y) { return y * y * y; }, [](double y) { return 3 * y * y; });
  const InitResult r = initialize(cubic, p, Vector::Constant(1, 3.0));
  CHECK(std::abs(r.y[0] - 1.0) < 1e-10);
  CHECK(r.scaled_residual <= 1e-10);

  const ScalarToy no_root([](double y) { return y * y + 2.0; }, [](double y) { return 2 * y; });
  CHECK_THROWS_AS(initialize(no_root, p, Vector::Constant(1, 1.0)), InitFailure);

  InitOptions few;
  few.max_iterations = 1;
  try {
    initialize(cubic, p, Vector::Constant(1, 3.0), few);
    FAIL("expected InitFailure");
  } catch (const InitFailure& e) {
    CHECK(e.iterations() == 1);
    CHECK(e.residual() > 1e-10);
  }
}

TEST_CASE("interior bounds keep the iterate strictly inside") {
  // root of y^3 - 1 from y = 3 with an upper bound the full step would cross
  const ScalarToy cubic([](double y) { return y * y * y; }, [](double y) { return 3 * y * y; });
  const FlowParams p = toy_params();
  InitOptions opts;
  opts.interior_lower = Vector::Constant(1, 0.5);
  opts.interior_upper = Vector::Constant(1, 3.5);
  const InitResult r = initialize(cubic, p, Vector::Constant(1, 0.6), opts);
  CHECK(std::abs(r.y[0] - 1.0) < 1e-10);

  CHECK_THROWS_AS(initialize(cubic, p, Vector::Constant(1, 0.5), opts), ConfigError);
  opts.interior_lower = Vector::Constant(2, 0.0);
  CHECK_THROWS_AS(initialize(cubic, p, Vector::Constant(1, 0.6), opts), DimensionMismatch);
}

TEST_CASE("interior lambda start for the primal gap") {
  auto prob = LcsOcpecProblem::vieira_benchmark();
  prob.K = {testing_support::vec({-1.0}), testing_support::vec({3.0})};
  auto nlp = discretize(prob, {4, 0.25}, Reformulation::primal_gap, GapConfig{});
  Vector z = Vector::Zero(nlp->n_z());
  InitOptions opts;
  apply_interior_lambda(*nlp, z, opts);
  for (Index n = 0; n < 4; ++n) {
    const Index i = nlp->layout(n).lambda;
    CHECK(z[i] == 1.0);
    CHECK(opts.interior_lower[i] == -1.0);
    CHECK(opts.interior_upper[i] == 3.0);
    CHECK(std::isinf(opts.interior_lower[nlp->layout(n).x]));
  }
}

TEST_CASE("benchmark run replays deterministically") {
  const auto prob = LcsOcpecProblem::vieira_benchmark();
  const DiscretizationConfig disc = DiscretizationConfig::uniform(1.0, 20);
  SolveOptions opts;
  opts.flow.l_max = 60;
  opts.init = driver_init_options(disc);
  const SolveResult a = solve_ocpec(prob, disc, Reformulation::d_gap, GapConfig{}, opts);
  const SolveResult b = solve_ocpec(prob, disc, Reformulation::d_gap, GapConfig{}, opts);
  REQUIRE(a.run.completed);
  REQUIRE(a.run.trace.size() == b.run.trace.size());
  for (std::size_t l = 0; l < a.run.trace.size(); ++l) {
    CHECK(a.run.trace[l].residual == b.run.trace[l].residual);
    CHECK(a.run.trace[l].s == b.run.trace[l].s);
  }
  CHECK(a.run.y == b.run.y);
}

TEST_CASE("residual floor follows the relaxation parameter") {
  const auto prob = LcsOcpecProblem::vieira_benchmark();
  const DiscretizationConfig disc = DiscretizationConfig::uniform(1.0, 100);
  SolveOptions opts;
  opts.init = driver_init_options(disc);
  const SolveResult r = solve_ocpec(prob, disc, Reformulation::d_gap, GapConfig{}, opts);
  REQUIRE(r.run.completed);
  const double decay = std::exp(-50.0 * opts.flow.eps_s * opts.flow.dtau);
  int checked = 0;
  for (std::size_t l = 100; l + 50 < r.run.trace.size(); ++l) {
    const double later = r.run.trace[l + 50].scaled_residual;
    if (later < 1e-12) break;
    const double predicted = r.run.trace[l].scaled_residual * decay;
    CHECK(later <= 10.0 * predicted);
    CHECK(later >= predicted / 10.0);
    ++checked;
  }
  CHECK(checked > 0);
}

}
