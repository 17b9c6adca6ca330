#include <doctest.h>

#include <random>
#include <set>

#include "gapflow/errors.hpp"
#include "gapflow/ocpec.hpp"
#include "support.hpp"

using namespace gapflow;
using testing_support::vec;

namespace {

std::unique_ptr<LcsParameterizedNlp> benchmark_nlp(Index stages, Reformulation r) {
  return discretize(LcsOcpecProblem::vieira_benchmark(),
                    DiscretizationConfig::uniform(1.0, stages), r, GapConfig{});
}

double rel_err(const DenseMatrix& a, const DenseMatrix& f) {
  return (a - f).cwiseAbs().maxCoeff() / std::max(1.0, f.cwiseAbs().maxCoeff());
}

// Stage that owns each row of h (or c), from the public layout.
std::vector<Index> row_stages(const LcsParameterizedNlp& nlp, bool equality) {
  const Index rows = equality ? nlp.n_h() : nlp.n_c();
  std::vector<Index> owner(static_cast<std::size_t>(rows), -1);
  const Index n_x = nlp.problem().nx(), n_l = nlp.problem().nlambda();
  for (Index n = 0; n < nlp.stage_count(); ++n) {
    const auto st = nlp.layout(n);
    auto mark = [&](Index begin, Index count) {
      for (Index r = begin; r < begin + count; ++r) owner[static_cast<std::size_t>(r)] = n;
    };
    if (equality) {
      mark(st.h_dynamics, n_x);
      mark(st.h_vi, n_l);
    } else {
      mark(st.c_set, nlp.set_rows_per_stage());
      mark(st.c_gap, 1);
    }
  }
  return owner;
}

}  // namespace

TEST_SUITE("ocpec") {

TEST_CASE("benchmark sizes for both reformulations") {
  auto d = benchmark_nlp(100, Reformulation::d_gap);
  CHECK(d->n_z() == 500);
  CHECK(d->n_h() == 300);
  CHECK(d->n_c() == 100);
  CHECK(d->n_z() + d->n_h() + 2 * d->n_c() == 1000);

  auto p = benchmark_nlp(100, Reformulation::primal_gap);
  CHECK(p->n_z() == 500);
  CHECK(p->n_h() == 300);
  CHECK(p->n_c() == 200);
  CHECK(p->set_rows_per_stage() == 1);
}

TEST_CASE("zero dynamics single stage equality block") {
  auto prob = testing_support::zero_dynamics_problem();
  prob.C = DenseMatrix::Constant(1, 1, 2.0);
  prob.D = DenseMatrix::Constant(1, 1, 3.0);
  prob.G = DenseMatrix::Constant(1, 1, 5.0);
  auto nlp = discretize(prob, {1, 1.0}, Reformulation::d_gap, GapConfig{});
  const auto st = nlp->layout(0);
  Vector z(4);
  z[st.x] = 0.7;
  z[st.u] = -0.3;
  z[st.lambda] = 0.2;
  z[st.eta] = 1.1;
  const auto con = nlp->eval_constraints(z, 0.0);
  CHECK(con.h[st.h_dynamics] == doctest::Approx(-0.7));
  CHECK(con.h[st.h_vi] == doctest::Approx(2.0 * 0.7 + 3.0 * -0.3 + 5.0 * 0.2 - 1.1));
}

TEST_CASE("objective examples and gradient") {
  LcsOcpecProblem prob = LcsOcpecProblem::vieira_benchmark();
  auto nlp = discretize(prob, {1, 1.0}, Reformulation::d_gap, GapConfig{});
  Vector z = Vector::Zero(nlp->n_z());
  auto zero = nlp->eval_objective(z);
  CHECK(zero.value == 0.0);
  CHECK(zero.gradient.isZero());

  z.segment(nlp->layout(0).x, 2) = vec({1.0, 2.0});
  CHECK(nlp->eval_objective(z).value == doctest::Approx(5.0));

  auto big = benchmark_nlp(4, Reformulation::primal_gap);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> unif(-3.0, 3.0);
  for (int k = 0; k < 100; ++k) {
    Vector y(big->n_z());
    for (Index i = 0; i < y.size(); ++i) y[i] = unif(rng);
    const auto f = [&](const Vector& v) {
      return Vector::Constant(1, big->eval_objective(v).value);
    };
    const DenseMatrix fd = fd_jacobian(f, y, 1e-6);
    CHECK(rel_err(big->eval_objective(y).gradient.transpose(), fd) < 1e-6);
  }
}

TEST_CASE("simulated DVI trajectory is feasible and gap rows shift with s") {
  for (auto r : {Reformulation::d_gap, Reformulation::primal_gap}) {
    CAPTURE(to_string(r));
    auto nlp = benchmark_nlp(100, r);
    const Vector z = testing_support::simulate_feasible(
        *nlp, [](Index n) { return 0.5 * std::sin(0.1 * static_cast<double>(n)); });

    // both branches of the complementarity occur along this trajectory
    int active = 0, inactive = 0;
    for (Index n = 0; n < 100; ++n) (z[nlp->layout(n).lambda] > 0.0 ? active : inactive)++;
    CHECK(active > 0);
    CHECK(inactive > 0);

    const auto c0 = nlp->eval_constraints(z, 0.0, false);
    const auto c1 = nlp->eval_constraints(z, 1e-3, false);
    CHECK(c0.h.cwiseAbs().maxCoeff() < 1e-12);
    for (Index n = 0; n < 100; ++n) {
      const auto st = nlp->layout(n);
      CHECK(std::abs(c0.c[st.c_gap]) < 1e-12);
      CHECK(c1.c[st.c_gap] == doctest::Approx(1e-3).epsilon(1e-9));
      if (r == Reformulation::primal_gap) CHECK(c0.c[st.c_set] >= 0.0);
    }
  }
}

TEST_CASE("s-gradient has a single one per gap row") {
  for (auto r : {Reformulation::d_gap, Reformulation::primal_gap}) {
    auto nlp = benchmark_nlp(10, r);
    const Vector g = nlp->constraint_s_gradient();
    REQUIRE(g.size() == nlp->n_c());
    int ones = 0;
    for (Index i = 0; i < g.size(); ++i) {
      if (nlp->is_gap_row(i)) {
        CHECK(g[i] == 1.0);
        ++ones;
      } else {
        CHECK(g[i] == 0.0);
      }
    }
    CHECK(ones == 10);

    // c is affine in s
    const Vector z = Vector::Random(nlp->n_z());
    const Vector diff = nlp->eval_constraints(z, 0.7, false).c -
                        nlp->eval_constraints(z, 0.2, false).c;
    CHECK((diff - 0.5 * g).cwiseAbs().maxCoeff() < 1e-14);
  }
}

TEST_CASE("constraint Jacobians match central differences away from kinks") {
  std::mt19937_64 rng(11);
  for (auto r : {Reformulation::d_gap, Reformulation::primal_gap}) {
    auto nlp = benchmark_nlp(3, r);
    const auto cs = r == Reformulation::d_gap ? std::initializer_list<double>{0.5, 2.0}
                                              : std::initializer_list<double>{1.0};
    for (int k = 0; k < 50; ++k) {
      const Vector z = testing_support::random_nonkink_z(*nlp, rng, cs);
      const auto con = nlp->eval_constraints(z, 0.3);
      const auto fh = [&](const Vector& v) { return nlp->eval_constraints(v, 0.3, false).h; };
      const auto fc = [&](const Vector& v) { return nlp->eval_constraints(v, 0.3, false).c; };
      CHECK(rel_err(DenseMatrix(con.jac_h), fd_jacobian(fh, z, 1e-6)) < 1e-5);
      CHECK(rel_err(DenseMatrix(con.jac_c), fd_jacobian(fc, z, 1e-6)) < 1e-5);
    }
  }
}

TEST_CASE("Lagrangian Hessian matches differences of the Lagrangian gradient") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> normal;
  for (auto r : {Reformulation::d_gap, Reformulation::primal_gap}) {
    auto nlp = benchmark_nlp(3, r);
    const auto cs = r == Reformulation::d_gap ? std::initializer_list<double>{0.5, 2.0}
                                              : std::initializer_list<double>{1.0};
    for (int k = 0; k < 30; ++k) {
      const Vector z = testing_support::random_nonkink_z(*nlp, rng, cs);
      Vector gh(nlp->n_h()), gc(nlp->n_c());
      for (Index i = 0; i < gh.size(); ++i) gh[i] = normal(rng);
      for (Index i = 0; i < gc.size(); ++i) gc[i] = normal(rng);
      const auto grad_l = [&](const Vector& v) {
        const auto con = nlp->eval_constraints(v, 0.1);
        return Vector(nlp->eval_objective(v).gradient + con.jac_h.transpose() * gh -
                      con.jac_c.transpose() * gc);
      };
      const auto trip = nlp->lagrangian_hessian(z, gh, gc);
      const DenseMatrix h = SparseSquareMatrix(nlp->n_z(), trip).to_dense();
      CHECK(rel_err(h, fd_jacobian(grad_l, z, 1e-6)) < 1e-5);
    }
  }
}

TEST_CASE("stage locality of the constraint Jacobians") {
  for (auto r : {Reformulation::d_gap, Reformulation::primal_gap}) {
    auto nlp = benchmark_nlp(6, r);
    const Vector z = Vector::Random(nlp->n_z());
    const auto con = nlp->eval_constraints(z, 0.5);
    const Index w = nlp->stage_width();
    for (bool equality : {true, false}) {
      const CscMatrix& jac = equality ? con.jac_h : con.jac_c;
      const auto owner = row_stages(*nlp, equality);
      for (Index col = 0; col < jac.outerSize(); ++col) {
        const Index stage = col / w;
        for (CscMatrix::InnerIterator it(jac, col); it; ++it) {
          const Index rs = owner[static_cast<std::size_t>(it.row())];
          CHECK((rs == stage || rs == stage + 1));
        }
      }
    }

    // a perturbation of stage 2 only moves rows of stages 2 and 3
    Vector zp = z;
    zp.segment(2 * w, w).array() += 0.1;
    const auto con_p = nlp->eval_constraints(zp, 0.5, false);
    const auto h_owner = row_stages(*nlp, true);
    for (Index i = 0; i < nlp->n_h(); ++i) {
      if (con_p.h[i] != con.h[i]) {
        const Index s = h_owner[static_cast<std::size_t>(i)];
        CHECK((s == 2 || s == 3));
      }
    }
    const auto c_owner = row_stages(*nlp, false);
    for (Index i = 0; i < nlp->n_c(); ++i) {
      if (con_p.c[i] != con.c[i]) CHECK(c_owner[static_cast<std::size_t>(i)] == 2);
    }
  }
}

TEST_CASE("pack and unpack") {
  auto nlp = benchmark_nlp(5, Reformulation::d_gap);
  const Vector z = Vector::Random(nlp->n_z());
  const Trajectory t = nlp->unpack(z);
  CHECK(t.x.rows() == 5);
  CHECK(t.x.cols() == 2);
  CHECK(t.u.cols() == 1);
  for (Index k = 0; k < 5; ++k) {
    CHECK(t.time[k] == doctest::Approx(0.2 * static_cast<double>(k + 1)));
    CHECK(t.x(k, 1) == z[nlp->layout(k).x + 1]);
    CHECK(t.eta(k, 0) == z[nlp->layout(k).eta]);
  }
  CHECK(nlp->pack(t) == z);
}

TEST_CASE("invalid problems and configs") {
  const auto good = LcsOcpecProblem::vieira_benchmark();
  const GapConfig gap;

  auto bad = good;
  bad.B = DenseMatrix::Zero(3, 1);
  CHECK_THROWS_AS(discretize(bad, {100, 0.01}, Reformulation::d_gap, gap), DimensionMismatch);

  bad = good;
  bad.x0 = Vector::Zero(3);
  CHECK_THROWS_AS(discretize(bad, {100, 0.01}, Reformulation::d_gap, gap), DimensionMismatch);

  bad = good;
  bad.Q(0, 0) = -1.0;
  CHECK_THROWS_AS(discretize(bad, {100, 0.01}, Reformulation::d_gap, gap), ConfigError);

  bad = good;
  bad.Q(0, 1) = 0.5;
  CHECK_THROWS_AS(discretize(bad, {100, 0.01}, Reformulation::d_gap, gap), ConfigError);

  CHECK_THROWS_AS(discretize(good, {0, 0.01}, Reformulation::d_gap, gap), ConfigError);
  CHECK_THROWS_AS(discretize(good, {100, -0.01}, Reformulation::d_gap, gap), ConfigError);
  CHECK_THROWS_AS(discretize(good, {100, 0.02}, Reformulation::d_gap, gap), ConfigError);
  CHECK_THROWS_AS(DiscretizationConfig::uniform(1.0, 0), ConfigError);

  GapConfig bad_gap;
  bad_gap.b = 0.1;
  CHECK_THROWS_AS(discretize(good, {100, 0.01}, Reformulation::d_gap, bad_gap), ConfigError);

  auto nlp = benchmark_nlp(2, Reformulation::d_gap);
  CHECK_THROWS_AS(nlp->eval_objective(Vector::Zero(3)), DimensionMismatch);
  CHECK_THROWS_AS(nlp->eval_constraints(Vector::Zero(3), 0.0), DimensionMismatch);
}

TEST_CASE("reformulation names") {
  CHECK(parse_reformulation("primal-gap") == Reformulation::primal_gap);
  CHECK(parse_reformulation("d-gap") == Reformulation::d_gap);
  CHECK(to_string(Reformulation::d_gap) == "d-gap");
  CHECK_THROWS_AS(parse_reformulation("dgap"), ConfigError);
}

}
