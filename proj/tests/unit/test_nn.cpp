#include <doctest.h>

#include <cmath>

#include "scalenet/nn.hpp"

using namespace scalenet;

TEST_CASE("adam first step") {
  Parameter p("w", Matrix(2, 3, 0.5));
  p.grad.fill(1.0);
  AdamState s;
  s.lr = 0.01;
  Parameter* ps[] = {&p};
  adam_step(ps, s);
  CHECK(s.step_count == 1);
  // m_hat = 1, v_hat = 1, so the step is lr / (1 + eps).
  for (double v : p.value.data()) CHECK(v == doctest::Approx(0.5 - 0.01 / (1.0 + 1e-8)).epsilon(1e-14));
}

TEST_CASE("adam with zero gradient leaves parameters alone") {
  Parameter p("w", Matrix(1, 4, 2.0));
  AdamState s;
  Parameter* ps[] = {&p};
  adam_step(ps, s);
  adam_step(ps, s);
  CHECK(p.value == Matrix(1, 4, 2.0));
  CHECK(s.step_count == 2);
}

TEST_CASE("adam descends a quadratic") {
  Parameter p("x", Matrix(1, 5, 1.0));
  AdamState s;
  s.lr = 0.05;
  Parameter* ps[] = {&p};
  for (int step = 0; step < 100; ++step) {
    p.zero_grad();
    Tape tape;
    tape.backward(ops::sum_squares(tape.parameter(p)));
    adam_step(ps, s);
  }
  double norm = 0.0;
  for (double v : p.value.data()) norm += v * v;
  CHECK(std::sqrt(norm) < 0.1);
}

TEST_CASE("adam rejects a non-positive rate") {
  Parameter p("w", Matrix(1, 1, 0.0));
  AdamState s;
  s.lr = 0.0;
  Parameter* ps[] = {&p};
  CHECK_THROWS_AS(adam_step(ps, s), std::invalid_argument);
}

TEST_CASE("glorot bounds and determinism") {
  Rng a(4), b(4);
  auto m = glorot_uniform(30, 20, a);
  const double limit = std::sqrt(6.0 / 50.0);
  for (double v : m.data()) CHECK(std::abs(v) <= limit);
  CHECK(m == glorot_uniform(30, 20, b));
}

TEST_CASE("parameter store snapshot and restore") {
  ParameterStore store;
  Rng rng(1);
  Linear lin(store, "lin", 3, 2, true, rng);
  BatchNorm bn(store, "bn", 2);
  CHECK(store.parameters().size() == 4);
  CHECK(store.num_scalars() == 3 * 2 + 2 + 2 + 2);
  auto snap = store.snapshot();
  const Matrix before = lin.weight().value;
  lin.weight().value.fill(9.0);
  {
    Tape tape;
    Var x = tape.constant(Matrix(5, 3, 1.0));
    (void)bn(tape, lin(tape, x), true);  // moves the running statistics
  }
  store.restore(snap);
  CHECK(lin.weight().value == before);
  CHECK(store.snapshot().buffers[0].running_mean == snap.buffers[0].running_mean);
}

TEST_CASE("finite difference checker") {
  SUBCASE("quadratic") {
    Parameter p("x", Matrix(2, 2));
    p.value.storage() = {0.3, -1.2, 2.0, 0.7};
    Parameter* ps[] = {&p};
    auto r = finite_diff_check([&](Tape& t) { return ops::sum_squares(t.parameter(p)); }, ps);
    CHECK(r.max_relative_error < 1e-8);
    CHECK(r.entries_checked == 4);
  }
  SUBCASE("a corrupted gradient is caught") {
    Parameter p("x", Matrix(1, 3, 0.8));
    Parameter* ps[] = {&p};
    auto broken = [&](Tape& t) {
      Var x = t.parameter(p);
      Matrix v = x.value();
      double s = 0.0;
      for (double e : v.data()) s += e * e;
      // Forward is sum(x^2), backward claims 3x.
      return t.record(Matrix(1, 1, s), {x}, [v](const Matrix& g, std::span<Matrix*> d) {
        for (std::size_t i = 0; i < v.size(); ++i) d[0]->storage()[i] += 3.0 * v.data()[i] * g(0, 0);
      });
    };
    CHECK(finite_diff_check(broken, ps).max_relative_error > 0.1);
  }
  SUBCASE("non-deterministic forward is detected") {
    Parameter p("x", Matrix(1, 2, 1.0));
    Parameter* ps[] = {&p};
    int calls = 0;
    auto flaky = [&](Tape& t) { return ops::scale(ops::sum_squares(t.parameter(p)), 1.0 + ++calls); };
    CHECK_THROWS_AS(finite_diff_check(flaky, ps), std::runtime_error);
  }
}
