// Numeric substrate: matrix kernels, parameter store, optimizer, checkpoint
// round-trips, seeded randomness, and the reverse-mode tape checked against
// central finite differences.

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <string>
#include <vector>

#include "lanegnn/matrix.hpp"
#include "lanegnn/params.hpp"
#include "lanegnn/rng.hpp"
#include "lanegnn/tape.hpp"
#include "lanegnn/util.hpp"

using namespace lanegnn;

namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("dot and matvec match a plain accumulation oracle") {
  Rng rng(7);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 1 + static_cast<int>(rng.uniform_int(33));
    std::vector<double> a(n), b(n);
    for (double& x : a) x = rng.uniform(-2.0, 2.0);
    for (double& x : b) x = rng.uniform(-2.0, 2.0);
    double naive = 0.0;
    for (int i = 0; i < n; ++i) naive += a[i] * b[i];
    CHECK(dot(a.data(), b.data(), n) == doctest::Approx(naive).epsilon(1e-13));
  }

  Matrix w(5, 7);
  std::vector<double> x(7), bias(5), y(5);
  for (double& v : w.data) v = rng.uniform(-1.0, 1.0);
  for (double& v : x) v = rng.uniform(-1.0, 1.0);
  for (double& v : bias) v = rng.uniform(-1.0, 1.0);
  matvec(w, x.data(), bias.data(), y.data());
  for (int r = 0; r < 5; ++r) {
    double expect = bias[r];
    for (int c = 0; c < 7; ++c) expect += w.at(r, c) * x[c];
    CHECK(y[r] == doctest::Approx(expect).epsilon(1e-13));
  }
}

TEST_CASE("matvec_transpose_add and outer_add accumulate the adjoint products") {
  Matrix w(3, 4);
  int k = 1;
  for (double& v : w.data) v = k++;
  std::vector<double> g_out = {1.0, -2.0, 0.5};
  std::vector<double> g_in(4, 10.0);  // accumulation, not overwrite
  matvec_transpose_add(w, g_out.data(), g_in.data());
  for (int c = 0; c < 4; ++c) {
    double expect = 10.0;
    for (int r = 0; r < 3; ++r) expect += w.at(r, c) * g_out[r];
    CHECK(g_in[c] == doctest::Approx(expect));
  }

  Matrix wg(3, 4);
  std::vector<double> xv = {1.0, 2.0, 3.0, 4.0};
  outer_add(wg, g_out.data(), xv.data());
  outer_add(wg, g_out.data(), xv.data());  // accumulates
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 4; ++c)
      CHECK(wg.at(r, c) == doctest::Approx(2.0 * g_out[r] * xv[c]));
}

TEST_CASE("parameter store: add, find, grads, clipping") {
  ParameterStore store;
  const int a = store.add("a", 2, 3);
  const int b = store.add("b", 1, 4);
  CHECK(store.count() == 2);
  CHECK(store.total_parameters() == 10);
  CHECK(store.find("a") == a);
  CHECK(store.find("b") == b);
  CHECK(store.find("missing") == -1);
  CHECK(store.name(a) == "a");
  CHECK_THROWS_AS(store.add("a", 1, 1), std::logic_error);
  CHECK_THROWS_AS(store.add("bad", 0, 1), std::logic_error);

  // Fresh tensors are zero (values and grads).
  for (double v : store.flatten_values()) CHECK(v == 0.0);
  for (double g : store.flatten_grads()) CHECK(g == 0.0);

  store.grad(a).at(0, 0) = 3.0;
  store.grad(b).at(0, 1) = 4.0;
  CHECK(store.grad_norm() == doctest::Approx(5.0));

  store.clip_grad_norm(10.0);  // already under the cap: untouched
  CHECK(store.grad(a).at(0, 0) == 3.0);
  store.clip_grad_norm(1.0);
  CHECK(store.grad_norm() == doctest::Approx(1.0));
  CHECK(store.grad(a).at(0, 0) == doctest::Approx(0.6));
  CHECK(store.grad(b).at(0, 1) == doctest::Approx(0.8));

  store.zero_grads();
  CHECK(store.grad_norm() == 0.0);
}

TEST_CASE("flatten_values follows insertion order") {
  ParameterStore store;
  store.add("z_first", 1, 2);
  store.add("a_second", 1, 1);
  store.value(0).at(0, 0) = 1.0;
  store.value(0).at(0, 1) = 2.0;
  store.value(1).at(0, 0) = 3.0;
  const std::vector<double> flat = store.flatten_values();
  REQUIRE(flat.size() == 3);
  CHECK(flat[0] == 1.0);
  CHECK(flat[1] == 2.0);
  CHECK(flat[2] == 3.0);
}

TEST_CASE("adam: first step moves each weight by about lr in the gradient's direction") {
  ParameterStore store;
  store.add("w", 1, 3);
  store.value(0).row(0)[0] = 1.0;
  store.value(0).row(0)[1] = -2.0;
  store.value(0).row(0)[2] = 0.5;
  store.grad(0).row(0)[0] = 0.7;
  store.grad(0).row(0)[1] = -40.0;
  store.grad(0).row(0)[2] = 1e-3;

  AdamOptimizer opt(store);
  opt.step(store, 0.01);
  // With bias correction, step one is lr * g / (|g| + eps) ~= lr * sign(g).
  CHECK(store.value(0).row(0)[0] == doctest::Approx(1.0 - 0.01).epsilon(1e-5));
  CHECK(store.value(0).row(0)[1] == doctest::Approx(-2.0 + 0.01).epsilon(1e-5));
  CHECK(store.value(0).row(0)[2] == doctest::Approx(0.5 - 0.01).epsilon(1e-3));
}

TEST_CASE("adam: drives a quadratic to its minimum") {
  ParameterStore store;
  store.add("x", 1, 4);
  const std::vector<double> target = {1.5, -0.25, 3.0, 0.0};
  AdamOptimizer opt(store);
  for (int it = 0; it < 800; ++it) {
    store.zero_grads();
    for (int i = 0; i < 4; ++i) {
      store.grad(0).row(0)[i] = 2.0 * (store.value(0).row(0)[i] - target[i]);
    }
    opt.step(store, 0.05);
  }
  for (int i = 0; i < 4; ++i) {
    CHECK(store.value(0).row(0)[i] == doctest::Approx(target[i]).epsilon(1e-4));
  }
}

TEST_CASE("adam rejects a store whose layout changed") {
  ParameterStore store;
  store.add("w", 1, 1);
  AdamOptimizer opt(store);
  store.add("extra", 1, 1);
  CHECK_THROWS_AS(opt.step(store, 0.1), std::logic_error);
}

TEST_CASE("checkpoint save/load restores bit-identical values and metadata") {
  const std::string path = temp_path("lanegnn_test_ckpt.txt");
  ParameterStore a;
  Rng rng(11);
  a.add("m/weights", 3, 5);
  a.add("m/bias", 3, 1);
  for (int id = 0; id < a.count(); ++id)
    for (double& v : a.value(id).data) v = rng.uniform(-3.0, 3.0);
  // Include values that expose any text round-trip sloppiness.
  a.value(0).at(0, 0) = 0.1;
  a.value(0).at(0, 1) = -1.0 / 3.0;
  a.value(0).at(0, 2) = 1e-300;
  a.value(0).at(0, 3) = -12345.678901234567;
  a.save(path, {{"backbone", "gnn"}, {"update", "17"}});

  ParameterStore b;
  b.add("m/weights", 3, 5);
  b.add("m/bias", 3, 1);
  const auto meta = b.load(path);
  CHECK(meta.at("backbone") == "gnn");
  CHECK(meta.at("update") == "17");
  const auto va = a.flatten_values();
  const auto vb = b.flatten_values();
  REQUIRE(va.size() == vb.size());
  for (std::size_t i = 0; i < va.size(); ++i) CHECK(va[i] == vb[i]);

  const auto meta_only = read_checkpoint_meta(path);
  CHECK(meta_only.at("backbone") == "gnn");
  CHECK(meta_only.at("update") == "17");
  std::filesystem::remove(path);
}

TEST_CASE("checkpoint loader rejects malformed files") {
  const std::string path = temp_path("lanegnn_test_ckpt_bad.txt");
  ParameterStore store;
  store.add("w", 2, 2);

  SUBCASE("bad header") {
    std::ofstream(path) << "not a checkpoint\n";
    CHECK_THROWS_AS(store.load(path), ParseError);
    CHECK_THROWS_AS(read_checkpoint_meta(path), ParseError);
  }
  SUBCASE("unknown tensor") {
    ParameterStore other;
    other.add("w", 2, 2);
    other.add("stranger", 1, 1);
    other.save(path, {});
    CHECK_THROWS_WITH_AS(store.load(path),
                         doctest::Contains("does not exist"), ParseError);
  }
  SUBCASE("missing tensor") {
    ParameterStore small;
    small.add("w", 2, 2);
    small.save(path, {});
    ParameterStore big;
    big.add("w", 2, 2);
    big.add("w2", 1, 1);
    CHECK_THROWS_WITH_AS(big.load(path), doctest::Contains("missing tensor"),
                         ParseError);
  }
  SUBCASE("shape mismatch") {
    ParameterStore other;
    other.add("w", 2, 3);
    other.save(path, {});
    CHECK_THROWS_WITH_AS(store.load(path), doctest::Contains("shape mismatch"),
                         ParseError);
  }
  SUBCASE("truncated file") {
    store.save(path, {});
    std::ifstream in(path);
    std::string text((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
    in.close();
    text = text.substr(0, text.size() - 5);  // chop the "end" sentinel
    std::ofstream(path) << text;
    CHECK_THROWS_AS(store.load(path), ParseError);
  }
  SUBCASE("missing file") {
    CHECK_THROWS_AS(store.load(temp_path("lanegnn_no_such_file.txt")), ParseError);
  }
  std::filesystem::remove(path);
}

TEST_CASE("rng: determinism and distribution ranges") {
  Rng a(123), b(123), c(124);
  for (int i = 0; i < 100; ++i) {
    const std::uint64_t va = a.next_u64();
    CHECK(va == b.next_u64());
  }
  // A different seed diverges somewhere early.
  Rng a2(123);
  bool diverged = false;
  for (int i = 0; i < 100; ++i) {
    if (a2.next_u64() != c.next_u64()) diverged = true;
  }
  CHECK(diverged);

  Rng r(5);
  for (int i = 0; i < 10000; ++i) {
    const double u = r.uniform01();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
  for (int i = 0; i < 1000; ++i) {
    const double u = r.uniform(-3.0, 2.0);
    CHECK(u >= -3.0);
    CHECK(u < 2.0);
  }
  for (int i = 0; i < 1000; ++i) {
    CHECK(r.uniform_int(7) < 7);
  }
  CHECK_THROWS_AS(r.uniform_int(0), std::logic_error);
}

TEST_CASE("rng: normal has approximately standard moments") {
  Rng r(99);
  const int n = 100000;
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z = r.normal();
    sum += z;
    sq += z * z;
  }
  const double mean = sum / n;
  const double var = sq / n - mean * mean;
  CHECK(std::abs(mean) < 0.02);
  CHECK(std::abs(var - 1.0) < 0.03);
}

TEST_CASE("rng: shuffle is a seeded permutation") {
  std::vector<int> v(20);
  std::iota(v.begin(), v.end(), 0);
  std::vector<int> w = v;
  Rng r1(3), r2(3);
  r1.shuffle(v);
  r2.shuffle(w);
  CHECK(v == w);
  std::vector<int> sorted = v;
  std::sort(sorted.begin(), sorted.end());
  for (int i = 0; i < 20; ++i) CHECK(sorted[i] == i);
  // 20 elements virtually never shuffle to identity.
  std::vector<int> identity(20);
  std::iota(identity.begin(), identity.end(), 0);
  CHECK(v != identity);
}

TEST_CASE("derive_seed separates purposes and indices") {
  CHECK(derive_seed(1, "alpha", 0) == derive_seed(1, "alpha", 0));
  CHECK(derive_seed(1, "alpha", 0) != derive_seed(1, "beta", 0));
  CHECK(derive_seed(1, "alpha", 0) != derive_seed(1, "alpha", 1));
  CHECK(derive_seed(1, "alpha", 0) != derive_seed(2, "alpha", 0));
}

TEST_CASE("fnv1a64 matches published reference values") {
  CHECK(fnv1a64("") == 0xcbf29ce484222325ull);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cull);
  CHECK(fnv1a64("hello") == 0xa430d84680aabd0bull);
}

TEST_CASE("format_double round-trips doubles exactly") {
  Rng rng(17);
  for (int i = 0; i < 200; ++i) {
    const double x = (rng.uniform01() - 0.5) * std::pow(10.0, rng.uniform(-10, 10));
    CHECK(parse_double(format_double(x), "test") == x);
    CHECK(parse_double(format_double_hex(x), "test") == x);
  }
  CHECK_THROWS_AS(parse_double("12x", "test"), ParseError);
  CHECK_THROWS_AS(parse_double("", "test"), ParseError);
}

TEST_CASE("wrap_angle lands in (-pi, pi]") {
  CHECK(wrap_angle(0.0) == 0.0);
  CHECK(wrap_angle(kPi) == doctest::Approx(kPi));
  CHECK(wrap_angle(-kPi) == doctest::Approx(kPi));
  CHECK(wrap_angle(kPi + 0.1) == doctest::Approx(-kPi + 0.1));
  CHECK(wrap_angle(-kPi - 0.1) == doctest::Approx(kPi - 0.1));
  CHECK(wrap_angle(5.0 * kPi) == doctest::Approx(kPi));
  for (double a = -20.0; a <= 20.0; a += 0.317) {
    const double w = wrap_angle(a);
    CHECK(w > -kPi - 1e-12);
    CHECK(w <= kPi + 1e-12);
    CHECK(std::abs(std::sin(w) - std::sin(a)) < 1e-9);
    CHECK(std::abs(std::cos(w) - std::cos(a)) < 1e-9);
  }
}

// ---------------------------------------------------------------------------
// Tape: structural ops
// ---------------------------------------------------------------------------

TEST_CASE("tape: concat, slice, and sum route gradients to their sources") {
  ParameterStore store;
  GradTape tape(store);
  const ValueId a = tape.input({1.0, 2.0});
  const ValueId b = tape.input({3.0, 4.0, 5.0});
  const ValueId cat = tape.concat({a, b});
  CHECK(tape.value(cat) == std::vector<double>{1.0, 2.0, 3.0, 4.0, 5.0});

  const ValueId s = tape.slice(cat, 1, 3);
  CHECK(tape.value(s) == std::vector<double>{2.0, 3.0, 4.0});

  tape.backward(s, {10.0, 20.0, 30.0});
  CHECK(tape.grad(a) == std::vector<double>{0.0, 10.0});
  CHECK(tape.grad(b) == std::vector<double>{20.0, 30.0, 0.0});
}

TEST_CASE("tape: sum adds gradients to every term and empty sum is zeros") {
  ParameterStore store;
  GradTape tape(store);
  const ValueId a = tape.input({1.0, -1.0});
  const ValueId b = tape.input({2.0, 0.5});
  const ValueId c = tape.input({0.0, 3.0});
  const ValueId total = tape.sum({a, b, c}, 2);
  CHECK(tape.value(total) == std::vector<double>{3.0, 2.5});
  tape.backward(total, {1.0, -2.0});
  CHECK(tape.grad(a) == std::vector<double>{1.0, -2.0});
  CHECK(tape.grad(b) == std::vector<double>{1.0, -2.0});
  CHECK(tape.grad(c) == std::vector<double>{1.0, -2.0});

  GradTape tape2(store);
  const ValueId empty = tape2.sum({}, 4);
  CHECK(tape2.value(empty) == std::vector<double>(4, 0.0));
}

TEST_CASE("tape: usage errors") {
  ParameterStore store;
  GradTape tape(store);
  const ValueId a = tape.input({1.0});
  CHECK_THROWS_AS(tape.grad(a), std::logic_error);  // before backward
  tape.backward(a, {1.0});
  CHECK(tape.consumed());
  CHECK_THROWS_AS(tape.backward(a, {1.0}), std::logic_error);  // twice

  GradTape tape2(store);
  const ValueId b = tape2.input({1.0, 2.0});
  CHECK_THROWS_AS(tape2.backward(b, {1.0}), std::logic_error);  // seed width
  GradTape tape3(store);
  CHECK_THROWS_AS(tape3.concat({}), std::logic_error);
  const ValueId c = tape3.input({1.0, 2.0});
  CHECK_THROWS_AS(tape3.slice(c, 1, 5), std::logic_error);
  CHECK_THROWS_AS(tape3.zeros(0), std::logic_error);
}

TEST_CASE("tape: dense validates input width and rejects non-finite input") {
  ParameterStore store;
  Rng rng(1);
  const DenseLayer layer = add_dense(store, "l", 3, 2, Activation::relu, rng);
  GradTape tape(store);
  const ValueId bad = tape.input({1.0, 2.0});
  CHECK_THROWS_AS(tape.dense(layer, bad), std::logic_error);
  CHECK_THROWS_AS(tape.input({1.0, std::nan("")}), std::logic_error);
}

TEST_CASE("tape: relu takes the zero subgradient at exactly zero") {
  ParameterStore store;
  Rng rng(1);
  const DenseLayer layer = add_dense(store, "z", 2, 2, Activation::relu, rng);
  // Zero weights and bias: every pre-activation is exactly zero.
  for (double& v : store.value(layer.weights).data) v = 0.0;
  GradTape tape(store);
  const ValueId x = tape.input({1.0, 2.0});
  const ValueId y = tape.dense(layer, x);
  CHECK(tape.value(y) == std::vector<double>{0.0, 0.0});
  CHECK(tape.min_abs_relu_preactivation() == 0.0);
  tape.backward(y, {1.0, 1.0});
  for (double g : store.flatten_grads()) CHECK(g == 0.0);
  CHECK(tape.grad(x) == std::vector<double>{0.0, 0.0});
}

TEST_CASE("add_dense: weights honor the fan-based bound, biases start at zero") {
  ParameterStore store;
  Rng rng(42);
  const DenseLayer layer = add_dense(store, "x", 30, 20, Activation::relu, rng);
  const double lim = std::sqrt(6.0 / 50.0);
  const Matrix& w = store.value(layer.weights);
  CHECK(w.rows == 20);
  CHECK(w.cols == 30);
  double max_abs = 0.0;
  for (double v : w.data) max_abs = std::max(max_abs, std::abs(v));
  CHECK(max_abs <= lim);
  CHECK(max_abs > 0.5 * lim);  // actually spread out, not collapsed near zero
  for (double b : store.value(layer.bias).data) CHECK(b == 0.0);
  CHECK(store.find("x/weights") >= 0);
  CHECK(store.find("x/bias") >= 0);
}

// ---------------------------------------------------------------------------
// Tape: gradient oracle (central finite differences)
// ---------------------------------------------------------------------------

namespace {

struct Mlp {
  std::vector<DenseLayer> layers;
};

// loss(theta) = c . f(x; theta) for the fixed input and functional weights.
double mlp_loss(ParameterStore& store, const Mlp& mlp, const std::vector<double>& x,
                const std::vector<double>& c) {
  GradTape tape(store);
  ValueId v = tape.input(x);
  for (const DenseLayer& layer : mlp.layers) v = tape.dense(layer, v);
  const auto& out = tape.value(v);
  double loss = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) loss += c[i] * out[i];
  return loss;
}

}  // namespace

TEST_CASE("tape: parameter gradients match central finite differences") {
  const double h = 1e-5;
  const double tol = 1e-4;
  int configs_checked = 0;
  std::uint64_t seed = 1000;

  while (configs_checked < 5) {
    ParameterStore store;
    Rng rng(seed++);
    Mlp mlp;
    mlp.layers.push_back(add_dense(store, "l0", 6, 8, Activation::relu, rng));
    mlp.layers.push_back(add_dense(store, "l1", 8, 7, Activation::tanh_act, rng));
    mlp.layers.push_back(add_dense(store, "l2", 7, 3, Activation::identity, rng));
    std::vector<double> x(6), c(3);
    for (double& v : x) v = rng.uniform(-1.5, 1.5);
    for (double& v : c) v = rng.uniform(-1.0, 1.0);

    // Analytic gradient, with a kink guard: FD straddles the relu corner when
    // a pre-activation sits within h of zero, so such draws are discarded.
    GradTape tape(store);
    ValueId v = tape.input(x);
    for (const DenseLayer& layer : mlp.layers) v = tape.dense(layer, v);
    if (tape.min_abs_relu_preactivation() < 1e-3) continue;
    store.zero_grads();
    tape.backward(v, c);

    double worst = 0.0;
    for (int id = 0; id < store.count(); ++id) {
      Matrix& m = store.value(id);
      const Matrix& g = store.grad(id);
      for (int i = 0; i < m.size(); ++i) {
        const double keep = m.data[i];
        m.data[i] = keep + h;
        const double up = mlp_loss(store, mlp, x, c);
        m.data[i] = keep - h;
        const double down = mlp_loss(store, mlp, x, c);
        m.data[i] = keep;
        const double fd = (up - down) / (2.0 * h);
        const double denom = std::max({std::abs(fd), std::abs(g.data[i]), 1e-6});
        worst = std::max(worst, std::abs(fd - g.data[i]) / denom);
      }
    }
    CHECK(worst < tol);
    configs_checked += 1;
  }
  CHECK(configs_checked == 5);
}

TEST_CASE("tape: input gradients match finite differences") {
  ParameterStore store;
  Rng rng(2024);
  Mlp mlp;
  mlp.layers.push_back(add_dense(store, "l0", 4, 6, Activation::tanh_act, rng));
  mlp.layers.push_back(add_dense(store, "l1", 6, 2, Activation::identity, rng));
  std::vector<double> x = {0.3, -0.7, 1.1, 0.05};
  const std::vector<double> c = {0.8, -1.3};

  GradTape tape(store);
  ValueId in = tape.input(x);
  ValueId v = in;
  for (const DenseLayer& layer : mlp.layers) v = tape.dense(layer, v);
  tape.backward(v, c);
  const std::vector<double> analytic = tape.grad(in);

  const double h = 1e-6;
  for (std::size_t i = 0; i < x.size(); ++i) {
    std::vector<double> xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    const double up = mlp_loss(store, mlp, xp, c);
    const double down = mlp_loss(store, mlp, xm, c);
    const double fd = (up - down) / (2.0 * h);
    CHECK(analytic[i] == doctest::Approx(fd).epsilon(1e-5));
  }
}

TEST_CASE("tape: gradients of reused nodes accumulate across both uses") {
  // y = concat(x, x) summed: every x component should receive grad 2.
  ParameterStore store;
  GradTape tape(store);
  const ValueId x = tape.input({1.0, 2.0});
  const ValueId twice = tape.sum({x, x}, 2);
  CHECK(tape.value(twice) == std::vector<double>{2.0, 4.0});
  tape.backward(twice, {1.0, 1.0});
  CHECK(tape.grad(x) == std::vector<double>{2.0, 2.0});
}
