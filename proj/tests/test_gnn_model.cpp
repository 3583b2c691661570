#include "doctest.h"

#include <cmath>
#include <cstdio>

#include "gduq/checkpoint.hpp"
#include "gduq/errors.hpp"
#include "gduq/model.hpp"
#include "gduq/rng.hpp"
#include "gduq/tensor.hpp"

using namespace gduq;

namespace {

Matrix random_matrix(std::size_t rows, std::size_t cols, Rng& rng, double lo = -1.0,
                     double hi = 1.0) {
  Matrix m(rows, cols, 0.0);
  for (auto& v : m.data) v = rng.uniform(lo, hi);
  return m;
}

Graph toy_graph(const Matrix& x, const Matrix& a, int label = 0) {
  Graph g;
  g.node_features = x;
  g.adjacency = a;
  g.graph_label = label;
  g.graph_id = "toy";
  return g;
}

ModelSpec gin_spec(int layers, int hidden, int input, int classes = 2) {
  ModelSpec spec;
  spec.backbone = Backbone::GIN;
  spec.num_mp_layers = layers;
  spec.hidden_dim = hidden;
  spec.mlp_head_layers = 2;
  spec.num_classes = classes;
  spec.task = TaskKind::GraphClassification;
  spec.input_dim = input;
  return spec;
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace

TEST_SUITE("gnn-model") {

TEST_CASE("gcn on an isolated node with identity weights is relu") {
  const std::size_t d = 3;
  const Tensor x = Tensor::from_data(1, d, {-0.5, 0.25, 2.0});
  const Matrix a(1, 1, 0.0);
  const Tensor norm = Tensor::from_matrix(gcn_normalized_adjacency(a));
  const Tensor out = gcn_layer(x, norm, Tensor::identity(d), Tensor::zeros(1, d));
  CHECK(out(0, 0) == 0.0);
  CHECK(out(0, 1) == 0.25);
  CHECK(out(0, 2) == 2.0);
}

TEST_CASE("gcn gives identical outputs on an automorphic pair") {
  Rng rng(4);
  Matrix x(2, 3, 0.0);
  const std::vector<double> feat = {0.3, -1.2, 0.9};
  x.set_row(0, feat);
  x.set_row(1, feat);
  Matrix a(2, 2, 0.0);
  a(0, 1) = a(1, 0) = 1.0;
  const Tensor norm = Tensor::from_matrix(gcn_normalized_adjacency(a));
  const Matrix w = random_matrix(3, 4, rng);
  const Matrix b = random_matrix(1, 4, rng);
  const Tensor out =
      gcn_layer(Tensor::from_matrix(x), norm, Tensor::from_matrix(w), Tensor::from_matrix(b));
  for (std::size_t j = 0; j < 4; ++j) CHECK(out(0, j) == out(1, j));
}

TEST_CASE("gcn matches a dense hand evaluation on a random 5-node graph") {
  Rng rng(8);
  const std::size_t n = 5, din = 3, dout = 4;
  const Matrix x = random_matrix(n, din, rng);
  Matrix a(n, n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (rng.bernoulli(0.5)) a(i, j) = a(j, i) = 1.0;
  const Matrix w = random_matrix(din, dout, rng);
  const Matrix b = random_matrix(1, dout, rng);

  // Oracle: direct dense evaluation of relu(D^-1/2 A_hat D^-1/2 X W + b).
  Matrix hat = a;
  for (std::size_t i = 0; i < n; ++i) hat(i, i) = 1.0;
  std::vector<double> deg(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) deg[i] += hat(i, j);
  Matrix expected(n, dout, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t o = 0; o < dout; ++o) {
      double acc = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        double msg = 0.0;
        for (std::size_t c = 0; c < din; ++c) msg += x(j, c) * w(c, o);
        acc += hat(i, j) / std::sqrt(deg[i] * deg[j]) * msg;
      }
      expected(i, o) = std::max(0.0, acc + b(0, o));
    }

  const Tensor out = gcn_layer(Tensor::from_matrix(x),
                               Tensor::from_matrix(gcn_normalized_adjacency(a)),
                               Tensor::from_matrix(w), Tensor::from_matrix(b));
  CHECK(max_abs_diff(out.values(), expected.data) < 1e-12);
}

TEST_CASE("gin with zero adjacency and identity mlp is the identity on nonnegative input") {
  Rng rng(6);
  const std::size_t n = 4, d = 3;
  const Matrix x = random_matrix(n, d, rng, 0.0, 2.0);
  const Matrix a(n, n, 0.0);
  const Tensor out = gin_layer(Tensor::from_matrix(x), Tensor::from_matrix(a),
                               Tensor::zeros(1, 1), Tensor::identity(d), Tensor::zeros(1, d),
                               Tensor::identity(d), Tensor::zeros(1, d));
  CHECK(max_abs_diff(out.values(), x.data) == 0.0);
}

TEST_CASE("gin star center aggregates the leaf sum") {
  // 4-node star, center 0. With identity MLP and eps=0 the center row is
  // relu(x_center + sum of leaves).
  Matrix x(4, 2, 0.0);
  x.set_row(0, {0.5, 1.0});
  x.set_row(1, {1.0, 2.0});
  x.set_row(2, {0.25, 0.5});
  x.set_row(3, {2.0, 0.125});
  Matrix a(4, 4, 0.0);
  for (std::size_t leaf = 1; leaf < 4; ++leaf) a(0, leaf) = a(leaf, 0) = 1.0;
  const Tensor out = gin_layer(Tensor::from_matrix(x), Tensor::from_matrix(a),
                               Tensor::zeros(1, 1), Tensor::identity(2), Tensor::zeros(1, 2),
                               Tensor::identity(2), Tensor::zeros(1, 2));
  CHECK(out(0, 0) == doctest::Approx(0.5 + 1.0 + 0.25 + 2.0).epsilon(1e-15));
  CHECK(out(0, 1) == doctest::Approx(1.0 + 2.0 + 0.5 + 0.125).epsilon(1e-15));
  // Leaves see only themselves plus the center.
  CHECK(out(1, 0) == doctest::Approx(1.0 + 0.5).epsilon(1e-15));
}

TEST_CASE("gin is equivariant under node permutation") {
  Rng rng(12);
  const std::size_t n = 6, d = 3;
  const Matrix x = random_matrix(n, d, rng);
  Matrix a(n, n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (rng.bernoulli(0.4)) a(i, j) = a(j, i) = 1.0;
  const Matrix w1 = random_matrix(d, d, rng), w2 = random_matrix(d, d, rng);
  const Matrix b1 = random_matrix(1, d, rng), b2 = random_matrix(1, d, rng);
  const Tensor eps = Tensor::from_data(1, 1, {0.3});

  const auto run = [&](const Matrix& xm, const Matrix& am) {
    return gin_layer(Tensor::from_matrix(xm), Tensor::from_matrix(am), eps,
                     Tensor::from_matrix(w1), Tensor::from_matrix(b1), Tensor::from_matrix(w2),
                     Tensor::from_matrix(b2));
  };
  const Tensor base = run(x, a);

  Rng prng(99);
  const auto perm = prng.permutation(n);
  Matrix px(n, d, 0.0), pa(n, n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    px.set_row(i, x.row(perm[i]));
    for (std::size_t j = 0; j < n; ++j) pa(i, j) = a(perm[i], perm[j]);
  }
  const Tensor permuted = run(px, pa);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j)
      CHECK(permuted(i, j) == doctest::Approx(base(perm[i], j)).epsilon(1e-12));
}

TEST_CASE("readout of a single node returns its features") {
  const Tensor x = Tensor::from_data(1, 3, {0.1, -2.0, 5.0});
  const Tensor g = readout_mean(x);
  CHECK(g(0, 0) == 0.1);
  CHECK(g(0, 1) == -2.0);
  CHECK(g(0, 2) == 5.0);
}

TEST_CASE("readout of v and -v is zero") {
  Matrix x(2, 3, 0.0);
  x.set_row(0, {1.0, -2.0, 3.0});
  x.set_row(1, {-1.0, 2.0, -3.0});
  const Tensor g = readout_mean(Tensor::from_matrix(x));
  for (std::size_t j = 0; j < 3; ++j) CHECK(g(0, j) == 0.0);
}

TEST_CASE("readout matches per-column sums on a random 6x3 matrix") {
  Rng rng(3);
  const Matrix x = random_matrix(6, 3, rng);
  const Tensor g = readout_mean(Tensor::from_matrix(x));
  for (std::size_t j = 0; j < 3; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < 6; ++i) s += x(i, j);
    CHECK(g(0, j) == doctest::Approx(s / 6.0).epsilon(1e-15));
  }
}

TEST_CASE("block head weights make the readout-anchored model match the unanchored one") {
  Rng rng(44);
  ModelSpec plain = gin_spec(2, 5, 3, 4);
  plain.mlp_head_layers = 1;
  Params params = init_params(plain, rng);

  ModelSpec anchored = plain;
  anchored.anchoring.kind = AnchoringMode::Kind::Readout;
  Params anchored_params;
  for (const auto& [name, t] : params.items)
    if (name.rfind("mp", 0) == 0)
      anchored_params.items.emplace_back(name, Tensor::from_data(t.rows(), t.cols(), t.values()));

  const Tensor& w = params.at("head1.w");  // hidden x q
  const std::size_t h = w.rows(), q = w.cols();

  Matrix adj(5, 5, 0.0);
  adj(0, 1) = adj(1, 0) = 1.0;
  adj(2, 3) = adj(3, 2) = 1.0;
  const Graph g = toy_graph(random_matrix(5, 3, rng), adj);
  const Tensor plain_logits = forward_logits(plain, params, g);

  SUBCASE("residual and anchor blocks both equal the unanchored head") {
    // [g - c || c] [W; W] = g W for every anchor.
    std::vector<double> stacked(2 * h * q);
    for (std::size_t r = 0; r < h; ++r)
      for (std::size_t c = 0; c < q; ++c) {
        stacked[r * q + c] = w(r, c);
        stacked[(h + r) * q + c] = w(r, c);
      }
    anchored_params.items.emplace_back("head1.w",
                                       Tensor::from_data(2 * h, q, std::move(stacked)));
    anchored_params.items.emplace_back("head1.b",
                                       Tensor::from_data(1, q, params.at("head1.b").values()));
    const Matrix anchor = random_matrix(1, h, rng);
    const Tensor anchored_logits = forward_logits(anchored, anchored_params, g, &anchor);
    CHECK(max_abs_diff(anchored_logits.values(), plain_logits.values()) < 1e-12);
  }

  SUBCASE("zero anchor block with a zero anchor") {
    std::vector<double> stacked(2 * h * q, 0.0);
    for (std::size_t r = 0; r < h; ++r)
      for (std::size_t c = 0; c < q; ++c) stacked[r * q + c] = w(r, c);
    anchored_params.items.emplace_back("head1.w",
                                       Tensor::from_data(2 * h, q, std::move(stacked)));
    anchored_params.items.emplace_back("head1.b",
                                       Tensor::from_data(1, q, params.at("head1.b").values()));
    const Matrix anchor(1, h, 0.0);
    const Tensor anchored_logits = forward_logits(anchored, anchored_params, g, &anchor);
    CHECK(max_abs_diff(anchored_logits.values(), plain_logits.values()) < 1e-12);
  }
}

TEST_CASE("hidden-layer anchoring with the prefix as its own anchor sees [0 || prefix]") {
  Rng rng(15);
  ModelSpec spec = gin_spec(3, 4, 3);
  spec.anchoring.kind = AnchoringMode::Kind::HiddenLayer;
  spec.anchoring.layer = 2;
  const Params params = init_params(spec, rng);
  Matrix adj(4, 4, 0.0);
  adj(0, 1) = adj(1, 0) = 1.0;
  adj(1, 2) = adj(2, 1) = 1.0;
  const Graph g = toy_graph(random_matrix(4, 3, rng), adj);

  const Tensor prefix = mp_prefix(spec, params, g, 1);
  const Matrix self_anchor = prefix.to_matrix();
  const Tensor via_forward = forward_from_hidden(spec, params, g, prefix, self_anchor);

  // Manual composition with an explicit [0 || prefix] input to layer 2.
  Tensor h = concat_cols(sub(prefix, Tensor::from_matrix(self_anchor)),
                         Tensor::from_matrix(self_anchor));
  for (std::size_t i = 0; i < h.rows(); ++i) {
    for (std::size_t j = 0; j < prefix.cols(); ++j) CHECK(h(i, j) == 0.0);
    for (std::size_t j = 0; j < prefix.cols(); ++j)
      CHECK(h(i, prefix.cols() + j) == prefix(i, j));
  }
  const Tensor adj_t = Tensor::from_matrix(g.adjacency);
  for (int layer = 2; layer <= 3; ++layer) {
    const std::string base = "mp" + std::to_string(layer);
    h = gin_layer(h, adj_t, params.at(base + ".eps"), params.at(base + ".mlp1.w"),
                  params.at(base + ".mlp1.b"), params.at(base + ".mlp2.w"),
                  params.at(base + ".mlp2.b"));
  }
  const Tensor manual = head_forward(spec, params, readout_mean(h));
  CHECK(max_abs_diff(via_forward.values(), manual.values()) == 0.0);
}

TEST_CASE("node task forward on a 1-node graph has shape 1 x q") {
  Rng rng(66);
  ModelSpec spec = gin_spec(2, 4, 3, 5);
  spec.task = TaskKind::NodeClassification;
  spec.anchoring.kind = AnchoringMode::Kind::NodeFeature;
  const Params params = init_params(spec, rng);
  Graph g;
  g.node_features = random_matrix(1, 3, rng);
  g.adjacency = Matrix(1, 1, 0.0);
  g.node_labels = std::vector<int>{2};
  g.graph_id = "one";
  const Matrix anchor = random_matrix(1, 3, rng);
  const Tensor logits = forward_logits(spec, params, g, &anchor);
  CHECK(logits.rows() == 1);
  CHECK(logits.cols() == 5);
}

TEST_CASE("graph forward is invariant to consistent relabeling of nodes and anchors") {
  Rng rng(31);
  ModelSpec spec = gin_spec(2, 4, 3);
  spec.anchoring.kind = AnchoringMode::Kind::NodeFeature;
  const Params params = init_params(spec, rng);
  const std::size_t n = 6;
  const Matrix x = random_matrix(n, 3, rng);
  Matrix a(n, n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (rng.bernoulli(0.5)) a(i, j) = a(j, i) = 1.0;
  const Matrix anchor = random_matrix(n, 3, rng);
  const Tensor base = forward_logits(spec, params, toy_graph(x, a), &anchor);

  Rng prng(7);
  const auto perm = prng.permutation(n);
  Matrix px(n, 3, 0.0), pa(n, n, 0.0), pc(n, 3, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    px.set_row(i, x.row(perm[i]));
    pc.set_row(i, anchor.row(perm[i]));
    for (std::size_t j = 0; j < n; ++j) pa(i, j) = a(perm[i], perm[j]);
  }
  const Tensor permuted = forward_logits(spec, params, toy_graph(px, pa), &pc);
  CHECK(max_abs_diff(base.values(), permuted.values()) < 1e-12);
}

TEST_CASE("unanchored forward is bitwise deterministic") {
  Rng rng(52);
  const ModelSpec spec = gin_spec(3, 6, 4);
  const Params params = init_params(spec, rng);
  Matrix adj(7, 7, 0.0);
  for (std::size_t i = 0; i + 1 < 7; ++i) adj(i, i + 1) = adj(i + 1, i) = 1.0;
  const Graph g = toy_graph(random_matrix(7, 4, rng), adj);
  const Tensor a = forward_logits(spec, params, g);
  const Tensor b = forward_logits(spec, params, g);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a.values()[i] == b.values()[i]);
}

TEST_CASE("anchored forward leaves no gradient path through the anchor operand") {
  // Analytic grads must match finite differences taken with the anchor held
  // fixed, while the loss itself is sensitive to the anchor values.
  Rng rng(76);
  ModelSpec spec = gin_spec(2, 4, 3);
  spec.anchoring.kind = AnchoringMode::Kind::HiddenLayer;
  spec.anchoring.layer = 2;
  Params params = init_params(spec, rng);
  Matrix adj(5, 5, 0.0);
  adj(0, 1) = adj(1, 0) = 1.0;
  adj(3, 4) = adj(4, 3) = 1.0;
  const Graph g = toy_graph(random_matrix(5, 3, rng), adj);

  // Anchor derived from the current parameters, then frozen.
  const Matrix anchor = mp_prefix(spec, detach_params(params), g, 1).to_matrix();

  const auto loss_at = [&](const Params& p) {
    const Tensor prefix = mp_prefix(spec, p, g, 1);
    return softmax_cross_entropy(forward_from_hidden(spec, p, g, prefix, anchor),
                                 {*g.graph_label});
  };

  const Tensor loss = loss_at(params);
  auto tensors = params.tensors();
  zero_grads(tensors);
  backward(loss);

  // Finite differences on the first mp1 weight, anchor fixed.
  Tensor& w = params.at("mp1.mlp1.w");
  const double analytic = w.grad()[0];
  const double h = 1e-6;
  const double orig = w.values()[0];
  w.values()[0] = orig + h;
  const double up = loss_at(params).scalar();
  w.values()[0] = orig - h;
  const double down = loss_at(params).scalar();
  w.values()[0] = orig;
  const double fd = (up - down) / (2 * h);
  CHECK(std::abs(analytic - fd) / std::max(1.0, std::abs(fd)) < 1e-5);

  // The loss does depend on the anchor operand.
  Matrix bumped = anchor;
  bumped(0, 0) += 0.5;
  const Tensor prefix = mp_prefix(spec, params, g, 1);
  const double base_loss = softmax_cross_entropy(
      forward_from_hidden(spec, params, g, prefix, anchor), {*g.graph_label}).scalar();
  const double bumped_loss = softmax_cross_entropy(
      forward_from_hidden(spec, params, g, prefix, bumped), {*g.graph_label}).scalar();
  CHECK(base_loss != bumped_loss);
}

TEST_CASE("model spec validation enforces the anchoring layer range") {
  ModelSpec spec = gin_spec(3, 4, 3);
  spec.anchoring.kind = AnchoringMode::Kind::HiddenLayer;
  spec.anchoring.layer = 1;
  CHECK_THROWS_AS(spec.validate(), ConfigError);
  spec.anchoring.layer = 4;
  CHECK_THROWS_AS(spec.validate(), ConfigError);
  spec.anchoring.layer = 3;
  CHECK_NOTHROW(spec.validate());
}

TEST_CASE("anchored layers double their input width") {
  ModelSpec spec = gin_spec(3, 8, 5);
  spec.anchoring.kind = AnchoringMode::Kind::NodeFeature;
  CHECK(spec.mp_input_dim(1) == 10);
  CHECK(spec.mp_input_dim(2) == 8);
  spec.anchoring.kind = AnchoringMode::Kind::HiddenLayer;
  spec.anchoring.layer = 2;
  CHECK(spec.mp_input_dim(1) == 5);
  CHECK(spec.mp_input_dim(2) == 16);
  CHECK(spec.mp_input_dim(3) == 8);
  spec.anchoring.kind = AnchoringMode::Kind::Readout;
  CHECK(spec.head_input_dim() == 16);
}

TEST_CASE("checkpoints round-trip spec and parameters exactly") {
  Rng rng(80);
  ModelSpec spec = gin_spec(2, 4, 3);
  spec.anchoring.kind = AnchoringMode::Kind::Readout;
  const Params params = init_params(spec, rng);
  const std::string prefix = "/tmp/gduq_test_ckpt";
  save_checkpoint(prefix, spec, params, nullptr);
  const Checkpoint loaded = load_checkpoint(prefix);
  CHECK(loaded.spec.anchoring.kind == AnchoringMode::Kind::Readout);
  CHECK(loaded.spec.hidden_dim == 4);
  REQUIRE(loaded.params.items.size() == params.items.size());
  for (std::size_t i = 0; i < params.items.size(); ++i) {
    CHECK(loaded.params.items[i].first == params.items[i].first);
    CHECK(loaded.params.items[i].second.values() == params.items[i].second.values());
  }
  CHECK_FALSE(loaded.source.has_value());
  std::remove((prefix + ".json").c_str());
  std::remove((prefix + ".bin").c_str());
}

TEST_CASE("missing checkpoints raise artifact errors") {
  CHECK_THROWS_AS(load_checkpoint("/tmp/gduq_no_such_checkpoint"), ArtifactError);
}

}  // TEST_SUITE
