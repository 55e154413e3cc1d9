#include "doctest.h"

#include <cmath>

#include "curec/model.hpp"

using namespace curec;
using namespace curec::model;
using scenario::ItemId;
using scenario::TaskKind;

namespace {

ArchConfig small_arch() {
  ArchConfig arch;
  arch.f = 8;
  arch.n = 6;
  arch.K = 2;
  arch.kernel_width = 3;
  arch.dilations = {1, 2};
  return arch;
}

std::vector<scenario::TaskSpec> three_tasks() {
  return {{1, TaskKind::Item, "click", 100},
          {2, TaskKind::Item, "cart", 200},
          {3, TaskKind::Profile, "age", 300}};
}

ModelState small_model(std::uint64_t seed = 17) {
  return init_model(small_arch(), 6, three_tasks(), {{"age", 3}}, seed);
}

std::vector<ItemId> some_tokens() { return {0, 0, 3, 1, 5, 2}; }

// Relative error with a floor so near-zero gradients compare absolutely.
double rel_err(double a, double b) {
  return std::fabs(a - b) / std::max(1e-6, std::fabs(a) + std::fabs(b));
}

// At init every bias is zero, which parks the pad rows exactly on the ReLU
// kink where central differences and the subgradient disagree. Nudging all
// parameters off zero makes the loss differentiable at the test point.
void jitter(ModelState& m, Rng& rng) {
  for (auto& p : parameters(m))
    for (std::size_t j = 0; j < p.size; ++j) p.data[j] += uniform_real(rng, 0.01, 0.1);
  for (int c = 0; c < m.arch.f; ++c) m.item_emb.at(0, c) = 0.0;
}

// Central finite differences over every parameter against the analytic
// gradient for an arbitrary scalar function of the model.
template <typename LossFn, typename GradFn>
double max_grad_error(ModelState& m, LossFn loss, GradFn grad) {
  GradientSet grads;
  grad(m, grads);
  grads.zero_pad_row(m);
  double worst = 0.0;
  const double h = 1e-5;
  for (auto& p : parameters(m)) {
    const Vec* g = grads.find(p.name);
    for (std::size_t j = 0; j < p.size; ++j) {
      double analytic = g ? (*g)[j] : 0.0;
      if (p.name == "item_emb" && j < static_cast<std::size_t>(m.arch.f)) {
        // Pad row: the gradient contract forces zero.
        CHECK(analytic == 0.0);
        continue;
      }
      double keep = p.data[j];
      p.data[j] = keep + h;
      double up = loss(m);
      p.data[j] = keep - h;
      double down = loss(m);
      p.data[j] = keep;
      double numeric = (up - down) / (2.0 * h);
      worst = std::max(worst, rel_err(analytic, numeric));
    }
  }
  return worst;
}

}  // namespace

TEST_CASE("init is deterministic and respects the reserved rows") {
  auto a = small_model(3);
  auto b = small_model(3);
  CHECK(a.item_emb.v == b.item_emb.v);
  auto c = small_model(4);
  CHECK(a.item_emb.v != c.item_emb.v);

  for (int col = 0; col < a.arch.f; ++col) CHECK(a.item_emb.at(0, col) == 0.0);
  CHECK(a.mask_token() == 7);
  CHECK(a.heads.at(3).is_profile);
  CHECK(a.heads.at(3).W.cols == 3);
  CHECK(a.heads.at(1).W.cols == a.arch.f);
  CHECK(a.mask_emb.at(1).rows == a.arch.mask_rows());
}

TEST_CASE("gates stay inside (0,1)") {
  auto m = small_model();
  Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    for (auto& [task, mask] : m.mask_emb)
      for (double& v : mask.v) v = uniform_real(rng, -3.0, 3.0);
    for (int d = 0; d < m.arch.mask_rows(); ++d) {
      Vec g = gated_mask(m, 1, d);
      for (double v : g) {
        CHECK(v > 0.0);
        CHECK(v < 1.0);
      }
    }
  }
}

TEST_CASE("strongly negative mask embeddings collapse blocks to identity") {
  auto m = small_model();
  for (double& v : m.mask_emb.at(2).v) v = -1e9;
  auto tokens = some_tokens();
  Mat ek = forward(m, tokens, 2);
  for (int r = 0; r < m.arch.n; ++r)
    for (int c = 0; c < m.arch.f; ++c)
      CHECK(ek.at(r, c) == m.item_emb.at(static_cast<int>(tokens[r]), c));
}

TEST_CASE("causal convolution: a position never sees its future") {
  auto m = small_model();
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<ItemId> tokens(m.arch.n);
    for (auto& t : tokens) t = uniform_int(rng, 1, 6);
    int r = static_cast<int>(uniform_int(rng, 0, m.arch.n - 2));
    Mat base = forward(m, tokens, 1);
    auto perturbed = tokens;
    for (int q = r + 1; q < m.arch.n; ++q)
      perturbed[q] = 1 + (perturbed[q] % 6);
    Mat after = forward(m, perturbed, 1);
    for (int q = 0; q <= r; ++q)
      for (int c = 0; c < m.arch.f; ++c) CHECK(after.at(q, c) == base.at(q, c));
  }
}

TEST_CASE("backbone gradients match finite differences") {
  auto m = small_model();
  Rng jrng(97);
  jitter(m, jrng);
  auto tokens = some_tokens();
  Rng rng(23);
  Mat w(m.arch.n, m.arch.f);
  for (double& v : w.v) v = uniform_real(rng, -1.0, 1.0);

  auto loss = [&](const ModelState& mm) {
    Mat ek = forward(mm, tokens, 1);
    double s = 0.0;
    for (std::size_t j = 0; j < ek.v.size(); ++j) s += w.v[j] * ek.v[j];
    return s;
  };
  auto grad = [&](const ModelState& mm, GradientSet& grads) {
    ForwardCache cache;
    forward(mm, tokens, 1, &cache);
    backward(mm, 1, cache, w, grads);
  };
  CHECK(max_grad_error(m, loss, grad) < 1e-4);
}

TEST_CASE("projection head gradients match finite differences") {
  auto m = small_model();
  Rng jrng(97);
  jitter(m, jrng);
  auto tokens = some_tokens();

  auto loss = [&](const ModelState& mm) {
    Mat ek = forward(mm, tokens, 2);
    Vec rep = user_rep(ek);
    Vec pred = project(mm, 2, rep);
    auto pos = std::span<const double>(mm.item_emb.row(4), static_cast<std::size_t>(mm.arch.f));
    auto neg = std::span<const double>(mm.item_emb.row(6), static_cast<std::size_t>(mm.arch.f));
    return bpr_loss(pred, pos, neg);
  };
  auto grad = [&](const ModelState& mm, GradientSet& grads) {
    ForwardCache cache;
    Mat ek = forward(mm, tokens, 2, &cache);
    Vec rep = user_rep(ek);
    Vec pred = project(mm, 2, rep);
    int f = mm.arch.f;
    auto pos = std::span<const double>(mm.item_emb.row(4), static_cast<std::size_t>(f));
    auto neg = std::span<const double>(mm.item_emb.row(6), static_cast<std::size_t>(f));
    Vec d_pred(static_cast<std::size_t>(f), 0.0);
    Vec d_pos(static_cast<std::size_t>(f), 0.0), d_neg(static_cast<std::size_t>(f), 0.0);
    bpr_loss_grad(pred, pos, neg, 1.0, d_pred, d_pos, d_neg);
    Vec& d_emb = grads.of("item_emb", mm.item_emb.v.size());
    for (int c = 0; c < f; ++c) {
      d_emb[4 * static_cast<std::size_t>(f) + c] += d_pos[c];
      d_emb[6 * static_cast<std::size_t>(f) + c] += d_neg[c];
    }
    Vec d_rep = project_backward(mm, 2, rep, d_pred, grads);
    Mat d_ek(mm.arch.n, f);
    d_ek.set_row(mm.arch.n - 1, d_rep);
    backward(mm, 2, cache, d_ek, grads);
  };
  CHECK(max_grad_error(m, loss, grad) < 1e-4);
}

TEST_CASE("cross-entropy gradients match finite differences") {
  auto m = small_model();
  Rng jrng(97);
  jitter(m, jrng);
  auto tokens = some_tokens();
  auto loss = [&](const ModelState& mm) {
    Mat ek = forward(mm, tokens, 3);
    return ce_loss(project(mm, 3, user_rep(ek)), 1);
  };
  auto grad = [&](const ModelState& mm, GradientSet& grads) {
    ForwardCache cache;
    Mat ek = forward(mm, tokens, 3, &cache);
    Vec rep = user_rep(ek);
    Vec logits = project(mm, 3, rep);
    Vec d_logits(logits.size(), 0.0);
    ce_loss_grad(logits, 1, 1.0, d_logits);
    Vec d_rep = project_backward(mm, 3, rep, d_logits, grads);
    Mat d_ek(mm.arch.n, mm.arch.f);
    d_ek.set_row(mm.arch.n - 1, d_rep);
    backward(mm, 3, cache, d_ek, grads);
  };
  CHECK(max_grad_error(m, loss, grad) < 1e-4);
}

TEST_CASE("loss closed-form values") {
  Vec zero(8, 0.0), ones(8, 1.0);
  CHECK(bpr_loss(ones, zero, zero) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(mse_loss(ones, ones) == 0.0);
  Vec logits(4, 0.7);
  CHECK(ce_loss(logits, 2) == doctest::Approx(std::log(4.0)).epsilon(1e-12));

  // N=2, all representations identical: every similarity ties, 3 rivals.
  Mat a1(2, 3), a2(2, 3);
  for (double& v : a1.v) v = 0.5;
  for (double& v : a2.v) v = 0.5;
  CHECK(contrastive_loss(a1, a2) == doctest::Approx(std::log(3.0)).epsilon(1e-9));
}

TEST_CASE("contrastive gradients match finite differences") {
  Rng rng(31);
  int nb = 3, f = 5;
  Mat a1(nb, f), a2(nb, f);
  for (double& v : a1.v) v = uniform_real(rng, -1.0, 1.0);
  for (double& v : a2.v) v = uniform_real(rng, -1.0, 1.0);

  Mat d1(nb, f), d2(nb, f);
  double base = contrastive_loss_grad(a1, a2, 1.0, d1, d2);
  CHECK(base == doctest::Approx(contrastive_loss(a1, a2)).epsilon(1e-12));

  const double h = 1e-6;
  double worst = 0.0;
  for (Mat* mat : {&a1, &a2}) {
    Mat& d = mat == &a1 ? d1 : d2;
    for (std::size_t j = 0; j < mat->v.size(); ++j) {
      double keep = mat->v[j];
      mat->v[j] = keep + h;
      double up = contrastive_loss(a1, a2);
      mat->v[j] = keep - h;
      double down = contrastive_loss(a1, a2);
      mat->v[j] = keep;
      worst = std::max(worst, rel_err(d.v[j], (up - down) / (2.0 * h)));
    }
  }
  CHECK(worst < 1e-4);
}

TEST_CASE("pad token contributes no embedding gradient") {
  auto m = small_model();
  std::vector<ItemId> tokens = {0, 0, 0, 2, 3, 4};
  ForwardCache cache;
  forward(m, tokens, 1, &cache);
  Mat d_ek(m.arch.n, m.arch.f);
  for (double& v : d_ek.v) v = 1.0;
  GradientSet grads;
  backward(m, 1, cache, d_ek, grads);
  grads.zero_pad_row(m);
  const Vec* g = grads.find("item_emb");
  REQUIRE(g != nullptr);
  for (int c = 0; c < m.arch.f; ++c) CHECK((*g)[c] == 0.0);
}

TEST_CASE("forward rejects out-of-range tokens") {
  auto m = small_model();
  std::vector<ItemId> tokens = {0, 0, 0, 2, 3, 99};
  CHECK_THROWS_AS(forward(m, tokens, 1), ConfigError);
  CHECK_THROWS_AS(forward(m, some_tokens(), 9), ConfigError);
}

TEST_CASE("snapshot is an independent copy") {
  auto m = small_model();
  auto frozen = snapshot(m);
  double before = frozen.state().item_emb.at(1, 0);
  m.item_emb.at(1, 0) += 100.0;
  CHECK(frozen.state().item_emb.at(1, 0) == before);
}
