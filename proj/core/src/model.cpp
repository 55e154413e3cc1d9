#include "curec/model.hpp"

#include <algorithm>
#include <cmath>

namespace curec::model {

void ArchConfig::validate() const {
  if (f < 1 || K < 1 || kernel_width < 1)
    throw ConfigError("arch: f, K and kernel_width must be >= 1");
  if (n < 1) throw ConfigError("arch: n must be >= 1");
  if (static_cast<int>(dilations.size()) != K)
    throw ConfigError("arch: dilations must list one factor per block");
  for (int d : dilations)
    if (d < 1) throw ConfigError("arch: dilation factors must be >= 1");
  if (gate_scale <= 0.0) throw ConfigError("arch: gate_scale must be positive");
  // A receptive field beyond n is allowed: causal zero padding saturates the
  // extra taps.
}

int ArchConfig::receptive_field() const {
  int rf = 1;
  for (int d : dilations) rf += 2 * (kernel_width - 1) * d;
  return rf;
}

// ---------------------------------------------------------------------------
// Parameter enumeration

std::vector<ParamRef> parameters(ModelState& m) {
  std::vector<ParamRef> out;
  out.push_back({"item_emb", m.item_emb.v.data(), m.item_emb.v.size()});
  for (size_t k = 0; k < m.blocks.size(); ++k) {
    auto& b = m.blocks[k];
    std::string p = "block" + std::to_string(k) + ".";
    out.push_back({p + "ln1_g", b.ln1_g.data(), b.ln1_g.size()});
    out.push_back({p + "ln1_b", b.ln1_b.data(), b.ln1_b.size()});
    out.push_back({p + "w1", b.w1.v.data(), b.w1.v.size()});
    out.push_back({p + "b1", b.b1.data(), b.b1.size()});
    out.push_back({p + "ln2_g", b.ln2_g.data(), b.ln2_g.size()});
    out.push_back({p + "ln2_b", b.ln2_b.data(), b.ln2_b.size()});
    out.push_back({p + "w2", b.w2.v.data(), b.w2.v.size()});
    out.push_back({p + "b2", b.b2.data(), b.b2.size()});
  }
  for (auto& [id, mask] : m.mask_emb)
    out.push_back({"mask." + std::to_string(id), mask.v.data(), mask.v.size()});
  for (auto& [id, head] : m.heads) {
    out.push_back({"head." + std::to_string(id) + ".W", head.W.v.data(), head.W.v.size()});
    out.push_back({"head." + std::to_string(id) + ".b", head.b.data(), head.b.size()});
  }
  return out;
}

Vec& GradientSet::of(const std::string& name, std::size_t size) {
  auto it = grads_.find(name);
  if (it == grads_.end()) it = grads_.emplace(name, Vec(size, 0.0)).first;
  return it->second;
}

const Vec* GradientSet::find(const std::string& name) const {
  auto it = grads_.find(name);
  return it == grads_.end() ? nullptr : &it->second;
}

void GradientSet::clear() { grads_.clear(); }

void GradientSet::zero_pad_row(const ModelState& m) {
  auto it = grads_.find("item_emb");
  if (it == grads_.end()) return;
  for (int c = 0; c < m.arch.f; ++c) it->second[c] = 0.0;
}

// ---------------------------------------------------------------------------
// Init

ModelState init_model(const ArchConfig& arch, ItemId num_items,
                      const std::vector<TaskSpec>& tasks,
                      const std::vector<scenario::AttributeDecl>& attributes,
                      std::uint64_t seed) {
  arch.validate();
  if (num_items < 1) throw ConfigError("init_model: num_items must be >= 1");

  ModelState m;
  m.arch = arch;
  m.num_items = num_items;
  Rng rng(seed);

  auto fill_uniform = [&](double* data, std::size_t size, double fan_in) {
    double scale = 1.0 / std::sqrt(fan_in);
    for (std::size_t i = 0; i < size; ++i) data[i] = uniform_real(rng, -scale, scale);
  };

  m.item_emb = Mat(static_cast<int>(num_items) + 2, arch.f);
  fill_uniform(m.item_emb.v.data(), m.item_emb.v.size(), arch.f);
  for (int c = 0; c < arch.f; ++c) m.item_emb.at(0, c) = 0.0;  // pad row stays zero

  m.blocks.resize(arch.K);
  for (auto& b : m.blocks) {
    int fan_in = arch.kernel_width * arch.f;
    b.w1 = Mat(arch.kernel_width * arch.f, arch.f);
    b.w2 = Mat(arch.kernel_width * arch.f, arch.f);
    fill_uniform(b.w1.v.data(), b.w1.v.size(), fan_in);
    fill_uniform(b.w2.v.data(), b.w2.v.size(), fan_in);
    b.b1.assign(arch.f, 0.0);
    b.b2.assign(arch.f, 0.0);
    b.ln1_g.assign(arch.f, 1.0);
    b.ln1_b.assign(arch.f, 0.0);
    b.ln2_g.assign(arch.f, 1.0);
    b.ln2_b.assign(arch.f, 0.0);
  }

  for (const auto& t : tasks) {
    m.mask_emb[t.id] = Mat(arch.mask_rows(), arch.f);  // zero init -> gate 0.5
    TaskHead head;
    head.is_profile = t.kind == TaskKind::Profile;
    int out_dim = arch.f;
    if (head.is_profile) {
      out_dim = -1;
      for (const auto& a : attributes)
        if (a.name == t.target) out_dim = a.num_classes;
      if (out_dim < 0)
        throw ConfigError("profile task '" + t.target + "' has no declared attribute");
    }
    head.W = Mat(arch.f, out_dim);
    head.b.assign(out_dim, 0.0);
    fill_uniform(head.W.v.data(), head.W.v.size(), arch.f);
    m.heads[t.id] = std::move(head);
  }
  return m;
}

Vec gated_mask(const ModelState& m, int task_id, int mask_row) {
  auto it = m.mask_emb.find(task_id);
  if (it == m.mask_emb.end())
    throw ConfigError("unknown task id for mask: " + std::to_string(task_id));
  if (mask_row < 0 || mask_row >= it->second.rows)
    throw ConfigError("mask row out of range: " + std::to_string(mask_row));
  Vec g(m.arch.f);
  for (int c = 0; c < m.arch.f; ++c)
    g[c] = sigmoid(m.arch.gate_scale * it->second.at(mask_row, c));
  return g;
}

// ---------------------------------------------------------------------------
// Forward / backward

namespace {

// y = g * (x - mu) / sqrt(var + eps) + b, per row over features.
void layer_norm(const Mat& x, const Vec& gain, const Vec& bias, double eps, Mat& y, Mat& xhat,
                Vec& invstd) {
  int n = x.rows, f = x.cols;
  y = Mat(n, f);
  xhat = Mat(n, f);
  invstd.assign(n, 0.0);
  for (int r = 0; r < n; ++r) {
    double mu = 0.0;
    for (int c = 0; c < f; ++c) mu += x.at(r, c);
    mu /= f;
    double var = 0.0;
    for (int c = 0; c < f; ++c) {
      double d = x.at(r, c) - mu;
      var += d * d;
    }
    var /= f;
    double is = 1.0 / std::sqrt(var + eps);
    invstd[r] = is;
    for (int c = 0; c < f; ++c) {
      double xh = (x.at(r, c) - mu) * is;
      xhat.at(r, c) = xh;
      y.at(r, c) = gain[c] * xh + bias[c];
    }
  }
}

void layer_norm_backward(const Mat& d_y, const Mat& xhat, const Vec& invstd, const Vec& gain,
                         Vec& d_gain, Vec& d_bias, Mat& d_x) {
  int n = d_y.rows, f = d_y.cols;
  d_x = Mat(n, f);
  for (int r = 0; r < n; ++r) {
    double mean_dxh = 0.0, mean_dxh_xh = 0.0;
    for (int c = 0; c < f; ++c) {
      double dxh = d_y.at(r, c) * gain[c];
      mean_dxh += dxh;
      mean_dxh_xh += dxh * xhat.at(r, c);
      d_gain[c] += d_y.at(r, c) * xhat.at(r, c);
      d_bias[c] += d_y.at(r, c);
    }
    mean_dxh /= f;
    mean_dxh_xh /= f;
    for (int c = 0; c < f; ++c) {
      double dxh = d_y.at(r, c) * gain[c];
      d_x.at(r, c) = invstd[r] * (dxh - mean_dxh - xhat.at(r, c) * mean_dxh_xh);
    }
  }
}

// out[r][o] = b[o] + sum_tap sum_in W[tap*f+in][o] * x[r - tap*d][in],
// rows before the sequence start contribute zero (causal zero padding).
void causal_conv(const Mat& x, const Mat& w, const Vec& bias, int width, int dilation, Mat& out) {
  int n = x.rows, f = x.cols;
  out = Mat(n, f);
  for (int r = 0; r < n; ++r) {
    for (int o = 0; o < f; ++o) out.at(r, o) = bias[o];
    for (int tap = 0; tap < width; ++tap) {
      int src = r - tap * dilation;
      if (src < 0) continue;
      const double* xr = x.row(src);
      for (int in = 0; in < f; ++in) {
        double xv = xr[in];
        if (xv == 0.0) continue;
        const double* wr = w.row(tap * f + in);
        double* orow = out.row(r);
        for (int o = 0; o < f; ++o) orow[o] += wr[o] * xv;
      }
    }
  }
}

void causal_conv_backward(const Mat& x, const Mat& w, int width, int dilation, const Mat& d_out,
                          Mat& d_x, Vec& d_w, Vec& d_b) {
  int n = x.rows, f = x.cols;
  d_x = Mat(n, f);
  for (int r = 0; r < n; ++r) {
    const double* dr = d_out.row(r);
    for (int o = 0; o < f; ++o) d_b[o] += dr[o];
    for (int tap = 0; tap < width; ++tap) {
      int src = r - tap * dilation;
      if (src < 0) continue;
      const double* xr = x.row(src);
      double* dxr = d_x.row(src);
      for (int in = 0; in < f; ++in) {
        const double* wr = w.row(tap * f + in);
        double* dwr = d_w.data() + static_cast<size_t>(tap * f + in) * f;
        double xv = xr[in];
        double acc = 0.0;
        for (int o = 0; o < f; ++o) {
          acc += wr[o] * dr[o];
          dwr[o] += xv * dr[o];
        }
        dxr[in] += acc;
      }
    }
  }
}

}  // namespace

Mat forward(const ModelState& m, std::span<const ItemId> tokens, int task_id,
            ForwardCache* cache) {
  const ArchConfig& arch = m.arch;
  int n = static_cast<int>(tokens.size());
  if (n != arch.n)
    throw ConfigError("sequence length " + std::to_string(n) + " != arch.n " +
                      std::to_string(arch.n));
  if (!m.has_task(task_id))
    throw ConfigError("unknown task id in forward: " + std::to_string(task_id));

  Mat e0(n, arch.f);
  for (int r = 0; r < n; ++r) {
    ItemId t = tokens[r];
    if (t < 0 || t > m.mask_token())
      throw ConfigError("token id out of range: " + std::to_string(t));
    for (int c = 0; c < arch.f; ++c) e0.at(r, c) = m.item_emb.at(static_cast<int>(t), c);
  }

  if (cache) {
    cache->e0 = e0;
    cache->e.assign(1, e0);
    cache->blocks.assign(arch.K, {});
    cache->tokens.assign(tokens.begin(), tokens.end());
  }

  Mat cur = std::move(e0);
  for (int k = 0; k < arch.K; ++k) {
    const ConvBlock& b = m.blocks[k];
    Vec g1 = gated_mask(m, task_id, arch.mask_per_conv ? 2 * k : k);
    Vec g2 = gated_mask(m, task_id, arch.mask_per_conv ? 2 * k + 1 : k);

    Mat l1, xhat1, a1;
    Vec invstd1;
    layer_norm(cur, b.ln1_g, b.ln1_b, arch.ln_eps, l1, xhat1, invstd1);
    causal_conv(l1, b.w1, b.b1, arch.kernel_width, arch.dilations[k], a1);
    Mat m1(n, arch.f);
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < arch.f; ++c)
        m1.at(r, c) = std::max(a1.at(r, c), 0.0) * g1[c];

    Mat l2, xhat2, a2;
    Vec invstd2;
    layer_norm(m1, b.ln2_g, b.ln2_b, arch.ln_eps, l2, xhat2, invstd2);
    causal_conv(l2, b.w2, b.b2, arch.kernel_width, arch.dilations[k], a2);
    Mat out(n, arch.f);
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < arch.f; ++c)
        out.at(r, c) = std::max(a2.at(r, c), 0.0) * g2[c] + cur.at(r, c);

    if (cache) {
      auto& bc = cache->blocks[k];
      bc.xhat1 = std::move(xhat1);
      bc.invstd1 = std::move(invstd1);
      bc.a1 = std::move(a1);
      bc.xhat2 = std::move(xhat2);
      bc.invstd2 = std::move(invstd2);
      bc.a2 = std::move(a2);
      cache->e.push_back(out);
    }
    cur = std::move(out);
  }
  return cur;
}

Vec user_rep(const Mat& ek) { return ek.row_vec(ek.rows - 1); }

void backward(const ModelState& m, int task_id, const ForwardCache& cache, const Mat& d_ek,
              GradientSet& grads) {
  const ArchConfig& arch = m.arch;
  int n = arch.n, f = arch.f;

  Mat d_cur = d_ek;
  for (int k = arch.K - 1; k >= 0; --k) {
    const ConvBlock& b = m.blocks[k];
    const auto& bc = cache.blocks[k];
    std::string p = "block" + std::to_string(k) + ".";
    int row1 = arch.mask_per_conv ? 2 * k : k;
    int row2 = arch.mask_per_conv ? 2 * k + 1 : k;
    Vec g1 = gated_mask(m, task_id, row1);
    Vec g2 = gated_mask(m, task_id, row2);

    const Mat& mask_emb = m.mask_emb.at(task_id);
    Vec& d_mask = grads.of("mask." + std::to_string(task_id), mask_emb.v.size());

    // gate 2 and ReLU 2
    Mat d_a2(n, f);
    for (int r = 0; r < n; ++r) {
      for (int c = 0; c < f; ++c) {
        double relu2 = std::max(bc.a2.at(r, c), 0.0);
        double dm2 = d_cur.at(r, c);
        // d gate, then through sigmoid into the mask embedding
        d_mask[static_cast<size_t>(row2) * f + c] +=
            arch.gate_scale * g2[c] * (1.0 - g2[c]) * relu2 * dm2;
        d_a2.at(r, c) = bc.a2.at(r, c) > 0.0 ? dm2 * g2[c] : 0.0;
      }
    }

    // conv 2 (input l2 reconstructed from xhat2)
    Mat l2(n, f);
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < f; ++c) l2.at(r, c) = b.ln2_g[c] * bc.xhat2.at(r, c) + b.ln2_b[c];
    Mat d_l2;
    causal_conv_backward(l2, b.w2, arch.kernel_width, arch.dilations[k], d_a2, d_l2,
                         grads.of(p + "w2", b.w2.v.size()), grads.of(p + "b2", f));

    // layer norm 2
    Mat d_m1;
    layer_norm_backward(d_l2, bc.xhat2, bc.invstd2, b.ln2_g, grads.of(p + "ln2_g", f),
                        grads.of(p + "ln2_b", f), d_m1);

    // gate 1 and ReLU 1
    Mat d_a1(n, f);
    for (int r = 0; r < n; ++r) {
      for (int c = 0; c < f; ++c) {
        double relu1 = std::max(bc.a1.at(r, c), 0.0);
        double dm1 = d_m1.at(r, c);
        d_mask[static_cast<size_t>(row1) * f + c] +=
            arch.gate_scale * g1[c] * (1.0 - g1[c]) * relu1 * dm1;
        d_a1.at(r, c) = bc.a1.at(r, c) > 0.0 ? dm1 * g1[c] : 0.0;
      }
    }

    // conv 1 (input l1 reconstructed from xhat1)
    Mat l1(n, f);
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < f; ++c) l1.at(r, c) = b.ln1_g[c] * bc.xhat1.at(r, c) + b.ln1_b[c];
    Mat d_l1;
    causal_conv_backward(l1, b.w1, arch.kernel_width, arch.dilations[k], d_a1, d_l1,
                         grads.of(p + "w1", b.w1.v.size()), grads.of(p + "b1", f));

    // layer norm 1; its input is E_{k-1}, which also carries the residual
    Mat d_prev;
    layer_norm_backward(d_l1, bc.xhat1, bc.invstd1, b.ln1_g, grads.of(p + "ln1_g", f),
                        grads.of(p + "ln1_b", f), d_prev);
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < f; ++c) d_prev.at(r, c) += d_cur.at(r, c);
    d_cur = std::move(d_prev);
  }

  Vec& d_emb = grads.of("item_emb", m.item_emb.v.size());
  for (int r = 0; r < n; ++r) {
    ItemId t = cache.tokens[r];
    if (t == 0) continue;  // pad embedding is frozen
    for (int c = 0; c < f; ++c)
      d_emb[static_cast<size_t>(t) * f + c] += d_cur.at(r, c);
  }
}

// ---------------------------------------------------------------------------
// Heads

Vec project(const ModelState& m, int task_id, std::span<const double> rep) {
  auto it = m.heads.find(task_id);
  if (it == m.heads.end())
    throw ConfigError("unknown task id in project: " + std::to_string(task_id));
  const TaskHead& h = it->second;
  if (static_cast<int>(rep.size()) != h.W.rows)
    throw ConfigError("project: rep length mismatch");
  Vec out(h.W.cols);
  for (int o = 0; o < h.W.cols; ++o) {
    double acc = h.b[o];
    for (int i = 0; i < h.W.rows; ++i) acc += rep[i] * h.W.at(i, o);
    out[o] = acc;
  }
  return out;
}

Vec project_backward(const ModelState& m, int task_id, std::span<const double> rep,
                     std::span<const double> d_pred, GradientSet& grads) {
  const TaskHead& h = m.heads.at(task_id);
  std::string p = "head." + std::to_string(task_id) + ".";
  Vec& d_w = grads.of(p + "W", h.W.v.size());
  Vec& d_b = grads.of(p + "b", h.b.size());
  Vec d_rep(h.W.rows, 0.0);
  for (int o = 0; o < h.W.cols; ++o) {
    d_b[o] += d_pred[o];
    for (int i = 0; i < h.W.rows; ++i) {
      d_w[static_cast<size_t>(i) * h.W.cols + o] += rep[i] * d_pred[o];
      d_rep[i] += h.W.at(i, o) * d_pred[o];
    }
  }
  return d_rep;
}

// ---------------------------------------------------------------------------
// Losses

double bpr_loss(std::span<const double> pred, std::span<const double> pos,
                std::span<const double> neg) {
  double margin = dot(pred, pos) - dot(pred, neg);
  // -ln sigma(margin), computed stably
  return margin >= 0.0 ? std::log1p(std::exp(-margin)) : -margin + std::log1p(std::exp(margin));
}

double bpr_loss_grad(std::span<const double> pred, std::span<const double> pos,
                     std::span<const double> neg, double weight, Vec& d_pred, Vec& d_pos,
                     Vec& d_neg) {
  double margin = dot(pred, pos) - dot(pred, neg);
  double coeff = (sigmoid(margin) - 1.0) * weight;  // d loss / d margin, scaled
  for (size_t i = 0; i < pred.size(); ++i) {
    d_pred[i] += coeff * (pos[i] - neg[i]);
    d_pos[i] += coeff * pred[i];
    d_neg[i] -= coeff * pred[i];
  }
  return margin >= 0.0 ? std::log1p(std::exp(-margin)) : -margin + std::log1p(std::exp(margin));
}

double ce_loss(std::span<const double> logits, int class_index) {
  if (class_index < 0 || class_index >= static_cast<int>(logits.size()))
    throw ConfigError("ce_loss: class index out of range");
  double mx = *std::max_element(logits.begin(), logits.end());
  double lse = 0.0;
  for (double v : logits) lse += std::exp(v - mx);
  return std::log(lse) + mx - logits[class_index];
}

double ce_loss_grad(std::span<const double> logits, int class_index, double weight,
                    Vec& d_logits) {
  double loss = ce_loss(logits, class_index);
  double mx = *std::max_element(logits.begin(), logits.end());
  double lse = 0.0;
  for (double v : logits) lse += std::exp(v - mx);
  for (size_t i = 0; i < logits.size(); ++i) {
    double p = std::exp(logits[i] - mx) / lse;
    d_logits[i] += weight * (p - (static_cast<int>(i) == class_index ? 1.0 : 0.0));
  }
  return loss;
}

double mse_loss(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    double d = a[i] - b[i];
    s += d * d;
  }
  return s / static_cast<double>(a.size());
}

double mse_loss_grad(std::span<const double> a, std::span<const double> b, double weight,
                     Vec& d_a) {
  double s = 0.0;
  double inv = 1.0 / static_cast<double>(a.size());
  for (size_t i = 0; i < a.size(); ++i) {
    double d = a[i] - b[i];
    s += d * d;
    d_a[i] += weight * 2.0 * d * inv;
  }
  return s * inv;
}

namespace {

// d cos(a, b) / d a accumulated into out with factor w.
void add_dcos_da(std::span<const double> a, std::span<const double> b, double w, double* out) {
  double na = norm(a), nb = norm(b);
  if (na == 0.0 || nb == 0.0) return;
  double c = dot(a, b) / (na * nb);
  for (size_t i = 0; i < a.size(); ++i)
    out[i] += w * (b[i] / (na * nb) - c * a[i] / (na * na));
}

}  // namespace

double contrastive_loss(const Mat& reps_a1, const Mat& reps_a2) {
  int n = reps_a1.rows;
  if (n < 2) throw ConfigError("contrastive_loss needs a batch of at least 2");
  double total = 0.0;
  for (int l = 0; l < n; ++l) {
    auto anchor = std::span<const double>(reps_a1.row(l), reps_a1.cols);
    double pos = cosine(anchor, std::span<const double>(reps_a2.row(l), reps_a2.cols));
    double denom = std::exp(pos);
    for (int s = 0; s < n; ++s) {
      if (s == l) continue;
      denom += std::exp(cosine(anchor, std::span<const double>(reps_a1.row(s), reps_a1.cols)));
      denom += std::exp(cosine(anchor, std::span<const double>(reps_a2.row(s), reps_a2.cols)));
    }
    total += -pos + std::log(denom);
  }
  return total / n;
}

double contrastive_loss_grad(const Mat& reps_a1, const Mat& reps_a2, double weight, Mat& d_a1,
                             Mat& d_a2) {
  int n = reps_a1.rows, f = reps_a1.cols;
  if (n < 2) throw ConfigError("contrastive_loss needs a batch of at least 2");
  double total = 0.0;
  double w = weight / n;
  for (int l = 0; l < n; ++l) {
    auto anchor = std::span<const double>(reps_a1.row(l), f);
    double pos = cosine(anchor, std::span<const double>(reps_a2.row(l), f));
    double denom = std::exp(pos);
    std::vector<std::pair<const double*, double>> negs;  // (rep row, cos)
    for (int s = 0; s < n; ++s) {
      if (s == l) continue;
      double c1 = cosine(anchor, std::span<const double>(reps_a1.row(s), f));
      double c2 = cosine(anchor, std::span<const double>(reps_a2.row(s), f));
      denom += std::exp(c1) + std::exp(c2);
      negs.push_back({reps_a1.row(s), c1});
      negs.push_back({reps_a2.row(s), c2});
    }
    total += -pos + std::log(denom);

    // d loss / d cos_pos = -1 + exp(pos)/denom; d / d cos_neg = exp(neg)/denom
    double dpos = (-1.0 + std::exp(pos) / denom) * w;
    add_dcos_da(anchor, std::span<const double>(reps_a2.row(l), f), dpos, d_a1.row(l));
    add_dcos_da(std::span<const double>(reps_a2.row(l), f), anchor, dpos, d_a2.row(l));
    for (size_t j = 0; j < negs.size(); ++j) {
      int s_idx = static_cast<int>(j / 2);
      int s = s_idx >= l ? s_idx + 1 : s_idx;
      bool from_a1 = j % 2 == 0;
      double dneg = std::exp(negs[j].second) / denom * w;
      auto other = std::span<const double>(negs[j].first, f);
      add_dcos_da(anchor, other, dneg, d_a1.row(l));
      add_dcos_da(other, anchor, dneg, from_a1 ? d_a1.row(s) : d_a2.row(s));
    }
  }
  return total / n;
}

FrozenModel snapshot(const ModelState& m) { return FrozenModel(m); }

}  // namespace curec::model
