#pragma once

#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "curec/common.hpp"
#include "curec/scenario.hpp"

namespace curec::model {

using scenario::ItemId;
using scenario::TaskKind;
using scenario::TaskSpec;

struct ArchConfig {
  int f = 16;
  int n = 20;
  int K = 2;
  int kernel_width = 3;
  std::vector<int> dilations = {1, 2};  // one per block
  double gate_scale = 10.0;             // s in sigma(s * mask_emb)
  double ln_eps = 1e-5;
  bool mask_per_conv = false;  // one mask row per conv layer instead of per block

  void validate() const;
  int receptive_field() const;
  int mask_rows() const { return mask_per_conv ? 2 * K : K; }
};

struct TaskHead {
  Mat W;  // f x f (item) or f x num_classes (profile)
  Vec b;
  bool is_profile = false;
};

struct ConvBlock {
  // Conv weights are (kernel_width * f) x f, tap-major: W[(tap*f + in), out]
  // with tap 0 at the current position.
  Mat w1, w2;
  Vec b1, b2;
  Vec ln1_g, ln1_b, ln2_g, ln2_b;
};

struct ModelState {
  ArchConfig arch;
  ItemId num_items = 0;  // real items are 1..num_items
  // Rows: 0 = pad (frozen zero), 1..num_items = items, num_items+1 = the
  // augmentation mask token.
  Mat item_emb;
  std::vector<ConvBlock> blocks;
  std::map<int, Mat> mask_emb;   // task id -> mask_rows() x f (pre-gate)
  std::map<int, TaskHead> heads;
  std::map<int, Vec> task_means;  // task id -> mean item embedding at completion

  ItemId mask_token() const { return num_items + 1; }
  bool has_task(int task_id) const { return mask_emb.count(task_id) != 0; }
};

// Named view of every trainable array, in a fixed order. Drives the
// optimizer, the checkpoint writer, and the finite-difference tests.
struct ParamRef {
  std::string name;
  double* data;
  std::size_t size;
};
std::vector<ParamRef> parameters(ModelState& m);

class GradientSet {
 public:
  Vec& of(const std::string& name, std::size_t size);
  const Vec* find(const std::string& name) const;
  void clear();
  // Pad-row gradient is forced to zero before any update.
  void zero_pad_row(const ModelState& m);
  const std::map<std::string, Vec>& all() const { return grads_; }

 private:
  std::map<std::string, Vec> grads_;
};

// Profile-task heads take their output width from the declared attribute
// class counts; item-task heads are f x f.
ModelState init_model(const ArchConfig& arch, ItemId num_items,
                      const std::vector<TaskSpec>& tasks,
                      const std::vector<scenario::AttributeDecl>& attributes,
                      std::uint64_t seed);

// sigma(gate_scale * mask_emb[task] row `mask_row`), every component in (0,1).
Vec gated_mask(const ModelState& m, int task_id, int mask_row);

struct ForwardCache {
  Mat e0;
  std::vector<Mat> e;  // e[k] = E_k, k = 0..K (e[0] aliases e0)
  struct BlockCache {
    Mat xhat1, xhat2;  // layer-norm normalized inputs
    Vec invstd1, invstd2;
    Mat a1, a2;  // conv pre-activations
  };
  std::vector<BlockCache> blocks;
  std::vector<ItemId> tokens;
};

// E_k = F_k(E_{k-1}; mask) + E_{k-1}; F_k = conv -> ReLU -> gate, twice, each
// conv preceded by layer norm. Convolutions are causal with zero padding.
// Returns E_K (n x f). Pass a cache to enable backward().
Mat forward(const ModelState& m, std::span<const ItemId> tokens, int task_id,
            ForwardCache* cache = nullptr);

Vec user_rep(const Mat& ek);

// Propagates dL/dE_K through the cached forward pass, accumulating into
// grads (item embeddings, conv/LN parameters, mask embeddings).
void backward(const ModelState& m, int task_id, const ForwardCache& cache, const Mat& d_ek,
              GradientSet& grads);

Vec project(const ModelState& m, int task_id, std::span<const double> rep);
// Accumulates head gradients and returns dL/d rep.
Vec project_backward(const ModelState& m, int task_id, std::span<const double> rep,
                     std::span<const double> d_pred, GradientSet& grads);

// -ln sigma(pred.pos - pred.neg)
double bpr_loss(std::span<const double> pred, std::span<const double> pos,
                std::span<const double> neg);
double bpr_loss_grad(std::span<const double> pred, std::span<const double> pos,
                     std::span<const double> neg, double weight, Vec& d_pred, Vec& d_pos,
                     Vec& d_neg);

double ce_loss(std::span<const double> logits, int class_index);
double ce_loss_grad(std::span<const double> logits, int class_index, double weight,
                    Vec& d_logits);

double mse_loss(std::span<const double> a, std::span<const double> b);
double mse_loss_grad(std::span<const double> a, std::span<const double> b, double weight,
                     Vec& d_a);

// NT-Xent over cosine similarities without temperature: anchor row l of
// reps_a1, positive row l of reps_a2, negatives = the other 2(N-1) augmented
// rows. Mean over anchors.
double contrastive_loss(const Mat& reps_a1, const Mat& reps_a2);
double contrastive_loss_grad(const Mat& reps_a1, const Mat& reps_a2, double weight, Mat& d_a1,
                             Mat& d_a2);

struct FrozenModel {
  explicit FrozenModel(const ModelState& m) : state_(m) {}
  const ModelState& state() const { return state_; }

 private:
  const ModelState state_;
};

FrozenModel snapshot(const ModelState& m);

}  // namespace curec::model
