// Copyright 2026 The momrecon Authors
// SPDX-License-Identifier: Apache-2.0

#include "mom/objectives.hpp"

#include "mom/ops.hpp"

#include "dense64.hpp"

MOM_NS_BEGIN

void Stage1Weights::validate() const {
  if (!(tau > 0)) fail(ErrorKind::Config, "stage-1 weights: tau must be > 0");
  if (lambda_action < 0 || lambda_cls < 0) fail(ErrorKind::Config, "stage-1 weights: lambdas must be >= 0");
  if (focal_gamma < 0) fail(ErrorKind::Config, "stage-1 weights: focal gamma must be >= 0");
  if (focal_mix < 0 || focal_mix > 1) fail(ErrorKind::Config, "stage-1 weights: focal mix must lie in [0,1]");
}

Var info_nce(const Var& anchors, const Var& targets, double tau, bool symmetric) {
  if (anchors.rank() != 2 || targets.rank() != 2 || anchors.shape() != targets.shape()) {
    fail(ErrorKind::Dimension, "info_nce: anchors " + shape_str(anchors.shape()) + " vs targets " +
                                   shape_str(targets.shape()));
  }
  if (!(tau > 0)) fail(ErrorKind::Config, "info_nce: tau must be > 0");
  using namespace dense64;
  // Forward and backward in double, with a single rounding of each result.
  std::vector<double> na, nt;
  const Mat a = normalize_rows(from_tensor(anchors.value()), na);
  const Mat t = normalize_rows(from_tensor(targets.value()), nt);
  const Mat s = mul_nt(a, t);
  Mat gs;
  double loss = diagonal_nce(s, tau, gs);
  Mat ga = mul(gs, t), gt = mul_tn(gs, a);
  if (symmetric) {
    Mat st(s.cols, s.rows);
    for (std::size_t i = 0; i < s.rows; ++i)
      for (std::size_t j = 0; j < s.cols; ++j) st(j, i) = s(i, j);
    Mat gst;
    loss = 0.5 * (loss + diagonal_nce(st, tau, gst));
    const Mat gt2 = mul(gst, a), ga2 = mul_tn(gst, t);
    for (std::size_t i = 0; i < ga.v.size(); ++i) {
      ga.v[i] = 0.5 * (ga.v[i] + ga2.v[i]);
      gt.v[i] = 0.5 * (gt.v[i] + gt2.v[i]);
    }
  }
  const Mat da = normalize_backward(a, na, ga), dt = normalize_backward(t, nt, gt);
  return make_op(Tensor({1}, static_cast<real>(loss)), {anchors, targets}, [da, dt](Node& self) {
    const double up = self.grad[0];
    if (self.parents[0]->requires_grad) accumulate(self.parents[0]->grad_buffer(), da, up);
    if (self.parents[1]->requires_grad) accumulate(self.parents[1]->grad_buffer(), dt, up);
  });
}

Var clip_loss(const Var& f_c, const Var& img, const Var& txt, double tau, bool symmetric) {
  return ops::add(info_nce(f_c, img, tau, symmetric), info_nce(f_c, txt, tau, symmetric));
}

Var action_loss(const Var& f_a, const Var& act, double tau, bool symmetric) {
  return info_nce(f_a, act, tau, symmetric);
}

Var cls_loss(const Var& logits, const Tensor& labels, double gamma, double focal_mix) {
  return ops::sigmoid_focal_bce(logits, labels, gamma, focal_mix);
}

Stage1Terms stage1_loss(const Stage1Inputs& in, const Stage1Weights& w) {
  w.validate();
  const Var clip = clip_loss(in.f_c, in.img, in.txt, w.tau, w.symmetric_info_nce);
  const Var action = action_loss(in.f_a, in.act, w.tau, w.symmetric_info_nce);
  const Var cls = cls_loss(in.logits, in.labels, w.focal_gamma, w.focal_mix);
  Stage1Terms t;
  t.clip = clip.item();
  t.action = action.item();
  t.cls = cls.item();
  t.total = ops::add(ops::add(clip, ops::scale(action, w.lambda_action)), ops::scale(cls, w.lambda_cls));
  return t;
}

MOM_NS_END
