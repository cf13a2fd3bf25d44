// Copyright 2026 The momrecon Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "mom/autograd.hpp"

MOM_NS_BEGIN

struct Stage1Weights {
  double tau = 0.07;
  double lambda_action = 0.1;
  double lambda_cls = 10.0;
  double focal_gamma = 2.0;
  double focal_mix = 0.5;
  /// Average anchor->target and target->anchor directions.
  bool symmetric_info_nce = false;

  void validate() const;
};

/// Contrastive loss of anchors[i] against targets[j] with in-batch negatives:
/// -(1/B) sum_i log softmax_j(a_i . t_j / tau)[i]. Rows are L2-normalized
/// first, so the logits are cosine similarities over tau.
Var info_nce(const Var& anchors, const Var& targets, double tau, bool symmetric = false);

/// info_nce(f_c, img) + info_nce(f_c, txt)
Var clip_loss(const Var& f_c, const Var& img, const Var& txt, double tau, bool symmetric = false);

/// info_nce(f_a, act)
Var action_loss(const Var& f_a, const Var& act, double tau, bool symmetric = false);

/// Multi-label loss over sigmoid logits: (1-mix)*BCE + mix*focal, averaged.
Var cls_loss(const Var& logits, const Tensor& labels, double gamma, double focal_mix);

/// Head outputs and targets for one batch. `img` is the consolidated image
/// embedding, `f_a` the action projection of the global token and `logits`
/// the class head output.
struct Stage1Inputs {
  Var f_c;     // [B x d_clip]
  Var img;     // [B x d_clip]
  Var txt;     // [B x d_clip]
  Var f_a;     // [B x d_act]
  Var act;     // [B x d_act]
  Var logits;  // [B x n_classes]
  Tensor labels;
};

struct Stage1Terms {
  Var total;
  double clip = 0, action = 0, cls = 0;
};

/// L_clip + lambda_action * L_action + lambda_cls * L_cls
Stage1Terms stage1_loss(const Stage1Inputs& in, const Stage1Weights& w);

MOM_NS_END
