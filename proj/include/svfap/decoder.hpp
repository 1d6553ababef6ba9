// Copyright (c) 2026, SVFAP contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "svfap/attention.hpp"
#include "svfap/config.hpp"
#include "svfap/masking.hpp"

namespace svfap {

/// decoder.proj.{weight,bias}, decoder.mask_token, decoder.blocks.<j>.*,
/// decoder.head.{weight,bias}.
void init_decoder(ParamStore& store, const ArchConfig& cfg, Rng& rng);

/// Visible encoder features (N_vis x C) to pixel predictions for all N
/// lattice positions (N x patch_dim).
Var decode(Bindings& b, const ArchConfig& cfg, Var visible, const TubeMask& mask);

/// Per-pixel mean squared error over masked positions only. Throws
/// std::invalid_argument when the mask hides nothing.
Var reconstruction_loss(Var pred, const Matrix& target, const TubeMask& mask);

}  // namespace svfap
