#pragma once

#include <torch/torch.h>

#include <vector>

#include "spdnet/grid.hpp"

namespace spdnet {

// (N,1,H,W) float tensor from images of equal shape.
torch::Tensor images_to_tensor(const std::vector<Image>& images);
// (N,H,W) int64 class ids.
torch::Tensor labels_to_tensor(const std::vector<LabelMap>& labels);
// (N,C,H,W) one-hot from (N,H,W) class ids.
torch::Tensor one_hot_classes(const torch::Tensor& labels, std::int64_t num_classes);

// Per-pixel argmax of an (1,C,H,W) or (C,H,W) probability map.
LabelMap argmax_labels(const torch::Tensor& probs, const Spacing& spacing);
Grid<float> tensor_to_grid(const torch::Tensor& t);  // any 2-D-viewable tensor

inline bool all_finite(const torch::Tensor& t) { return torch::isfinite(t).all().item<bool>(); }

}  // namespace spdnet
